#pragma once

#include <string>

#include <httplib.h>

#include "ptsim/session.hpp"

namespace ptsim {

// Routes every request through Service::handle. A multipart upload's "log"
// part becomes the request body; otherwise the raw body is used. Build with
// a large CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH (see CMakeLists.txt)
// so CSV bodies sent with a form content type are not rejected.
inline void mount(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    req.body = in.is_multipart_form_data() && in.has_file("log") ? in.get_file_value("log").content : in.body;
    // in.params also holds fields parsed from a form-encoded body; only the
    // URL query counts here.
    httplib::Params query;
    if (const auto q = in.target.find('?'); q != std::string::npos) httplib::detail::parse_query_text(in.target.substr(q + 1), query);
    for (const auto& [k, v] : query) req.query[k] = v;
    for (const auto& [k, v] : in.headers) req.headers[k] = v;
    const Response res = service.handle(req);
    out.status = res.status;
    for (const auto& [k, v] : res.headers) out.set_header(k, v);
    out.set_content(res.body, res.content_type);
  };
  const std::string any = R"(/.*)";
  server.Get(any, forward);
  server.Post(any, forward);
  server.Patch(any, forward);
}

}  // namespace ptsim
