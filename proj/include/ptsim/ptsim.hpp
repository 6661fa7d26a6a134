#pragma once

// Everything except the HTTP binding, which pulls in cpp-httplib.
#include "ptsim/comparison.hpp"
#include "ptsim/discovery.hpp"
#include "ptsim/enrichment.hpp"
#include "ptsim/error.hpp"
#include "ptsim/event_log.hpp"
#include "ptsim/model_json.hpp"
#include "ptsim/process_tree.hpp"
#include "ptsim/random.hpp"
#include "ptsim/replay.hpp"
#include "ptsim/session.hpp"
#include "ptsim/simulator.hpp"
#include "ptsim/spectrum.hpp"
#include "ptsim/timestamp.hpp"
