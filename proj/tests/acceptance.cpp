// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. CLI-facing checks shell out to the ptsim binary; nothing here
// starts the HTTP service.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace ptsim;
using namespace ptsim::testing;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PTSIM_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("ptsim_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

const fs::path samples = PTSIM_SAMPLES_DIR;

// criteria -------------------------------------------------------------------

std::string swap_fixture_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const auto r = cli("compare " + quoted(samples / "swap_original.csv") + " " + quoted(samples / "swap_simulated.csv"));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(r.code == 0, "compare exited " + std::to_string(r.code) + ": " + r.out);
  const auto j = json::parse(r.out);
  const double emd = j.at("emd").get<double>();
  require(std::abs(emd - 0.245) <= 1e-9, "emd " + std::to_string(emd));

  const auto& plan = j.at("transport_plan");
  const auto rows = plan.at("row_variants").get<std::vector<Variant>>();
  const auto cols = plan.at("col_variants").get<std::vector<Variant>>();
  const auto flow = plan.at("flow").get<Matrix>();
  // relative frequencies counted straight from the CSVs
  auto frequencies = [](const fs::path& csv) {
    std::map<Variant, double> f;
    const auto log = ingest_csv_text(read_file(csv));
    for (const auto& t : log.traces()) {
      Variant v;
      for (const auto& e : t.events) v.push_back(e.activity);
      f[v] += 1.0 / static_cast<double>(log.size());
    }
    return f;
  };
  const auto fa = frequencies(samples / "swap_original.csv");
  const auto fb = frequencies(samples / "swap_simulated.csv");
  require(rows.size() == fa.size() && cols.size() == fb.size(), "plan shape");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = 0;
    for (double x : flow[i]) s += x;
    require(std::abs(s - fa.at(rows[i])) <= 1e-9, "row marginal " + variant_label(rows[i]));
  }
  for (std::size_t k = 0; k < cols.size(); ++k) {
    double s = 0;
    for (const auto& row : flow) s += row[k];
    require(std::abs(s - fb.at(cols[k])) <= 1e-9, "column marginal " + variant_label(cols[k]));
  }
  require(seconds < 1.0, "runtime " + std::to_string(seconds) + " s");
  std::ostringstream s;
  s << "emd=" << emd << " runtime=" << seconds << "s";
  return s.str();
}

std::string distance_cells() {
  const double x = trace_distance(seq({"a", "b", "c", "d"}), seq({"a", "e", "c", "d"}));
  const double y = trace_distance(seq({"a", "b", "c", "d"}), seq({"a", "c", "b", "d"}));
  require(x == 0.25, "abcd/aecd = " + std::to_string(x));
  require(y == 0.5, "abcd/acbd = " + std::to_string(y));
  return "0.25, 0.5";
}

std::vector<int> hundredths(std::mt19937_64& gen, std::size_t n) {
  std::vector<int> cuts{0, 100};
  for (std::size_t i = 1; i < n; ++i) cuts.push_back(static_cast<int>(gen() % 101));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> out;
  for (std::size_t i = 1; i < cuts.size(); ++i) out.push_back(cuts[i] - cuts[i - 1]);
  return out;
}

std::string emd_oracle() {
  std::mt19937_64 gen(2024);
  const std::vector<Variant> pool{seq({"a"}),           seq({"a", "b"}),      seq({"b", "a"}), seq({"a", "b", "c"}),
                                  seq({"a", "c", "b"}), seq({"c"}),           seq({}),         seq({"b", "c", "d", "a"})};
  for (int k = 0; k < 200; ++k) {
    const std::size_t m = 1 + gen() % 3, n = 1 + gen() % 3;
    std::vector<Variant> rows, cols;
    while (rows.size() < m) {
      const auto& v = pool[gen() % pool.size()];
      if (std::find(rows.begin(), rows.end(), v) == rows.end()) rows.push_back(v);
    }
    while (cols.size() < n) {
      const auto& v = pool[gen() % pool.size()];
      if (std::find(cols.begin(), cols.end(), v) == cols.end()) cols.push_back(v);
    }
    const auto sa = hundredths(gen, m), sb = hundredths(gen, n);
    std::vector<double> fa, fb;
    for (int x : sa) fa.push_back(x / 100.0);
    for (int x : sb) fb.push_back(x / 100.0);
    Matrix d(m, std::vector<double>(n)), back(n, std::vector<double>(m)), self(m, std::vector<double>(m));
    std::vector<std::vector<std::int64_t>> cost(m, std::vector<std::int64_t>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        d[i][j] = back[j][i] = static_cast<double>(levenshtein_oracle(rows[i], cols[j])) /
                               static_cast<double>(std::max<std::size_t>({rows[i].size(), cols[j].size(), 1}));
        cost[i][j] = std::llround(d[i][j] * 1e9);
      }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) self[i][j] = trace_distance(rows[i], rows[j]);

    const auto plan = solve_emd(fa, fb, d, 100);
    const auto expected = brute_force_transport(sa, sb, cost);
    require(plan.scaled_cost == expected, "instance " + std::to_string(k) + ": solver " + std::to_string(plan.scaled_cost) +
                                              " vs brute force " + std::to_string(expected));
    require(std::abs(plan.emd - static_cast<double>(expected) / 100 / 1e9) <= 1e-9, "emd vs integer cost");
    require(solve_emd(fa, fa, self, 100).emd == 0.0, "EMD(X,X) != 0 on instance " + std::to_string(k));
    require(std::abs(solve_emd(fb, fa, back, 100).emd - plan.emd) <= 1e-12, "asymmetric on instance " + std::to_string(k));
  }
  return "200 instances";
}

std::string levenshtein_oracle_check() {
  std::mt19937_64 gen(77);
  const std::vector<std::string> tokens{"register request", "decide", "a", "b", "c"};
  auto word = [&] {
    Variant v(gen() % 9);
    for (auto& x : v) x = tokens[gen() % tokens.size()];
    return v;
  };
  for (int k = 0; k < 1000; ++k) {
    const auto s = word();
    const auto t = k % 10 == 0 ? s : word();
    const double d = trace_distance(s, t);
    const double scaled = d * static_cast<double>(std::max(s.size(), t.size()));
    require(scaled == static_cast<double>(levenshtein_oracle(s, t)), "pair " + std::to_string(k));
    require(d == trace_distance(t, s), "symmetry on pair " + std::to_string(k));
    require((d == 0.0) == (s == t), "zero-iff-equal on pair " + std::to_string(k));
  }
  return "1000 pairs";
}

std::string discovery_fitness() {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 100; ++k) {
    const auto log = random_log(gen, 1 + static_cast<int>(gen() % 6), 50, 7);
    const auto tree = discover(log);
    const auto dist = variants(log);
    const int cap = replay_cap_for(dist);
    for (const auto& [v, n] : dist.counts)
      require(replay(tree, v, cap).fits, serialize(tree) + " rejects " + variant_label(v));
  }
  const auto r = cli("discover " + quoted(samples / "swap_original.csv"));
  require(r.code == 0, "discover exited " + std::to_string(r.code));
  const auto tree = parse_tree(r.out);
  const Lang expected{seq({"a", "b", "c", "d"}), seq({"a", "c", "b", "d"})};
  require(language(tree, 3, 10) == expected, "swap fixture tree " + serialize(tree) + " has a different language");
  return "100 random logs; swap fixture -> " + serialize(tree);
}

std::string simulator_invariants() {
  std::mt19937_64 gen(99);
  for (int k = 0; k < 50; ++k) {
    const auto m = random_model(gen);
    const SimulationConfig config{60, 0, static_cast<std::uint64_t>(1000 + k), std::nullopt};
    const auto r = simulate_detailed(m, config);
    const auto label = "run " + std::to_string(k) + " " + serialize(m.tree);
    for (const auto& t : r.log.traces())
      for (std::size_t i = 1; i < t.events.size(); ++i)
        require(t.events[i - 1].timestamp <= t.events[i].timestamp, label + ": timestamps go backwards");
    std::map<OrgName, std::vector<std::pair<Millis, int>>> sweep;
    for (const auto& s : r.schedule) {
      sweep[s.organization].emplace_back(s.started, +1);
      sweep[s.organization].emplace_back(s.completed, -1);
    }
    for (auto& [org, points] : sweep) {
      std::sort(points.begin(), points.end());
      int busy = 0;
      for (const auto& [t, delta] : points) {
        busy += delta;
        require(busy <= m.organizations.at(org).capacity, label + ": " + org + " over capacity");
      }
    }
    const auto bounded = unroll_loops(m.tree, 0, m.loop_params);
    for (const auto& [v, n] : variants(r.log).counts)
      require(replay(bounded, v, 1).fits, label + ": " + variant_label(v) + " breaks a loop bound");
    require(to_csv(simulate(m, config)) == to_csv(r.log), label + ": repeated seed differs");
  }
  // zero spread, no contention: every execution takes exactly its mean
  for (int k = 0; k < 20; ++k) {
    auto m = basic_model(serialize(random_tree(gen, 2 + static_cast<int>(gen() % 5), {"a", "b", "c", "d"}, true)));
    for (auto& [a, s] : m.activity_stats) s.mean_duration = static_cast<double>(1 + gen() % 500) / 4;
    m.arrival = 1e6;
    for (const auto& s : simulate_detailed(m, SimulationConfig{20, 0, static_cast<std::uint64_t>(k), std::nullopt}).schedule) {
      require(s.started == s.enqueued, "unexpected wait");
      require(s.completed - s.started == static_cast<Millis>(std::llround(m.activity_stats.at(s.activity).mean_duration * 1000)),
              "duration differs from mean for " + s.activity);
    }
  }
  return "50 randomized runs + 20 zero-spread runs";
}

std::string enrichment_oracle() {
  std::mt19937_64 gen(13);
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };

  const auto w = estimate_xor_weights(parse_tree("->( a, X( b, c ) )"), log_of({{seq({"a", "b"}), 70}, {seq({"a", "c"}), 30}}));
  require(close(w.at(2)[0], 0.7) && close(w.at(2)[1], 0.3), "70/30 fixture");

  // nested choices with unique labels: branch counts read off the traces
  const auto tree = parse_tree("->( s, X( ->( a, X( b, c, tau ) ), d ), X( e, f ) )");
  for (int k = 0; k < 30; ++k) {
    std::vector<std::pair<Variant, int>> groups;
    std::map<std::string, double> seen;
    for (const auto& mid : {seq({"a", "b"}), seq({"a", "c"}), seq({"a"}), seq({"d"})})
      for (const auto& end : {seq({"e"}), seq({"f"})}) {
        const int n = static_cast<int>(gen() % 5);
        if (n == 0) continue;
        Variant v{"s"};
        v.insert(v.end(), mid.begin(), mid.end());
        v.insert(v.end(), end.begin(), end.end());
        groups.emplace_back(v, n);
        for (const auto& x : v) seen[x] += n;
        if (mid.size() == 1 && mid[0] == "a") seen["tau"] += n;
      }
    if (groups.empty()) continue;
    const auto est = estimate_xor_weights(tree, log_of(groups));
    auto ratio = [](double x, double total, double n) { return total > 0 ? x / total : 1.0 / n; };
    const double outer = seen["a"] + seen["d"], inner = seen["b"] + seen["c"] + seen["tau"], last = seen["e"] + seen["f"];
    require(close(est.at(2)[0], ratio(seen["a"], outer, 2)) && close(est.at(2)[1], ratio(seen["d"], outer, 2)), "outer XOR");
    require(close(est.at(5)[0], ratio(seen["b"], inner, 3)) && close(est.at(5)[2], ratio(seen["tau"], inner, 3)), "inner XOR");
    require(close(est.at(10)[1], ratio(seen["f"], last, 2)), "last XOR");
  }

  // loops: each trace redoes the body k times
  const auto loop_tree = parse_tree("->( s, *( a, b ), e )");
  for (int k = 0; k < 30; ++k) {
    std::vector<std::pair<Variant, int>> groups;
    double redos = 0, completions = 0;
    int most = 0;
    for (int t = 0; t < 1 + static_cast<int>(gen() % 8); ++t) {
      const int r = static_cast<int>(gen() % 4);
      Variant v{"s", "a"};
      for (int i = 0; i < r; ++i) v.insert(v.end(), {"b", "a"});
      v.push_back("e");
      groups.emplace_back(v, 1);
      redos += r;
      completions += r + 1;
      most = std::max(most, r);
    }
    const auto p = estimate_loop_params(loop_tree, log_of(groups)).at(2);
    require(close(p.redo_probability, redos / completions), "loop probability");
    require(p.max_redos == std::max(most, 1), "loop max redos");
  }

  // activity stats: two-pass mean and population deviation of the gaps
  for (int k = 0; k < 30; ++k) {
    std::vector<Event> events;
    for (int c = 0; c < 25; ++c) {
      Millis t = static_cast<Millis>(gen() % 1'000'000);
      for (int i = 0; i < 1 + static_cast<int>(gen() % 6); ++i) {
        t += static_cast<Millis>(gen() % 9'000'000);
        events.push_back(Event{std::to_string(c), std::string(1, static_cast<char>('a' + gen() % 4)), "", t});
      }
    }
    const auto log = make_log(events);
    std::map<Activity, std::vector<double>> samples_of;
    for (const auto& t : log.traces())
      for (std::size_t i = 1; i < t.events.size(); ++i)
        samples_of[t.events[i].activity].push_back(static_cast<double>(t.events[i].timestamp - t.events[i - 1].timestamp) / 1000);
    const auto stats = estimate_activity_stats(log);
    for (const auto& [a, xs] : samples_of) {
      double mean = 0, var = 0;
      for (double x : xs) mean += x / static_cast<double>(xs.size());
      for (double x : xs) var += (x - mean) * (x - mean) / static_cast<double>(xs.size());
      require(std::abs(stats.at(a).mean_duration - mean) <= 1e-9 * std::max(1.0, mean), "mean of " + a);
      require(std::abs(stats.at(a).std_duration - std::sqrt(var)) <= 1e-9 * std::max(1.0, std::sqrt(var)), "std of " + a);
    }
  }
  return "XOR, loop and duration estimates agree";
}

EnrichedTree preaccepted_model(const EventLog& log) {
  return enrich(parse_tree("->( submitted, X( tau, preaccepted ), accepted, X( finalized, rejected ) )"), log);
}

std::string behavior_fractions() {
  std::mt19937_64 gen(3);
  for (int k = 0; k < 20; ++k) {
    const auto log = random_log(gen, 4, 30);
    const auto d = behavior_delta(variants(log), variants(log));
    require(d.new_fraction == 0.0 && d.removed_fraction == 0.0, "identical logs not (0,0)");
  }

  const auto original = log_of({{seq({"submitted", "accepted", "finalized"}), 20},
                                {seq({"submitted", "accepted", "rejected"}), 10},
                                {seq({"submitted", "preaccepted", "accepted", "finalized"}), 15},
                                {seq({"submitted", "preaccepted", "accepted", "rejected"}), 5}});
  ParameterPatch patch;
  patch.replace_subtree.push_back(SubtreeReplacement{std::string("X( tau, preaccepted )"), "preaccepted"});
  const auto patched = apply_patch(preaccepted_model(original), patch);
  const auto simulated = simulate(patched, SimulationConfig{300, 0, 11, std::nullopt});
  const auto d = behavior_delta(variants(original), variants(simulated));
  std::set<Variant> skipping, removed(d.removed_variants.begin(), d.removed_variants.end());
  for (const auto& [v, n] : variants(original).counts)
    if (std::find(v.begin(), v.end(), "preaccepted") == v.end()) skipping.insert(v);
  require(d.removed_fraction > 0, "removed_fraction is 0");
  require(removed == skipping, "removed variants are not exactly the skipping ones");

  // direction check: 8-variant log, simulated trace count at 25..100% of it
  std::vector<std::pair<Variant, int>> groups;
  const int counts[] = {60, 40, 25, 15, 10, 6, 3, 1};
  int i = 0;
  for (const char* x : {"b", "c"})
    for (const char* y : {"d", "e"})
      for (const char* z : {"f", "g"}) groups.emplace_back(Variant{"a", x, y, z}, counts[i++]);
  const auto base = log_of(groups);
  const auto model = enrich(discover(base), base);
  std::vector<double> levels, means;
  for (int pct : {25, 50, 75, 100}) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto n = static_cast<std::uint64_t>(base.size() * static_cast<std::size_t>(pct) / 100);
      sum += behavior_delta(variants(base), variants(simulate(model, SimulationConfig{n, 0, seed, std::nullopt}))).removed_fraction;
    }
    levels.push_back(pct);
    means.push_back(sum / 10);
  }
  const double rho = spearman(levels, means);
  std::ostringstream s;
  s << "removed fraction " << d.removed_fraction << "; means";
  for (double m : means) s << " " << m;
  s << "; spearman " << rho;
  require(rho <= 0, s.str());
  return s.str();
}

std::string spectrum_oracle() {
  const auto hand = spectrum(make_log({Event{"1", "a", "", 0}, Event{"1", "b", "", 10'000}, Event{"1", "c", "", 30'000},
                                       Event{"2", "a", "", 0}, Event{"2", "b", "", 20'000}}));
  require(hand.size() == 2, "segment count");
  require(hand.at({"a", "b"}).frequency == 2 && hand.at({"a", "b"}).avg_time == 15.0, "(a,b)");
  require(hand.at({"b", "c"}).frequency == 1 && hand.at({"b", "c"}).avg_time == 20.0, "(b,c)");

  std::mt19937_64 gen(61);
  for (int k = 0; k < 100; ++k) {
    const auto log = random_log(gen, 5, 30, 9);
    std::uint64_t freq = 0, expected = 0;
    for (const auto& [seg, st] : spectrum(log)) freq += st.frequency;
    for (const auto& t : log.traces()) expected += t.events.size() - 1;
    require(freq == expected, "frequency sum on random log " + std::to_string(k));
  }

  // Making preaccepted mandatory adds load to a shared single-capacity team;
  // (accepted, finalized) slows down although neither activity changed.
  auto downstream = [](int capacity) {
    auto m = basic_model("->( submitted, X( tau, preaccepted ), accepted, finalized )", 30, capacity);
    m.xor_weights[2] = {1.0, 0.0};
    m.arrival = 100;
    ParameterPatch p;
    p.replace_subtree.push_back(SubtreeReplacement{std::string("X( tau, preaccepted )"), "preaccepted"});
    const SimulationConfig config{40, 0, 1, std::nullopt};
    const auto before = simulate(m, config);
    const auto after = simulate(apply_patch(m, p), config);
    for (const auto& r : spectrum_diff(before, after))
      if (r.segment == Segment{"accepted", "finalized"}) return r.avg_time_delta;
    throw Failure("segment (accepted,finalized) missing");
  };
  const double contended = downstream(1), free = downstream(1000);
  require(contended != 0.0, "no downstream effect under contention");
  require(free == 0.0, "delta without contention: " + std::to_string(free));
  return "(accepted,finalized) delta " + std::to_string(contended) + " s";
}

std::string cli_round_trip() {
  const auto dir = scratch();
  const auto model = dir / "model.json", sim = dir / "sim.csv", again = dir / "again.csv";
  auto r = cli("enrich " + quoted(samples / "swap_original.csv") + " -o " + quoted(model));
  require(r.code == 0, "enrich: " + r.out);
  r = cli("simulate --model " + quoted(model) + " --cases 150 --seed 42 -o " + quoted(sim));
  require(r.code == 0, "simulate: " + r.out);
  r = cli("simulate --model " + quoted(model) + " --cases 150 --seed 42 -o " + quoted(again));
  require(r.code == 0, "simulate again: " + r.out);
  const auto csv = read_file(sim);
  require(csv == read_file(again), "same seed produced different bytes");
  const auto log = ingest_csv_text(csv);
  require(log.size() == 150, "case count " + std::to_string(log.size()));
  require(ingest_csv_text(to_csv(log)) == log, "re-ingest is lossy");
  r = cli("compare " + quoted(sim) + " " + quoted(sim));
  require(r.code == 0, "compare: " + r.out);
  const auto j = json::parse(r.out);
  require(j.at("emd").get<double>() == 0.0, "self EMD " + j.at("emd").dump());
  require(j.at("behavior_delta").at("new_fraction") == 0.0 && j.at("behavior_delta").at("removed_fraction") == 0.0,
          "self delta not (0,0)");
  r = cli("spectrum " + quoted(sim) + " " + quoted(sim));
  require(r.code == 0, "spectrum: " + r.out);
  for (const auto& rec : json::parse(r.out)) require(rec.at("presence") == "BOTH_SIMILAR", "self spectrum differs");
  return "150 cases, CLI only";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"Reference EMD on the swap fixture", swap_fixture_reproduction},
      {"Distance cells", distance_cells},
      {"EMD oracle", emd_oracle},
      {"Levenshtein oracle", levenshtein_oracle_check},
      {"Discovery fitness", discovery_fitness},
      {"Simulator invariants", simulator_invariants},
      {"Enrichment oracle", enrichment_oracle},
      {"Behavior-fraction properties", behavior_fractions},
      {"Spectrum oracle", spectrum_oracle},
      {"CLI round-trip", cli_round_trip},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    try {
      const auto detail = check();
      std::cout << "PASS  " << name << "  (" << detail << ")\n";
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL  " << name << "  (" << e.what() << ")\n";
    }
  }
  std::error_code ec;
  fs::remove_all(scratch(), ec);
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
