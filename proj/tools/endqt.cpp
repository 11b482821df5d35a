// endqt: spin-bath decoherence, stable determination chains, quantum and
// classical causal models, and a Mach-Zehnder model, from one command line.
//
// endqt <scenario> [--config file.json] [--seed N] [--out dir] [flags...]
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "endqt/causal_classical.hpp"
#include "endqt/causal_quantum.hpp"
#include "endqt/decoherence.hpp"
#include "endqt/format.hpp"
#include "endqt/interferometer.hpp"
#include "endqt/sdc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace endqt;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(context + ": unknown field `" + key + "`");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field `" + key + "` has the wrong type");
  }
}

json round_doubles(const json& j) {
  if (j.is_number_float()) return round12(j.get<double>());
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(round_doubles(v));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = round_doubles(v);
    return out;
  }
  return j;
}

class RunContext {
 public:
  explicit RunContext(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
      throw std::runtime_error("cannot create output directory " + dir_.string());
  }

  const fs::path& dir() const { return dir_; }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    artifacts_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) {
    auto os = open(name);
    os << round_doubles(j).dump(2) << '\n';
  }

  void finish(const std::string& scenario, const json& parameters,
              const json& headlines) {
    json report;
    report["scenario"] = scenario;
    report["parameters"] = parameters;
    report["headlines"] = headlines;
    report["artifacts"] = artifacts_;
    write_json("report.json", report);
    for (const auto& a : artifacts_)
      if (!fs::exists(dir_ / a))
        throw std::runtime_error("artifact missing at exit: " + a);
  }

 private:
  fs::path dir_;
  std::vector<std::string> artifacts_;
};

CouplingDistribution parse_coupling(const json& cfg, std::uint64_t default_seed) {
  if (!cfg.contains("coupling")) return CouplingDistribution::uniform01(default_seed);
  const json& c = cfg.at("coupling");
  check_keys(c, {"kind", "lo", "hi", "values", "seed"}, "coupling");
  const std::string kind = get_or<std::string>(c, "kind", "uniform");
  if (kind == "fixed") {
    auto values = get_or<std::vector<double>>(c, "values", {});
    if (values.empty()) throw ConfigError("coupling.values: required for kind=fixed");
    return CouplingDistribution::make_fixed(values);
  }
  if (kind != "uniform") throw ConfigError("coupling.kind: must be uniform or fixed");
  return CouplingDistribution::make_uniform(
      get_or<double>(c, "lo", 0.0), get_or<double>(c, "hi", 1.0),
      get_or<std::uint64_t>(c, "seed", default_seed));
}

std::uint64_t require_seed(const json& cfg) {
  if (!cfg.contains("seed")) throw ConfigError("seed: required for this scenario");
  return cfg.at("seed").get<std::uint64_t>();
}

TimeGrid parse_grid(const json& cfg) {
  TimeGrid grid;
  grid.t_max = get_or<double>(cfg, "t_max", 10.0);
  grid.dt = get_or<double>(cfg, "dt", 0.01);
  if (!(grid.dt > 0) || !(grid.t_max > 0))
    throw ConfigError("t_max/dt: must be positive");
  return grid;
}

void emit_plot_data(const DecoherenceTrace& trace, std::ostream& os) {
  if (trace.times.empty()) throw std::runtime_error("empty trace");
  os << "t,abs_z\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    os << fmt12(trace.times[i]) << ',' << fmt12(std::abs(trace.z[i])) << '\n';
}

// ---------------------------------------------------------------- trace ----

json run_trace(const json& cfg, RunContext& ctx) {
  check_keys(cfg,
             {"scenario", "seed", "g_values", "coupling", "t_max", "dt",
              "epsilon", "window", "draws"},
             "trace");
  const std::uint64_t seed = require_seed(cfg);
  const auto g_values = get_or<std::vector<int>>(cfg, "g_values", {30});
  const double epsilon = get_or<double>(cfg, "epsilon", 0.1);
  const double window = get_or<double>(cfg, "window", 5.0);
  const int draws = get_or<int>(cfg, "draws", 32);
  const TimeGrid grid = parse_grid(cfg);
  const auto dist = parse_coupling(cfg, seed);

  json per_g = json::array();
  for (int g_count : g_values) {
    if (g_count < 1) throw ConfigError("g_values: bath sizes must be positive");
    const auto g = dist.sample(static_cast<std::size_t>(g_count), 0);
    auto trace = trace_for_couplings(g, grid);
    auto t_dec = estimate_decoherence_time(trace, epsilon, window);
    std::optional<double> gamma;
    try {
      gamma = fit_gaussian_decay(trace);
    } catch (const std::invalid_argument&) {
    }
    trace.gamma = gamma;
    trace.decoherence_time = t_dec;

    const std::string tag = "G" + std::to_string(g_count);
    {
      auto os = ctx.open("trace_" + tag + ".csv");
      write_trace_csv(trace, os);
    }
    {
      auto os = ctx.open("zplot_" + tag + ".csv");
      emit_plot_data(trace, os);
    }
    auto stats = mean_decoherence_time(g_count, dist, epsilon, window, grid, draws);
    json side;
    side["bath_size"] = g_count;
    side["gamma"] = gamma ? json(*gamma) : json(nullptr);
    side["decoherence_time"] = t_dec ? json(*t_dec) : json(nullptr);
    side["mean_decoherence_time"] = stats.found ? json(stats.mean) : json(nullptr);
    side["stddev_decoherence_time"] =
        stats.found ? json(stats.stddev) : json(nullptr);
    side["draws_with_decoherence"] = stats.found;
    side["draws"] = stats.total;
    side["epsilon"] = epsilon;
    side["window"] = window;
    ctx.write_json("trace_" + tag + ".json", side);
    per_g.push_back(side);
  }
  json headlines;
  headlines["traces"] = per_g;
  return headlines;
}

// ------------------------------------------------------------------ sdc ----

json run_sdc(const json& cfg, RunContext& ctx) {
  check_keys(cfg,
             {"scenario", "seed", "layers", "last_layer", "group_size", "delta",
              "coupling", "epsilon", "window", "t_max", "dt",
              "dissolve_after_layer", "target_p_plus", "calibration_seeds",
              "trace_groups", "node_cap"},
             "sdc");
  sdc::ChainConfig chain;
  chain.seed = require_seed(cfg);
  chain.num_layers = get_or<int>(cfg, "layers", 2);
  chain.last_layer_count = get_or<std::int64_t>(cfg, "last_layer", 1);
  chain.group_size = get_or<int>(cfg, "group_size", 1);
  chain.coupling_dist = parse_coupling(cfg, chain.seed);
  chain.epsilon = get_or<double>(cfg, "epsilon", 0.1);
  chain.window = get_or<double>(cfg, "window", 5.0);
  chain.grid = parse_grid(cfg);
  chain.target_p_plus = get_or<double>(cfg, "target_p_plus", 0.5);
  chain.calibration_seeds = get_or<int>(cfg, "calibration_seeds", 32);
  chain.trace_groups = get_or<int>(cfg, "trace_groups", 4);
  chain.node_cap = get_or<std::int64_t>(cfg, "node_cap", 10'000'000);
  if (cfg.contains("dissolve_after_layer"))
    chain.dissolve_after_layer = cfg.at("dissolve_after_layer").get<int>();
  if (cfg.contains("delta") && !cfg.at("delta").is_string())
    chain.step_duration = cfg.at("delta").get<double>();

  const auto graph = sdc::build_graph(chain);
  auto violations = sdc::validate_cdc(graph);
  if (!violations.empty())
    throw std::runtime_error("built graph failed validation: " +
                             violations.front().message);
  auto log = sdc::simulate_chain(chain);
  {
    auto os = ctx.open("events.csv");
    sdc::write_events_csv(graph, log, os);
  }

  std::vector<double> step_times;
  json steps = json::array();
  for (const auto& s : log.steps) {
    json row;
    row["step"] = s.step;
    row["basis"] = sdc::basis_name(s.basis);
    row["sampled_groups"] = s.sampled_groups;
    row["mean_decoherence_time"] =
        s.mean_decoherence_time ? json(*s.mean_decoherence_time) : json(nullptr);
    steps.push_back(row);
    if (s.mean_decoherence_time) step_times.push_back(*s.mean_decoherence_time);
  }
  json headlines;
  headlines["total_systems"] = sdc::count_events(chain);
  headlines["edges"] = sdc::edge_count(chain);
  headlines["group_interactions"] = sdc::interaction_count(chain);
  headlines["event_rows"] = log.system_entry_count();
  headlines["delta"] = log.delta;
  if (!log.final_events.empty())
    headlines["final_layer_time"] = log.final_events.front().time;
  headlines["per_step"] = steps;
  if (step_times.size() >= 2) {
    auto ordering = sdc::timescale_ordering_check(step_times);
    json oc;
    oc["pass"] = ordering.pass;
    oc["tolerance_factor"] = ordering.tolerance_factor;
    oc["violations"] = ordering.violations;
    headlines["timescale_ordering"] = oc;
  }
  return headlines;
}

// ----------------------------------------------------------------- bell ----

json bell_model_description(const std::vector<double>& angles_a,
                            const std::vector<double>& angles_b) {
  json model;
  model["nodes"] = json::array(
      {json{{"name", "source"}, {"input_dim", 4}, {"output_dim", 4}},
       json{{"name", "a"}, {"input_dim", 2}, {"output_dim", 1}, {"parents", {"source"}}},
       json{{"name", "b"}, {"input_dim", 2}, {"output_dim", 1}, {"parents", {"source"}}}});
  model["channels"] = json{{"source", "singlet preparation"},
                           {"a", "identity"},
                           {"b", "identity"}};
  model["instruments"] = json{{"a", angles_a}, {"b", angles_b}};
  return model;
}

json run_bell(const json& cfg, RunContext& ctx) {
  check_keys(cfg, {"scenario", "angles_a", "angles_b"}, "bell");
  const auto angles_a = get_or<std::vector<double>>(cfg, "angles_a", {0.0});
  const auto angles_b = get_or<std::vector<double>>(cfg, "angles_b", {0.0});
  if (angles_a.empty() || angles_b.empty())
    throw ConfigError("angles_a/angles_b: need at least one angle each");

  auto os = ctx.open("bell.csv");
  os << "setting_a,setting_b,outcome_a,outcome_b,p\n";
  json correlators = json::array();
  for (double a : angles_a) {
    for (double b : angles_b) {
      auto dist = qcm::bell_scenario(a, b);
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          os << fmt12(a) << ',' << fmt12(b) << ',' << dist.outcome_labels[0][x]
             << ',' << dist.outcome_labels[1][y] << ','
             << fmt12(dist.prob({x, y})) << '\n';
      json row;
      row["angle_a"] = a;
      row["angle_b"] = b;
      row["E"] = dist.product_expectation();
      correlators.push_back(row);
    }
  }
  ctx.write_json("scenario_model.json", bell_model_description(angles_a, angles_b));
  json headlines;
  headlines["correlators"] = correlators;
  return headlines;
}

// ----------------------------------------------------------------- chsh ----

json run_chsh(const json& cfg, RunContext& ctx) {
  check_keys(cfg, {"scenario", "angles"}, "chsh");
  auto def = qcm::tsirelson_angles();
  auto angles = get_or<std::vector<double>>(
      cfg, "angles", {def.a, def.a_prime, def.b, def.b_prime});
  if (angles.size() != 4) throw ConfigError("angles: expected four entries a,a',b,b'");
  const double s = qcm::chsh_value(angles[0], angles[1], angles[2], angles[3]);
  json out;
  out["angles"] = angles;
  out["E_ab"] = qcm::bell_correlator(angles[0], angles[2]);
  out["E_ab_prime"] = qcm::bell_correlator(angles[0], angles[3]);
  out["E_a_prime_b"] = qcm::bell_correlator(angles[1], angles[2]);
  out["E_a_prime_b_prime"] = qcm::bell_correlator(angles[1], angles[3]);
  out["S"] = s;
  out["classical_bound"] = ccm::lhv_chsh_max();
  out["model"] = bell_model_description({angles[0], angles[1]},
                                        {angles[2], angles[3]});
  ctx.write_json("chsh.json", out);
  json headlines;
  headlines["S"] = s;
  return headlines;
}

// ------------------------------------------------------------------ ewf ----

json run_ewf(const json& cfg, RunContext& ctx) {
  check_keys(cfg, {"scenario", "isolated", "wigner_angle_a", "wigner_angle_b"},
             "ewf");
  const bool isolated = get_or<bool>(cfg, "isolated", true);
  const double ta = get_or<double>(cfg, "wigner_angle_a", 0.0);
  const double tb = get_or<double>(cfg, "wigner_angle_b", 0.0);
  auto res = qcm::ewf_scenario(isolated, ta, tb);

  auto os = ctx.open("ewf.csv");
  for (const auto& name : res.dist.node_names) os << name << ',';
  os << "p\n";
  std::vector<int> digits(res.dist.node_names.size(), 0);
  for (std::size_t idx = 0; idx < res.dist.probabilities.size(); ++idx) {
    std::size_t rest = idx;
    for (int k = static_cast<int>(digits.size()) - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(rest % res.dist.outcome_labels[k].size());
      rest /= res.dist.outcome_labels[k].size();
    }
    for (std::size_t k = 0; k < digits.size(); ++k)
      os << res.dist.outcome_labels[k][digits[k]] << ',';
    os << fmt12(res.dist.probabilities[idx]) << '\n';
  }

  double wigner_corr = 0.0;
  for (std::size_t idx = 0; idx < res.dist.probabilities.size(); ++idx) {
    std::size_t rest = idx;
    std::vector<int> d(res.dist.node_names.size());
    for (int k = static_cast<int>(d.size()) - 1; k >= 0; --k) {
      d[k] = static_cast<int>(rest % res.dist.outcome_labels[k].size());
      rest /= res.dist.outcome_labels[k].size();
    }
    wigner_corr += res.dist.outcome_values[0][d[0]] *
                   res.dist.outcome_values[1][d[1]] * res.dist.probabilities[idx];
  }

  json headlines;
  headlines["isolated"] = isolated;
  headlines["parties"] = res.dist.node_names;
  if (isolated) headlines["reversal_fidelity"] = res.reversal_fidelity;
  headlines["wigner_correlator"] = wigner_corr;
  ctx.write_json("ewf.json", headlines);
  return headlines;
}

// ------------------------------------------------------------------- mz ----

json run_mz_scenario(const json& cfg, RunContext& ctx) {
  check_keys(cfg, {"scenario", "detector_d3", "sdc_connected"}, "mz");
  const bool d3 = get_or<bool>(cfg, "detector_d3", false);
  const bool connected = get_or<bool>(cfg, "sdc_connected", true);
  auto res = mz::run_mz(d3, connected);
  {
    auto os = ctx.open("state.csv");
    mz::write_state_csv(res.final_state, os);
  }
  json headlines;
  headlines["detector_d3"] = d3;
  headlines["sdc_connected"] = connected;
  if (res.probabilities) {
    json table;
    for (const auto& [k, v] : *res.probabilities) table[k] = v;
    headlines["probabilities"] = table;
  } else {
    headlines["probabilities"] = nullptr;
    headlines["note"] = "isolated detector: no determinate outcomes";
  }
  ctx.write_json("mz.json", headlines);
  return headlines;
}

// ------------------------------------------------------------------ ccm ----

ccm::ClassicalDag parse_dag(const json& cfg) {
  if (!cfg.contains("dag")) return ccm::ClassicalDag::example_five_node();
  const json& d = cfg.at("dag");
  check_keys(d, {"nodes", "edges"}, "dag");
  std::vector<std::string> names;
  std::vector<int> cards;
  for (const auto& n : d.at("nodes")) {
    check_keys(n, {"name", "card"}, "dag.nodes");
    names.push_back(n.at("name").get<std::string>());
    cards.push_back(get_or<int>(n, "card", 2));
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : d.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("dag.edges: entries must be [from, to]");
    edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  }
  return ccm::ClassicalDag::make(names, cards, edges);
}

json run_ccm(const json& cfg, RunContext& ctx) {
  check_keys(cfg, {"scenario", "seed", "dag", "table", "queries"}, "ccm");
  auto dag = parse_dag(cfg);

  ccm::JointTable table;
  if (cfg.contains("table")) {
    check_keys(cfg.at("table"), {"p"}, "table");
    table = ccm::JointTable::make(
        dag.names, dag.cards, cfg.at("table").at("p").get<std::vector<double>>());
  } else {
    SplitRng rng(require_seed(cfg));
    table = ccm::JointTable::random_markov(dag, rng);
  }

  auto markov = ccm::markov_check(dag, table);

  json queries = cfg.contains("queries") ? cfg.at("queries") : json();
  if (queries.is_null() && !cfg.contains("dag")) {
    // default workload: the built-in graph's pinned independencies
    queries = json::object();
    queries["dsep"] =
        json::array({json{{"x", {"B"}}, {"y", {"C", "E"}}, {"z", {"A"}}},
                     json{{"x", {"C"}}, {"y", {"B"}}, {"z", {"A"}}},
                     json{{"x", {"D"}}, {"y", {"A", "E"}}, {"z", {"B", "C"}}},
                     json{{"x", {"E"}}, {"y", {"A", "B", "D"}}, {"z", {"C"}}}});
    queries["crccp"] = json::array({json::array({"B", "C"})});
  }

  json dsep_results = json::array();
  if (queries.is_object() && queries.contains("dsep")) {
    for (const auto& q : queries.at("dsep")) {
      check_keys(q, {"x", "y", "z"}, "queries.dsep");
      auto to_idx = [&](const json& arr) {
        std::vector<int> out;
        for (const auto& s : arr) out.push_back(dag.index_of(s.get<std::string>()));
        return out;
      };
      auto x = to_idx(q.at("x"));
      auto y = to_idx(q.at("y"));
      auto z = to_idx(q.contains("z") ? q.at("z") : json::array());
      json row = q;
      row["d_separated"] = ccm::d_separated(dag, x, y, z);
      row["conditionally_independent"] =
          ccm::conditionally_independent(table, x, y, z);
      dsep_results.push_back(row);
    }
  }

  json crccp_results = json::array();
  if (queries.is_object() && queries.contains("crccp")) {
    for (const auto& pair : queries.at("crccp")) {
      auto res = ccm::crccp_screening_set(
          dag, table, pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      json row;
      row["pair"] = pair;
      switch (res.kind) {
        case ccm::CrccpResult::Kind::uncorrelated:
          row["kind"] = "uncorrelated";
          break;
        case ccm::CrccpResult::Kind::directed_path:
          row["kind"] = "directed_path";
          break;
        case ccm::CrccpResult::Kind::screened:
          row["kind"] = "screened";
          row["screening_set"] = res.screening_set;
          row["max_residual"] = res.max_residual;
          break;
      }
      crccp_results.push_back(row);
    }
  }

  json report;
  report["markov"] = markov.markov;
  report["markov_violations"] = markov.violations;
  report["dsep"] = dsep_results;
  report["crccp"] = crccp_results;
  ctx.write_json("ccm_report.json", report);

  json headlines;
  headlines["markov"] = markov.markov;
  headlines["dsep_checked"] = dsep_results.size();
  bool all_agree = true;
  for (const auto& row : dsep_results)
    all_agree = all_agree &&
                (row.at("d_separated") == row.at("conditionally_independent"));
  headlines["dsep_matches_ci"] = all_agree;
  return headlines;
}

// ------------------------------------------------------------- dispatch ----

using Runner = json (*)(const json&, RunContext&);

Runner runner_for(const std::string& scenario) {
  if (scenario == "trace") return run_trace;
  if (scenario == "sdc") return run_sdc;
  if (scenario == "bell") return run_bell;
  if (scenario == "chsh") return run_chsh;
  if (scenario == "ewf") return run_ewf;
  if (scenario == "mz") return run_mz_scenario;
  if (scenario == "ccm") return run_ccm;
  throw ConfigError("unknown scenario: " + scenario);
}

bool scenario_is_seeded(const std::string& scenario) {
  return scenario == "trace" || scenario == "sdc" || scenario == "ccm";
}

int thread_cap() {
  if (const char* env = std::getenv("ENDQT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run_one(const std::string& scenario, const json& cfg,
            const std::string& out_dir) {
  RunContext ctx{fs::path(out_dir)};
  const auto t0 = std::chrono::steady_clock::now();
  json headlines = runner_for(scenario)(cfg, ctx);
  ctx.finish(scenario, cfg, headlines);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << scenario << ": done in " << fmt12(secs) << " s, artifacts in "
            << ctx.dir().string() << "\n"
            << round_doubles(headlines).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum determination-chain simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int batch_seeds = 0;
  std::map<std::string, json> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option(
        "--seed",
        [&seed](const std::vector<std::string>& v) {
          seed = std::stoull(v.back());
          return true;
        },
        "64-bit seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--batch-seeds", batch_seeds,
                    "run this many consecutive seeds concurrently");
  };
  auto opt_num = [&](CLI::App* sub, const std::string& key) {
    sub->add_option(
        "--" + key,
        [&overrides, key](const std::vector<std::string>& v) {
          overrides[key] = std::stod(v.back());
          return true;
        },
        key);
  };
  auto opt_int = [&](CLI::App* sub, const std::string& key) {
    sub->add_option(
        "--" + key,
        [&overrides, key](const std::vector<std::string>& v) {
          overrides[key] = std::stoll(v.back());
          return true;
        },
        key);
  };
  auto opt_bool = [&](CLI::App* sub, const std::string& key) {
    sub->add_flag(
        "--" + key + ",!--no-" + key,
        [&overrides, key](std::int64_t count) { overrides[key] = count > 0; },
        key);
  };
  auto opt_vec = [&](CLI::App* sub, const std::string& key) {
    sub->add_option(
           "--" + key,
           [&overrides, key](const std::vector<std::string>& v) {
             json arr = json::array();
             for (const auto& s : v) arr.push_back(std::stod(s));
             overrides[key] = arr;
             return true;
           },
           key)
        ->expected(-1)
        ->delimiter(',')
        ->type_size(-1);
  };
  auto opt_ivec = [&](CLI::App* sub, const std::string& key) {
    sub->add_option(
           "--" + key,
           [&overrides, key](const std::vector<std::string>& v) {
             json arr = json::array();
             for (const auto& s : v) arr.push_back(std::stoll(s));
             overrides[key] = arr;
             return true;
           },
           key)
        ->expected(-1)
        ->delimiter(',')
        ->type_size(-1);
  };

  // nested coupling fields get flat flags
  auto add_coupling_flags = [&](CLI::App* sub) {
    sub->add_option(
        "--coupling_kind",
        [&overrides](const std::vector<std::string>& v) {
          overrides["coupling"]["kind"] = v.back();
          return true;
        },
        "uniform or fixed");
    for (const char* k : {"lo", "hi"}) {
      sub->add_option(
          std::string("--coupling_") + k,
          [&overrides, k](const std::vector<std::string>& v) {
            overrides["coupling"][k] = std::stod(v.back());
            return true;
          },
          k);
    }
    sub->add_option(
        "--coupling_seed",
        [&overrides](const std::vector<std::string>& v) {
          overrides["coupling"]["seed"] = std::stoull(v.back());
          return true;
        },
        "coupling stream seed");
    sub->add_option(
           "--coupling_values",
           [&overrides](const std::vector<std::string>& v) {
             json arr = json::array();
             for (const auto& s : v) arr.push_back(std::stod(s));
             overrides["coupling"]["values"] = arr;
             overrides["coupling"]["kind"] = "fixed";
             return true;
           },
           "fixed coupling list")
        ->expected(-1)
        ->delimiter(',')
        ->type_size(-1);
  };

  auto* trace = app.add_subcommand("trace", "decoherence factor traces");
  add_common(trace);
  opt_ivec(trace, "g_values");
  for (const char* k : {"t_max", "dt", "epsilon", "window"}) opt_num(trace, k);
  opt_int(trace, "draws");
  add_coupling_flags(trace);

  auto* sdc_cmd = app.add_subcommand("sdc", "stable determination chain");
  add_common(sdc_cmd);
  for (const char* k : {"layers", "last_layer", "group_size", "calibration_seeds",
                        "trace_groups", "dissolve_after_layer", "node_cap"})
    opt_int(sdc_cmd, k);
  for (const char* k : {"epsilon", "window", "t_max", "dt", "target_p_plus"})
    opt_num(sdc_cmd, k);
  add_coupling_flags(sdc_cmd);
  sdc_cmd->add_option(
      "--delta",
      [&overrides](const std::vector<std::string>& v) {
        if (v.back() == "auto")
          overrides["delta"] = "auto";
        else
          overrides["delta"] = std::stod(v.back());
        return true;
      },
      "step duration in seconds, or auto");

  auto* bell = app.add_subcommand("bell", "common-cause Bell correlations");
  add_common(bell);
  opt_vec(bell, "angles_a");
  opt_vec(bell, "angles_b");

  auto* chsh = app.add_subcommand("chsh", "CHSH value at four angles");
  add_common(chsh);
  opt_vec(chsh, "angles");

  auto* ewf = app.add_subcommand("ewf", "extended Wigner's friend scenario");
  add_common(ewf);
  opt_bool(ewf, "isolated");
  opt_num(ewf, "wigner_angle_a");
  opt_num(ewf, "wigner_angle_b");

  auto* mz_cmd = app.add_subcommand("mz", "Mach-Zehnder interferometer");
  add_common(mz_cmd);
  opt_bool(mz_cmd, "detector_d3");
  opt_bool(mz_cmd, "sdc_connected");

  auto* ccm_cmd = app.add_subcommand("ccm", "classical causal model checks");
  add_common(ccm_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const std::string scenario = app.get_subcommands().front()->get_name();
  try {
    json cfg;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot open config file " + config_path);
      try {
        cfg = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
      }
    }
    if (cfg.contains("scenario") &&
        cfg.at("scenario").get<std::string>() != scenario)
      throw ConfigError("scenario: config file names a different scenario");
    // scenario-specific fields may sit under "parameters"
    if (cfg.contains("parameters")) {
      json params = cfg.at("parameters");
      cfg.erase("parameters");
      if (!params.is_object()) throw ConfigError("parameters: expected an object");
      for (const auto& [k, v] : params.items()) cfg[k] = v;
    }
    if (cfg.contains("output_dir")) {
      out_dir = cfg.at("output_dir").get<std::string>();
      cfg.erase("output_dir");
    }
    cfg["scenario"] = scenario;
    for (const auto& [k, v] : overrides) {
      if (v.is_object() && cfg.contains(k) && cfg.at(k).is_object()) {
        for (const auto& [k2, v2] : v.items()) cfg[k][k2] = v2;
      } else {
        cfg[k] = v;
      }
    }
    if (seed) cfg["seed"] = *seed;

    if (batch_seeds > 0) {
      if (!scenario_is_seeded(scenario))
        throw ConfigError("batch-seeds: scenario `" + scenario +
                          "` is deterministic");
      if (!cfg.contains("seed")) throw ConfigError("seed: required");
      const std::uint64_t base = cfg.at("seed").get<std::uint64_t>();
      const int cap = thread_cap();
      std::vector<std::string> errors(batch_seeds);
      for (int start = 0; start < batch_seeds; start += cap) {
        std::vector<std::thread> pool;
        for (int k = start; k < std::min(batch_seeds, start + cap); ++k) {
          pool.emplace_back([&, k] {
            try {
              json local = cfg;
              local["seed"] = base + static_cast<std::uint64_t>(k);
              run_one(scenario, local,
                      (fs::path(out_dir) / ("seed_" + std::to_string(k))).string());
            } catch (const std::exception& e) {
              errors[k] = e.what();
            }
          });
        }
        for (auto& t : pool) t.join();
      }
      for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("batch run failed: " + e);
      return 0;
    }
    return run_one(scenario, cfg, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::overflow_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
