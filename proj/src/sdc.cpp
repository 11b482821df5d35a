#include "endqt/sdc.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "endqt/format.hpp"
#include "endqt/rng.hpp"

namespace endqt::sdc {

namespace {

void check_config(const ChainConfig& cfg) {
  if (cfg.num_layers < 2) throw std::invalid_argument("num_layers must be >= 2");
  if (cfg.last_layer_count < 1)
    throw std::invalid_argument("last_layer must be >= 1");
  if (cfg.group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (cfg.target_p_plus < 0.0 || cfg.target_p_plus > 1.0)
    throw std::invalid_argument("target_p_plus must be in [0, 1]");
  if (cfg.dissolve_after_layer &&
      (*cfg.dissolve_after_layer < 0 ||
       *cfg.dissolve_after_layer >= cfg.last_layer_index()))
    throw std::out_of_range("dissolve_after_layer must be in [0, N)");
}

Basis step_basis(int step) { return step % 2 == 0 ? Basis::z : Basis::x; }

// Streams per node, disjoint for the two roles a system can play.
double sample_pm1(const ChainConfig& cfg, NodeId node, bool as_target,
                  double p_plus) {
  SplitRng rng = SplitRng(cfg.seed).split(2 * static_cast<std::uint64_t>(node) +
                                          (as_target ? 1 : 0));
  return rng.next_double() < p_plus ? 1.0 : -1.0;
}

}  // namespace

std::int64_t layer_size(const ChainConfig& cfg, int layer) {
  check_config(cfg);
  const int n = cfg.last_layer_index();
  if (layer < 0 || layer > n) throw std::out_of_range("layer index out of range");
  std::int64_t size = cfg.last_layer_count;
  for (int i = n; i > layer; --i) {
    if (size > cfg.node_cap / cfg.group_size)
      throw std::overflow_error("layer size exceeds the node cap");
    size *= cfg.group_size;
  }
  return size;
}

std::int64_t count_events(const ChainConfig& cfg) {
  check_config(cfg);
  std::int64_t total = 0;
  for (int i = 0; i <= cfg.last_layer_index(); ++i) {
    total += layer_size(cfg, i);
    if (total > cfg.node_cap)
      throw std::overflow_error("configuration exceeds the node cap");
  }
  return total;
}

std::int64_t edge_count(const ChainConfig& cfg) {
  return count_events(cfg) - cfg.last_layer_count;
}

std::int64_t interaction_count(const ChainConfig& cfg) {
  return count_events(cfg) - layer_size(cfg, 0);
}

SdcGraph build_graph(const ChainConfig& cfg) {
  const std::int64_t total = count_events(cfg);  // validates the cap
  const int n = cfg.last_layer_index();

  SdcGraph g;
  g.layers.resize(cfg.num_layers);
  g.layer_offsets.resize(cfg.num_layers);
  g.nodes.reserve(total);
  g.edges.reserve(total - cfg.last_layer_count);

  std::int64_t offset = 0;
  for (int layer = 0; layer <= n; ++layer) {
    const std::int64_t count = layer_size(cfg, layer);
    g.layers[layer] = LayerInfo{count, cfg.group_size, step_basis(layer)};
    g.layer_offsets[layer] = offset;
    for (std::int64_t j = 1; j <= count; ++j) {
      SystemNode node;
      node.layer = layer;
      node.index = j;
      // Layers that feed a next layer split into groups of G; the last layer
      // forms a single group.
      node.group = layer < n ? (j - 1) / cfg.group_size + 1 : 1;
      node.is_initiator = (layer == 0);
      node.position = {static_cast<double>(j), static_cast<double>(layer), 0.0};
      g.nodes.push_back(node);
    }
    offset += count;
  }
  for (int layer = 0; layer < n; ++layer) {
    const std::int64_t count = g.layers[layer].count;
    for (std::int64_t j = 1; j <= count; ++j) {
      const NodeId env = g.node_id(layer, j);
      const NodeId target = g.node_id(layer + 1, (j - 1) / cfg.group_size + 1);
      g.nodes[env].has_dc_for = target;
      g.edges.emplace_back(env, target);
    }
  }
  return g;
}

std::vector<CdcViolation> validate_cdc(const SdcGraph& graph) {
  std::vector<CdcViolation> out;
  const int n_layers = graph.num_layers();

  for (NodeId id = 0; id < static_cast<NodeId>(graph.nodes.size()); ++id) {
    const auto& node = graph.nodes[id];
    if (node.is_initiator != (node.layer == 0))
      out.push_back({"CDC3", id,
                     node.is_initiator
                         ? "initiator flag outside layer 0"
                         : "layer-0 system not marked as an initiator"});
  }

  // Edges must run from one layer to the next; later steps presuppose the
  // earlier ones.
  std::vector<std::vector<NodeId>> parents(graph.nodes.size());
  for (const auto& [env, target] : graph.edges) {
    if (env < 0 || target < 0 ||
        env >= static_cast<NodeId>(graph.nodes.size()) ||
        target >= static_cast<NodeId>(graph.nodes.size())) {
      out.push_back({"CDC1", env, "edge endpoint out of range"});
      continue;
    }
    if (graph.nodes[target].layer != graph.nodes[env].layer + 1)
      out.push_back({"CDC1", env, "edge does not step to the next layer"});
    else
      parents[target].push_back(env);
  }

  // Value mereology: each non-initiator target needs its complete parent
  // group.
  for (NodeId id = 0; id < static_cast<NodeId>(graph.nodes.size()); ++id) {
    const auto& node = graph.nodes[id];
    if (node.layer == 0) continue;
    const auto& prev = graph.layers[node.layer - 1];
    const auto& in = parents[id];
    if (static_cast<int>(in.size()) != prev.group_size) {
      out.push_back({"CDC4", id,
                     "target has " + std::to_string(in.size()) +
                         " parents, expected " + std::to_string(prev.group_size)});
      continue;
    }
    std::int64_t group = graph.nodes[in.front()].group;
    bool same = true;
    for (NodeId p : in) same = same && graph.nodes[p].group == group;
    if (!same) out.push_back({"CDC4", id, "parents span multiple groups"});
  }

  for (int layer = 0; layer < n_layers; ++layer) {
    if (graph.layers[layer].step_basis != (layer % 2 == 0 ? Basis::z : Basis::x))
      out.push_back({"basis", graph.layer_offsets[layer],
                     "pointer basis does not alternate by step parity"});
  }
  return out;
}

EventLog simulate_chain(const ChainConfig& cfg) {
  check_config(cfg);
  const SdcGraph graph = build_graph(cfg);
  const int n = cfg.last_layer_index();
  const int last_step = cfg.dissolve_after_layer.value_or(n - 1);

  double delta;
  if (cfg.step_duration) {
    delta = *cfg.step_duration;
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  } else {
    auto stats = mean_decoherence_time(cfg.group_size, cfg.coupling_dist,
                                       cfg.epsilon, cfg.window, cfg.grid,
                                       cfg.calibration_seeds);
    if (stats.found == 0)
      throw std::runtime_error(
          "delta calibration failed: no sustained decoherence within the grid");
    delta = stats.mean;
  }

  EventLog log;
  log.delta = delta;
  log.events.reserve(static_cast<std::size_t>(edge_count(cfg)));

  for (int step = 0; step <= last_step; ++step) {
    const double time = (step + 1) * delta;
    const std::int64_t groups = graph.layers[step + 1].count;

    StepSummary summary;
    summary.step = step;
    summary.basis = graph.layers[step].step_basis;
    const int sample_groups =
        static_cast<int>(std::min<std::int64_t>(cfg.trace_groups, groups));
    double t_sum = 0.0;
    int t_found = 0;
    for (int k = 1; k <= sample_groups; ++k) {
      const auto g = cfg.coupling_dist.sample(
          static_cast<std::size_t>(cfg.group_size),
          (static_cast<std::uint64_t>(step) << 32) + static_cast<std::uint64_t>(k));
      auto trace = trace_for_couplings(g, cfg.grid);
      if (auto t = estimate_decoherence_time(trace, cfg.epsilon, cfg.window)) {
        t_sum += *t;
        ++t_found;
      }
      if (k == 1) summary.representative = std::move(trace);
    }
    summary.sampled_groups = sample_groups;
    if (t_found > 0) summary.mean_decoherence_time = t_sum / t_found;
    log.steps.push_back(std::move(summary));

    for (std::int64_t k = 1; k <= groups; ++k) {
      const NodeId target = graph.node_id(step + 1, k);
      const double target_value =
          sample_pm1(cfg, target, /*as_target=*/true, cfg.target_p_plus);
      const auto& pos = graph.nodes[target].position;
      const std::int64_t first =
          graph.node_id(step, (k - 1) * cfg.group_size + 1);
      for (int m = 0; m < cfg.group_size; ++m) {
        const NodeId env = first + m;
        // Environment spins enter in an equal-weight superposition of the
        // step's pointer basis, so their Born weights are 1/2 each.
        const double env_value = sample_pm1(cfg, env, /*as_target=*/false, 0.5);
        log.events.push_back(
            Event{step, time, env, target, env_value, target_value, pos});
      }
    }
  }

  if (last_step == n - 1) {
    const double time = n * delta;
    for (std::int64_t j = 1; j <= graph.layers[n].count; ++j) {
      const NodeId target = graph.node_id(n, j);
      const double value =
          sample_pm1(cfg, target, /*as_target=*/true, cfg.target_p_plus);
      log.final_events.push_back(
          FinalEvent{n - 1, time, target, value, graph.nodes[target].position});
    }
  }
  return log;
}

EventLog dissolve_at(const ChainConfig& cfg) {
  if (!cfg.dissolve_after_layer)
    throw std::invalid_argument("dissolve_at requires dissolve_after_layer");
  return simulate_chain(cfg);
}

OrderingReport timescale_ordering_check(const std::vector<double>& step_times,
                                        double tolerance_factor) {
  if (step_times.size() < 2)
    throw std::invalid_argument("ordering check needs at least two step times");
  OrderingReport report;
  report.tolerance_factor = tolerance_factor;
  for (std::size_t i = 0; i < step_times.size(); ++i) {
    for (std::size_t j = i + 1; j < step_times.size(); ++j) {
      if (step_times[j] < step_times[i] / tolerance_factor) {
        report.pass = false;
        report.violations.push_back(
            "step " + std::to_string(j) + " time " + fmt12(step_times[j]) +
            " is more than " + fmt12(tolerance_factor) +
            "x faster than step " + std::to_string(i) + " time " +
            fmt12(step_times[i]));
      }
    }
  }
  return report;
}

void write_events_csv(const SdcGraph& graph, const EventLog& log,
                      std::ostream& os) {
  os << "step,time_s,layer,target_id,env_group,target_value,env_value,x,y,z\n";
  for (const auto& e : log.events) {
    const auto& env = graph.nodes[e.env];
    os << e.step << ',' << fmt12(e.time) << ',' << env.layer << ',' << e.target
       << ',' << env.group << ',' << fmt12(e.target_value) << ','
       << fmt12(e.env_value) << ',' << fmt12(e.position[0]) << ','
       << fmt12(e.position[1]) << ',' << fmt12(e.position[2]) << '\n';
  }
  for (const auto& f : log.final_events) {
    const auto& node = graph.nodes[f.target];
    // A last-layer system's own determination: both relata columns carry its
    // value; env_group names the group that decohered it.
    const std::int64_t parent_group = node.index;
    os << f.step << ',' << fmt12(f.time) << ',' << node.layer << ',' << f.target
       << ',' << parent_group << ',' << fmt12(f.value) << ',' << fmt12(f.value)
       << ',' << fmt12(f.position[0]) << ',' << fmt12(f.position[1]) << ','
       << fmt12(f.position[2]) << '\n';
  }
}

const char* basis_name(Basis b) { return b == Basis::z ? "z" : "x"; }

}  // namespace endqt::sdc
