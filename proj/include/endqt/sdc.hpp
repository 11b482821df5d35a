#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "endqt/decoherence.hpp"

namespace endqt::sdc {

using NodeId = std::int64_t;

// Pointer basis of a step: even steps monitor sigma_z, odd steps sigma_x.
enum class Basis { z, x };

struct LayerInfo {
  std::int64_t count = 0;
  int group_size = 1;
  Basis step_basis = Basis::z;  // basis used when this layer acts as environment
};

struct SystemNode {
  int layer = 0;
  std::int64_t index = 1;  // 1-based within the layer
  std::int64_t group = 1;  // 1-based within the layer
  bool is_initiator = false;
  std::array<double, 3> position{0, 0, 0};
  std::optional<NodeId> has_dc_for;  // the target this node helps determine
};

struct SdcGraph {
  std::vector<LayerInfo> layers;
  std::vector<std::int64_t> layer_offsets;          // node id of each layer's first node
  std::vector<SystemNode> nodes;                    // indexed by NodeId
  std::vector<std::pair<NodeId, NodeId>> edges;     // environment -> target

  int num_layers() const { return static_cast<int>(layers.size()); }
  NodeId node_id(int layer, std::int64_t index1) const {
    return layer_offsets[layer] + index1 - 1;
  }
};

struct ChainConfig {
  int num_layers = 2;                // N+1 layers
  std::int64_t last_layer_count = 1; // systems in layer N
  int group_size = 1;                // G
  CouplingDistribution coupling_dist = CouplingDistribution::uniform01(0);
  std::optional<double> step_duration;  // seconds; absent = calibrate ("auto")
  std::uint64_t seed = 0;
  std::optional<int> dissolve_after_layer;
  double target_p_plus = 0.5;  // Born weight of the + pointer outcome
  double epsilon = 0.1;
  double window = 5.0;
  TimeGrid grid{};
  int calibration_seeds = 32;
  int trace_groups = 4;              // per-step trace subsample cap
  std::int64_t node_cap = 10'000'000;

  int last_layer_index() const { return num_layers - 1; }  // N
};

std::int64_t layer_size(const ChainConfig& cfg, int layer);
// Total systems across all layers: sum_{i=0..N} n_N * G^i.
std::int64_t count_events(const ChainConfig& cfg);
// One edge per environment system (layers 0..N-1).
std::int64_t edge_count(const ChainConfig& cfg);
// One group->target interaction per non-initiator system.
std::int64_t interaction_count(const ChainConfig& cfg);

SdcGraph build_graph(const ChainConfig& cfg);

struct CdcViolation {
  std::string rule;  // "CDC1", "CDC3", "CDC4", "basis"
  NodeId node = -1;
  std::string message;
};
std::vector<CdcViolation> validate_cdc(const SdcGraph& graph);

struct Event {
  int step = 0;
  double time = 0.0;
  NodeId env = 0;
  NodeId target = 0;
  double env_value = 0.0;     // +1/-1 in the step's pointer basis
  double target_value = 0.0;
  std::array<double, 3> position{0, 0, 0};
};

// Determination of a last-layer target; emitted only when the chain runs to
// completion.
struct FinalEvent {
  int step = 0;
  double time = 0.0;
  NodeId target = 0;
  double value = 0.0;
  std::array<double, 3> position{0, 0, 0};
};

struct StepSummary {
  int step = 0;
  Basis basis = Basis::z;
  int sampled_groups = 0;
  std::optional<double> mean_decoherence_time;
  DecoherenceTrace representative;
};

struct EventLog {
  double delta = 0.0;
  std::vector<Event> events;
  std::vector<FinalEvent> final_events;
  std::vector<StepSummary> steps;

  std::int64_t system_entry_count() const {
    return static_cast<std::int64_t>(events.size() + final_events.size());
  }
};

EventLog simulate_chain(const ChainConfig& cfg);
// Requires dissolve_after_layer in [0, N); truncates the chain after that
// step.
EventLog dissolve_at(const ChainConfig& cfg);

struct OrderingReport {
  bool pass = true;
  double tolerance_factor = 10.0;
  std::vector<std::string> violations;
};
OrderingReport timescale_ordering_check(const std::vector<double>& step_times,
                                        double tolerance_factor = 10.0);

// One row per system: environment systems appear with their edge event,
// last-layer targets with their determination. Header:
// step,time_s,layer,target_id,env_group,target_value,env_value,x,y,z
void write_events_csv(const SdcGraph& graph, const EventLog& log, std::ostream& os);

const char* basis_name(Basis b);

}  // namespace endqt::sdc
