#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "endqt/quantum.hpp"

namespace endqt::qcm {

// A node of a quantum causal model: an input space the parents' channels
// feed, and an output space whose slices feed the children. parent_dims
// declares the slice consumed from each parent; it may be omitted for
// single-parent nodes (the whole channel input comes from that parent).
struct NodeSpec {
  std::string name;
  int input_dim = 1;
  int output_dim = 1;
  std::vector<std::string> parents;
  std::vector<int> parent_dims;
};

// Choi operator of the channel feeding one node, on
// (node input) x (parent slices, in parent order). Unnormalized convention:
// the Choi of a d-dimensional identity channel has trace d.
struct ChannelCJ {
  std::string node;
  CMatrix matrix;
  // Test hook: overrides the derived wiring with explicit space labels
  // ("in:<node>", "out:<node>:<child>", "out:<node>").
  std::vector<std::string> space_labels;
};

ChannelCJ choi_from_kraus(std::string node, const std::vector<CMatrix>& kraus);
ChannelCJ choi_from_unitary(std::string node, const CMatrix& u);
// Preparation: a channel from a trivial input, i.e. the prepared state.
ChannelCJ choi_from_state(std::string node, const CMatrix& rho);

// Action of a Choi operator on a state (for round-trip checks).
CMatrix apply_choi(const CMatrix& choi, int out_dim, int in_dim, const CMatrix& rho);

// One outcome of an intervention at a node: the CP map's Choi operator on
// (node output) x (node input). sdc_flag marks determinate-value-producing
// interventions; it carries no numerical weight.
struct InstrumentElement {
  std::string node;
  std::string setting;
  std::string outcome;
  double outcome_value = 0.0;
  CMatrix matrix;
  bool sdc_flag = false;
};

// Destructive sharp measurement of cos(theta) sigma_z + sin(theta) sigma_x;
// two elements with outcomes +1/-1.
std::vector<InstrumentElement> spin_instrument(const std::string& node,
                                               const std::string& setting,
                                               double theta, bool sdc_flag = true);
// Destructive projective measurement given explicit projectors.
std::vector<InstrumentElement> projective_instrument(
    const std::string& node, const std::string& setting,
    const std::vector<CMatrix>& projectors, const std::vector<double>& values,
    bool sdc_flag = true);

// Raised when factor channels fail the commutation requirement.
struct QmcViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ElementarySpace {
  std::string label;
  int dim = 1;
};

struct Factor {
  std::string node;
  CMatrix matrix;
  std::vector<int> spaces;  // registry indices, in the matrix's kron order
};

class ProcessOperator {
 public:
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<ElementarySpace>& spaces() const { return spaces_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<int>& topo_order() const { return topo_; }

  std::int64_t global_dim() const;
  // Ordered product of the embedded factors. Throws when the global
  // dimension exceeds the cap.
  CMatrix dense(std::int64_t cap = 4096) const;

  int node_index(const std::string& name) const;
  // Spaces of a node's instrument: output slices (or leaf output), then input.
  std::vector<int> instrument_spaces(int node) const;
  int in_space(int node) const { return in_space_[node]; }
  const std::vector<int>& out_spaces(int node) const { return out_spaces_[node]; }
  bool default_wiring() const { return default_wiring_; }

 private:
  friend ProcessOperator assemble_process(const std::vector<NodeSpec>&,
                                          std::vector<ChannelCJ>);
  std::vector<NodeSpec> nodes_;
  std::vector<ElementarySpace> spaces_;
  std::vector<Factor> factors_;  // one per node, node order
  std::vector<int> topo_;
  std::vector<int> in_space_;
  std::vector<std::vector<int>> out_spaces_;
  bool default_wiring_ = true;
};

// Builds the process operator, validating channel shape, positivity, trace
// preservation, and pairwise factor commutation (QmcViolation on failure).
ProcessOperator assemble_process(const std::vector<NodeSpec>& nodes,
                                 std::vector<ChannelCJ> channels);

// Joint outcome distribution over the instrumented nodes (row-major over
// outcome indices, nodes in the order given). Nodes without an instrument
// get the trivial identity intervention.
struct JointDistribution {
  std::vector<std::string> node_names;
  std::vector<std::vector<std::string>> outcome_labels;  // per node
  std::vector<std::vector<double>> outcome_values;       // per node
  std::vector<double> probabilities;

  double prob(const std::vector<int>& outcome) const;
  // Expectation of the product of outcome values (correlator).
  double product_expectation() const;
  std::vector<double> marginal(std::size_t node_pos) const;
};

JointDistribution joint_probabilities(
    const ProcessOperator& process,
    const std::vector<std::vector<InstrumentElement>>& instruments);

CMatrix singlet_density();

// Common-cause Bell scenario: source node prepares rho_lambda (two qubits),
// identity channels to each wing, destructive spin measurements at the given
// angles (x-z plane).
JointDistribution bell_scenario(double angle_a, double angle_b,
                                const CMatrix& rho_lambda = singlet_density());
double bell_correlator(double angle_a, double angle_b,
                       const CMatrix& rho_lambda = singlet_density());

// E(a,b) + E(a,b') + E(a',b) - E(a',b')
double chsh_value(double a, double a_prime, double b, double b_prime,
                  const CMatrix& rho_lambda = singlet_density());
// Angles that reach 2*sqrt(2) with the formula above.
struct ChshAngles {
  double a, a_prime, b, b_prime;
};
ChshAngles tsirelson_angles();

struct EwfResult {
  bool isolated = true;
  JointDistribution dist;        // Wigner pair only (isolated) or all four parties
  double reversal_fidelity = 0.0;  // isolated case; 0 otherwise
};

// Two isolated friend labs measured by outside agents. Isolated: the friends
// are unitary channels and only the two outside agents have outcomes.
// Not isolated: the friends are determinate-value instruments and the
// distribution covers (wigner_a, wigner_b, friend_a, friend_b).
EwfResult ewf_scenario(bool isolated, double wigner_angle_a, double wigner_angle_b);

}  // namespace endqt::qcm
