#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "endqt/rng.hpp"

namespace endqt::ccm {

struct ClassicalDag {
  std::vector<std::string> names;
  std::vector<int> cards;
  std::vector<std::pair<int, int>> edges;

  static ClassicalDag make(std::vector<std::string> names, std::vector<int> cards,
                           const std::vector<std::pair<std::string, std::string>>& edges);

  // Five binary nodes with A -> B, A -> C, B -> D, C -> D, C -> E; its
  // conditional independencies are the pinned regression set.
  static ClassicalDag example_five_node();

  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;
  const std::vector<int>& parents(int node) const { return parents_[node]; }
  const std::vector<int>& children(int node) const { return children_[node]; }
  // Both include the node itself.
  std::vector<int> ancestors(int node) const;
  std::vector<int> descendants(int node) const;
  bool has_directed_path(int from, int to) const;  // true when from == to
  const std::vector<int>& topo_order() const { return topo_; }

 private:
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> topo_;
};

struct JointTable {
  std::vector<std::string> names;
  std::vector<int> cards;
  std::vector<double> p;  // row-major in variable order

  static JointTable make(std::vector<std::string> names, std::vector<int> cards,
                         std::vector<double> p);

  // Joint built from random conditionals along the DAG; Markov by
  // construction, probabilities bounded away from zero.
  static JointTable random_markov(const ClassicalDag& dag, SplitRng& rng);

  std::size_t size() const { return p.size(); }
  double prob(const std::vector<int>& assignment) const;
  JointTable marginal(const std::vector<int>& keep) const;

  // Events are value assignments to variable subsets.
  using Event = std::map<std::string, int>;
  double prob_event(const Event& e) const;
};

// Z d-separates X and Y (disjoint node-index sets).
bool d_separated(const ClassicalDag& dag, const std::vector<int>& x,
                 const std::vector<int>& y, const std::vector<int>& z);

// Numeric conditional independence X ci Y | Z at an absolute tolerance on
// conditional probabilities.
bool conditionally_independent(const JointTable& table, const std::vector<int>& x,
                               const std::vector<int>& y, const std::vector<int>& z,
                               double tol = 1e-10);

struct MarkovReport {
  bool markov = true;
  std::vector<std::string> violations;
};
// Runs both the factorization check and the local-Markov independence check;
// they must agree.
MarkovReport markov_check(const ClassicalDag& dag, const JointTable& table);

// Conditional outcome table P(A,B|X,Y) built from a common-cause
// factorization; binary outcomes valued +1 (index 0) and -1 (index 1).
struct BellTable {
  int settings_a = 0;
  int settings_b = 0;
  std::vector<double> p;  // [x][y][a][b]

  double prob(int x, int y, int a, int b) const;
  double correlator(int x, int y) const;
  // E(s0,t0) + E(s0,t1) + E(s1,t0) - E(s1,t1)
  double chsh(int s0, int s1, int t0, int t1) const;
  double max_abs_chsh() const;
  // max_t' |sum_a p(a, b | x, t) - sum_a p(a, b | x, t')| over outcomes
  double signaling_defect() const;
};

// p_lambda[l]; p_a[x][l][a]; p_b[y][l][b].
BellTable bell_factorization(const std::vector<double>& p_lambda,
                             const std::vector<std::vector<std::vector<double>>>& p_a,
                             const std::vector<std::vector<std::vector<double>>>& p_b);

// Deterministic response per setting, outcomes +1/-1.
struct LhvStrategy {
  int a0 = 1, a1 = 1, b0 = 1, b1 = 1;
};
double chsh_of_strategy(const LhvStrategy& s);
// Maximum over all 16 deterministic strategy pairs; equals 2.
double lhv_chsh_max();

// Hidden-variable model: a prior over lambda and one deterministic strategy
// pair per hidden value. Its outcome table is factorizable by construction.
struct LhvModel {
  std::vector<double> prior;
  std::vector<LhvStrategy> strategies;

  BellTable to_table() const;
};

struct CrccpResult {
  enum class Kind { uncorrelated, directed_path, screened };
  Kind kind = Kind::uncorrelated;
  std::vector<std::string> screening_set;
  double max_residual = 0.0;  // worst screening deviation (screened case)
};
// Requires the table to be Markov for the DAG.
CrccpResult crccp_screening_set(const ClassicalDag& dag, const JointTable& table,
                                const std::string& a, const std::string& b);

// Searches for a minimal conditioning event C with p(A|a and C) = 1 and the
// screening equalities for C and its complement. Returns absent when the
// premise p(A|a and B) = 1 fails or no such event exists. The empty event
// certifies when the outcome is already certain given the setting.
std::optional<JointTable::Event> reality_criterion_check(const JointTable& table,
                                                         const JointTable::Event& outcome_a,
                                                         const JointTable::Event& setting_a,
                                                         const JointTable::Event& predictor_b);

}  // namespace endqt::ccm
