#include "endqt/causal_classical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace endqt::ccm {

namespace {

constexpr double kProbTol = 1e-10;

std::vector<long long> strides_of(const std::vector<int>& cards) {
  std::vector<long long> s(cards.size());
  long long acc = 1;
  for (int i = static_cast<int>(cards.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= cards[i];
  }
  return s;
}

long long table_size(const std::vector<int>& cards) {
  long long n = 1;
  for (int c : cards) {
    if (c < 2) throw std::invalid_argument("variable cardinality must be >= 2");
    n *= c;
  }
  return n;
}

// Iterates assignments of `vars` (indices into cards); calls f(assignment).
template <typename F>
void for_each_assignment(const std::vector<int>& cards, const std::vector<int>& vars,
                         F&& f) {
  std::vector<int> a(vars.size(), 0);
  while (true) {
    f(a);
    int k = static_cast<int>(vars.size()) - 1;
    while (k >= 0) {
      if (++a[k] < cards[vars[k]]) break;
      a[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
}

void check_disjoint(const std::vector<int>& x, const std::vector<int>& y,
                    const std::vector<int>& z) {
  auto overlap = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (int v : a)
      for (int w : b)
        if (v == w) return true;
    return false;
  };
  if (overlap(x, y) || overlap(x, z) || overlap(y, z))
    throw std::invalid_argument("node sets must be disjoint");
}

}  // namespace

ClassicalDag ClassicalDag::make(
    std::vector<std::string> names, std::vector<int> cards,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  if (names.size() != cards.size())
    throw std::invalid_argument("names and cardinalities differ in length");
  ClassicalDag dag;
  dag.names = std::move(names);
  dag.cards = std::move(cards);
  table_size(dag.cards);
  const int n = dag.size();
  dag.parents_.resize(n);
  dag.children_.resize(n);
  for (const auto& [from, to] : edges) {
    int f = dag.index_of(from);
    int t = dag.index_of(to);
    dag.edges.emplace_back(f, t);
    dag.parents_[t].push_back(f);
    dag.children_[f].push_back(t);
  }
  for (auto& p : dag.parents_) std::sort(p.begin(), p.end());
  for (auto& c : dag.children_) std::sort(c.begin(), c.end());

  // Kahn topological sort; leftovers mean a cycle.
  std::vector<int> indeg(n, 0);
  for (const auto& [f, t] : dag.edges) ++indeg[t];
  std::deque<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    dag.topo_.push_back(v);
    for (int c : dag.children_[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(dag.topo_.size()) != n)
    throw std::invalid_argument("graph has a directed cycle");
  return dag;
}

ClassicalDag ClassicalDag::example_five_node() {
  return make({"A", "B", "C", "D", "E"}, {2, 2, 2, 2, 2},
              {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}, {"C", "E"}});
}

int ClassicalDag::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[i] == name) return i;
  throw std::invalid_argument("unknown variable: " + name);
}

std::vector<int> ClassicalDag::ancestors(int node) const {
  std::vector<char> seen(size(), 0);
  std::deque<int> queue{node};
  seen[node] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int p : parents_[v])
      if (!seen[p]) {
        seen[p] = 1;
        queue.push_back(p);
      }
  }
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

std::vector<int> ClassicalDag::descendants(int node) const {
  std::vector<char> seen(size(), 0);
  std::deque<int> queue{node};
  seen[node] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int c : children_[v])
      if (!seen[c]) {
        seen[c] = 1;
        queue.push_back(c);
      }
  }
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

bool ClassicalDag::has_directed_path(int from, int to) const {
  auto desc = descendants(from);
  return std::find(desc.begin(), desc.end(), to) != desc.end();
}

JointTable JointTable::make(std::vector<std::string> names, std::vector<int> cards,
                            std::vector<double> p) {
  if (names.size() != cards.size())
    throw std::invalid_argument("names and cardinalities differ in length");
  if (static_cast<long long>(p.size()) != table_size(cards))
    throw std::invalid_argument("probability table has the wrong size");
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("negative probability entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("probabilities do not sum to 1");
  JointTable t;
  t.names = std::move(names);
  t.cards = std::move(cards);
  t.p = std::move(p);
  return t;
}

JointTable JointTable::random_markov(const ClassicalDag& dag, SplitRng& rng) {
  const int n = dag.size();
  const auto strides = strides_of(dag.cards);
  const long long total = table_size(dag.cards);

  // One conditional distribution per node and parent assignment.
  std::vector<std::vector<double>> cond(n);
  std::vector<long long> pa_strides(n, 1);
  for (int v = 0; v < n; ++v) {
    long long pa_count = 1;
    for (int p : dag.parents(v)) pa_count *= dag.cards[p];
    pa_strides[v] = pa_count;
    cond[v].resize(pa_count * dag.cards[v]);
    for (long long pa = 0; pa < pa_count; ++pa) {
      double sum = 0.0;
      for (int k = 0; k < dag.cards[v]; ++k) {
        double w = rng.uniform(0.1, 1.0);
        cond[v][pa * dag.cards[v] + k] = w;
        sum += w;
      }
      for (int k = 0; k < dag.cards[v]; ++k) cond[v][pa * dag.cards[v] + k] /= sum;
    }
  }

  std::vector<double> p(total, 1.0);
  std::vector<int> a(n, 0);
  for (long long idx = 0; idx < total; ++idx) {
    long long rest = idx;
    for (int v = 0; v < n; ++v) {
      a[v] = static_cast<int>(rest / strides[v]);
      rest %= strides[v];
    }
    double prob = 1.0;
    for (int v = 0; v < n; ++v) {
      long long pa = 0;
      for (int q : dag.parents(v)) pa = pa * dag.cards[q] + a[q];
      prob *= cond[v][pa * dag.cards[v] + a[v]];
    }
    p[idx] = prob;
  }
  return make(dag.names, dag.cards, std::move(p));
}

double JointTable::prob(const std::vector<int>& assignment) const {
  if (assignment.size() != cards.size())
    throw std::invalid_argument("assignment length mismatch");
  const auto strides = strides_of(cards);
  long long idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (assignment[i] < 0 || assignment[i] >= cards[i])
      throw std::out_of_range("assignment value out of range");
    idx += assignment[i] * strides[i];
  }
  return p[idx];
}

JointTable JointTable::marginal(const std::vector<int>& keep) const {
  std::vector<int> kept_cards;
  std::vector<std::string> kept_names;
  for (int v : keep) {
    kept_cards.push_back(cards[v]);
    kept_names.push_back(names[v]);
  }
  std::vector<double> out(table_size(kept_cards), 0.0);
  const auto strides = strides_of(cards);
  const auto kstrides = strides_of(kept_cards);
  const long long total = static_cast<long long>(p.size());
  for (long long idx = 0; idx < total; ++idx) {
    long long kidx = 0;
    for (std::size_t i = 0; i < keep.size(); ++i)
      kidx += ((idx / strides[keep[i]]) % cards[keep[i]]) * kstrides[i];
    out[kidx] += p[idx];
  }
  JointTable t;
  t.names = std::move(kept_names);
  t.cards = std::move(kept_cards);
  t.p = std::move(out);
  return t;
}

double JointTable::prob_event(const Event& e) const {
  std::vector<int> vars;
  std::vector<int> vals;
  for (const auto& [name, value] : e) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("unknown variable: " + name);
    vars.push_back(static_cast<int>(it - names.begin()));
    vals.push_back(value);
  }
  const auto strides = strides_of(cards);
  double total = 0.0;
  for (long long idx = 0; idx < static_cast<long long>(p.size()); ++idx) {
    bool match = true;
    for (std::size_t i = 0; i < vars.size(); ++i)
      match = match && ((idx / strides[vars[i]]) % cards[vars[i]]) == vals[i];
    if (match) total += p[idx];
  }
  return total;
}

bool d_separated(const ClassicalDag& dag, const std::vector<int>& x,
                 const std::vector<int>& y, const std::vector<int>& z) {
  check_disjoint(x, y, z);
  const int n = dag.size();
  std::vector<char> in_z(n, 0);
  for (int v : z) in_z[v] = 1;

  // Ancestors of Z (including Z) open colliders.
  std::vector<char> anc_z(n, 0);
  for (int v : z)
    for (int a : dag.ancestors(v)) anc_z[a] = 1;

  // Reachability over (node, arrival direction): arriving "up" means the
  // trail may continue through the node as a fork or chain; arriving "down"
  // may only pass a non-collider downward or reopen a collider whose
  // descendant is observed.
  std::vector<char> seen_up(n, 0), seen_down(n, 0);
  std::deque<std::pair<int, bool>> queue;  // (node, arrived_down)
  for (int v : x) {
    queue.emplace_back(v, false);
    seen_up[v] = 1;
  }
  std::vector<char> in_y(n, 0);
  for (int v : y) in_y[v] = 1;

  while (!queue.empty()) {
    auto [v, down] = queue.front();
    queue.pop_front();
    if (in_y[v]) return false;
    if (!down) {
      if (in_z[v]) continue;
      for (int p : dag.parents(v))
        if (!seen_up[p]) {
          seen_up[p] = 1;
          queue.emplace_back(p, false);
        }
      for (int c : dag.children(v))
        if (!seen_down[c]) {
          seen_down[c] = 1;
          queue.emplace_back(c, true);
        }
    } else {
      if (!in_z[v]) {
        for (int c : dag.children(v))
          if (!seen_down[c]) {
            seen_down[c] = 1;
            queue.emplace_back(c, true);
          }
      }
      if (anc_z[v]) {
        for (int p : dag.parents(v))
          if (!seen_up[p]) {
            seen_up[p] = 1;
            queue.emplace_back(p, false);
          }
      }
    }
  }
  return true;
}

bool conditionally_independent(const JointTable& table, const std::vector<int>& x,
                               const std::vector<int>& y, const std::vector<int>& z,
                               double tol) {
  check_disjoint(x, y, z);
  std::vector<int> xz = x, yz = y, xyz = x;
  xz.insert(xz.end(), z.begin(), z.end());
  yz.insert(yz.end(), z.begin(), z.end());
  xyz.insert(xyz.end(), y.begin(), y.end());
  xyz.insert(xyz.end(), z.begin(), z.end());

  auto m_xyz = table.marginal(xyz);
  auto m_xz = table.marginal(xz);
  auto m_yz = table.marginal(yz);
  auto m_z = z.empty() ? JointTable{} : table.marginal(z);

  bool ok = true;
  std::vector<int> all(xyz.size());
  std::iota(all.begin(), all.end(), 0);
  for_each_assignment(m_xyz.cards, all, [&](const std::vector<int>& a) {
    if (!ok) return;
    const std::size_t nx = x.size(), ny = y.size(), nz = z.size();
    std::vector<int> ax(a.begin(), a.begin() + nx);
    std::vector<int> ay(a.begin() + nx, a.begin() + nx + ny);
    std::vector<int> az(a.begin() + nx + ny, a.end());
    std::vector<int> a_xz = ax;
    a_xz.insert(a_xz.end(), az.begin(), az.end());
    std::vector<int> a_yz = ay;
    a_yz.insert(a_yz.end(), az.begin(), az.end());
    const double pz = nz == 0 ? 1.0 : m_z.prob(az);
    if (pz <= 0.0) return;
    const double lhs = m_xyz.prob(a) / pz;
    const double rhs = (m_xz.prob(a_xz) / pz) * (m_yz.prob(a_yz) / pz);
    if (std::abs(lhs - rhs) > tol) ok = false;
  });
  return ok;
}

MarkovReport markov_check(const ClassicalDag& dag, const JointTable& table) {
  if (dag.names != table.names || dag.cards != table.cards)
    throw std::invalid_argument("table variables do not match the graph");
  MarkovReport report;

  // Route 1: entrywise factorization into parent conditionals.
  const int n = dag.size();
  std::vector<JointTable> fam;     // marginal over {v} u Pa(v)
  std::vector<JointTable> pa_tab;  // marginal over Pa(v)
  for (int v = 0; v < n; ++v) {
    std::vector<int> fam_vars{v};
    for (int q : dag.parents(v)) fam_vars.push_back(q);
    fam.push_back(table.marginal(fam_vars));
    pa_tab.push_back(dag.parents(v).empty() ? JointTable{}
                                            : table.marginal(dag.parents(v)));
  }
  bool factorizes = true;
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for_each_assignment(table.cards, all, [&](const std::vector<int>& a) {
    double prod = 1.0;
    for (int v = 0; v < n && prod != 0.0; ++v) {
      std::vector<int> fa{a[v]};
      std::vector<int> paa;
      for (int q : dag.parents(v)) {
        fa.push_back(a[q]);
        paa.push_back(a[q]);
      }
      const double ppa = dag.parents(v).empty() ? 1.0 : pa_tab[v].prob(paa);
      prod = ppa <= 0.0 ? 0.0 : prod * fam[v].prob(fa) / ppa;
    }
    if (std::abs(prod - table.prob(a)) > kProbTol) factorizes = false;
  });
  if (!factorizes) {
    report.markov = false;
    report.violations.push_back("joint does not factorize into parent conditionals");
  }

  // Route 2: local Markov condition, node by node.
  bool local = true;
  for (int v = 0; v < n; ++v) {
    auto desc = dag.descendants(v);
    std::vector<char> excluded(n, 0);
    for (int d : desc) excluded[d] = 1;
    for (int q : dag.parents(v)) excluded[q] = 1;
    std::vector<int> nd;
    for (int u = 0; u < n; ++u)
      if (!excluded[u]) nd.push_back(u);
    if (nd.empty()) continue;
    if (!conditionally_independent(table, {v}, nd, dag.parents(v), kProbTol)) {
      local = false;
      std::string rhs;
      for (int u : nd) rhs += (rhs.empty() ? "" : ",") + dag.names[u];
      report.violations.push_back(dag.names[v] +
                                  " depends on non-descendants {" + rhs +
                                  "} given its parents");
    }
  }
  if (!local) report.markov = false;

  if (factorizes != local)
    report.violations.push_back(
        "internal: factorization and local-Markov routes disagree");
  return report;
}

double BellTable::prob(int x, int y, int a, int b) const {
  return p[((x * settings_b + y) * 2 + a) * 2 + b];
}

double BellTable::correlator(int x, int y) const {
  double e = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      e += (a == 0 ? 1.0 : -1.0) * (b == 0 ? 1.0 : -1.0) * prob(x, y, a, b);
  return e;
}

double BellTable::chsh(int s0, int s1, int t0, int t1) const {
  return correlator(s0, t0) + correlator(s0, t1) + correlator(s1, t0) -
         correlator(s1, t1);
}

double BellTable::max_abs_chsh() const {
  double best = 0.0;
  for (int s0 = 0; s0 < settings_a; ++s0)
    for (int s1 = 0; s1 < settings_a; ++s1)
      for (int t0 = 0; t0 < settings_b; ++t0)
        for (int t1 = 0; t1 < settings_b; ++t1)
          best = std::max(best, std::abs(chsh(s0, s1, t0, t1)));
  return best;
}

double BellTable::signaling_defect() const {
  double worst = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x < settings_a; ++x)
      for (int y0 = 0; y0 < settings_b; ++y0)
        for (int y1 = 0; y1 < settings_b; ++y1) {
          double m0 = prob(x, y0, a, 0) + prob(x, y0, a, 1);
          double m1 = prob(x, y1, a, 0) + prob(x, y1, a, 1);
          worst = std::max(worst, std::abs(m0 - m1));
        }
    for (int y = 0; y < settings_b; ++y)
      for (int x0 = 0; x0 < settings_a; ++x0)
        for (int x1 = 0; x1 < settings_a; ++x1) {
          double m0 = prob(x0, y, 0, a) + prob(x0, y, 1, a);
          double m1 = prob(x1, y, 0, a) + prob(x1, y, 1, a);
          worst = std::max(worst, std::abs(m0 - m1));
        }
  }
  return worst;
}

BellTable bell_factorization(
    const std::vector<double>& p_lambda,
    const std::vector<std::vector<std::vector<double>>>& p_a,
    const std::vector<std::vector<std::vector<double>>>& p_b) {
  const std::size_t nl = p_lambda.size();
  if (nl == 0) throw std::invalid_argument("empty hidden-variable prior");
  double tot = 0.0;
  for (double v : p_lambda) {
    if (v < 0) throw std::invalid_argument("negative prior weight");
    tot += v;
  }
  if (std::abs(tot - 1.0) > 1e-12)
    throw std::invalid_argument("hidden-variable prior does not sum to 1");
  auto check_cond = [&](const std::vector<std::vector<std::vector<double>>>& c,
                        const char* who) {
    for (const auto& per_setting : c) {
      if (per_setting.size() != nl)
        throw std::invalid_argument(std::string(who) +
                                    " conditionals do not cover the prior");
      for (const auto& dist : per_setting) {
        if (dist.size() != 2)
          throw std::invalid_argument("outcomes must be binary");
        if (std::abs(dist[0] + dist[1] - 1.0) > 1e-12 || dist[0] < 0 || dist[1] < 0)
          throw std::invalid_argument(std::string(who) +
                                      " conditional not normalized");
      }
    }
  };
  check_cond(p_a, "alice");
  check_cond(p_b, "bob");

  BellTable t;
  t.settings_a = static_cast<int>(p_a.size());
  t.settings_b = static_cast<int>(p_b.size());
  t.p.assign(static_cast<std::size_t>(t.settings_a) * t.settings_b * 4, 0.0);
  for (int x = 0; x < t.settings_a; ++x)
    for (int y = 0; y < t.settings_b; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double v = 0.0;
          for (std::size_t l = 0; l < nl; ++l)
            v += p_lambda[l] * p_a[x][l][a] * p_b[y][l][b];
          t.p[((x * t.settings_b + y) * 2 + a) * 2 + b] = v;
        }
  return t;
}

double chsh_of_strategy(const LhvStrategy& s) {
  auto e = [&](int a, int b) { return static_cast<double>(a * b); };
  return e(s.a0, s.b0) + e(s.a0, s.b1) + e(s.a1, s.b0) - e(s.a1, s.b1);
}

double lhv_chsh_max() {
  double best = 0.0;
  for (int a0 : {1, -1})
    for (int a1 : {1, -1})
      for (int b0 : {1, -1})
        for (int b1 : {1, -1})
          best = std::max(best, std::abs(chsh_of_strategy({a0, a1, b0, b1})));
  return best;
}

BellTable LhvModel::to_table() const {
  if (prior.size() != strategies.size() || prior.empty())
    throw std::invalid_argument("model needs one strategy per hidden value");
  auto outcome_dist = [](int response) {
    return response > 0 ? std::vector<double>{1.0, 0.0}
                        : std::vector<double>{0.0, 1.0};
  };
  std::vector<std::vector<std::vector<double>>> pa(2), pb(2);
  for (const auto& s : strategies) {
    pa[0].push_back(outcome_dist(s.a0));
    pa[1].push_back(outcome_dist(s.a1));
    pb[0].push_back(outcome_dist(s.b0));
    pb[1].push_back(outcome_dist(s.b1));
  }
  return bell_factorization(prior, pa, pb);
}

CrccpResult crccp_screening_set(const ClassicalDag& dag, const JointTable& table,
                                const std::string& a, const std::string& b) {
  auto markov = markov_check(dag, table);
  if (!markov.markov)
    throw std::invalid_argument("table is not Markov with respect to the graph");
  const int va = dag.index_of(a);
  const int vb = dag.index_of(b);

  CrccpResult res;
  if (conditionally_independent(table, {va}, {vb}, {})) {
    res.kind = CrccpResult::Kind::uncorrelated;
    return res;
  }
  if (dag.has_directed_path(va, vb) || dag.has_directed_path(vb, va)) {
    res.kind = CrccpResult::Kind::directed_path;
    return res;
  }

  // Common ancestors; the self-ancestor convention cannot inject a or b here
  // because neither has a directed path to the other.
  std::vector<int> u;
  for (int c = 0; c < dag.size(); ++c) {
    if (c == va || c == vb) continue;
    if (dag.has_directed_path(c, va) && dag.has_directed_path(c, vb)) u.push_back(c);
  }
  res.kind = CrccpResult::Kind::screened;
  for (int c : u) res.screening_set.push_back(dag.names[c]);

  // Verify the screening numerically.
  double worst = 0.0;
  std::vector<int> xyz{va, vb};
  xyz.insert(xyz.end(), u.begin(), u.end());
  auto m = table.marginal(xyz);
  auto m_az = table.marginal([&] {
    std::vector<int> v{va};
    v.insert(v.end(), u.begin(), u.end());
    return v;
  }());
  auto m_bz = table.marginal([&] {
    std::vector<int> v{vb};
    v.insert(v.end(), u.begin(), u.end());
    return v;
  }());
  auto m_z = u.empty() ? JointTable{} : table.marginal(u);
  std::vector<int> all(xyz.size());
  std::iota(all.begin(), all.end(), 0);
  for_each_assignment(m.cards, all, [&](const std::vector<int>& asg) {
    std::vector<int> az{asg[0]};
    std::vector<int> bz{asg[1]};
    std::vector<int> zz(asg.begin() + 2, asg.end());
    az.insert(az.end(), zz.begin(), zz.end());
    bz.insert(bz.end(), zz.begin(), zz.end());
    const double pz = u.empty() ? 1.0 : m_z.prob(zz);
    if (pz <= 0.0) return;
    worst = std::max(worst, std::abs(m.prob(asg) / pz -
                                     (m_az.prob(az) / pz) * (m_bz.prob(bz) / pz)));
  });
  res.max_residual = worst;
  if (worst > kProbTol)
    throw std::runtime_error("common-ancestor screening verification failed");
  return res;
}

std::optional<JointTable::Event> reality_criterion_check(
    const JointTable& table, const JointTable::Event& outcome_a,
    const JointTable::Event& setting_a, const JointTable::Event& predictor_b) {
  auto conj = [](const JointTable::Event& u, const JointTable::Event& v) {
    JointTable::Event out = u;
    for (const auto& [k, val] : v) out[k] = val;
    return out;
  };
  const double p_ab = table.prob_event(conj(setting_a, predictor_b));
  if (p_ab <= 0.0)
    throw std::invalid_argument("conditioning event has zero probability");
  const double certainty =
      table.prob_event(conj(conj(outcome_a, setting_a), predictor_b)) / p_ab;
  if (certainty < 1.0 - kProbTol) return std::nullopt;

  // Candidate variables: everything the three events leave free.
  std::vector<int> candidates;
  for (int v = 0; v < static_cast<int>(table.names.size()); ++v) {
    const auto& name = table.names[v];
    if (outcome_a.count(name) || setting_a.count(name) || predictor_b.count(name))
      continue;
    candidates.push_back(v);
  }

  // Screening test for a candidate event C (and its complement within the
  // same variable subset).
  auto screens = [&](const JointTable::Event& c_event,
                     const std::vector<int>& subset) {
    const double p_ac = table.prob_event(conj(setting_a, c_event));
    if (p_ac <= 0.0) return false;
    const double p_outcome =
        table.prob_event(conj(conj(outcome_a, setting_a), c_event)) / p_ac;
    if (p_outcome < 1.0 - kProbTol) return false;

    // p(A and B | a and C) = p(A | a and C) p(B | a and C)
    const double lhs = table.prob_event(conj(
                           conj(conj(outcome_a, predictor_b), setting_a), c_event)) /
                       p_ac;
    const double rhs =
        p_outcome * (table.prob_event(conj(conj(predictor_b, setting_a), c_event)) / p_ac);
    if (std::abs(lhs - rhs) > kProbTol) return false;

    // Complement event: every other assignment of the subset. Aggregated
    // probabilities condition on "not C".
    double p_anc = table.prob_event(setting_a) - p_ac;
    if (p_anc > kProbTol) {
      const double p_a_nc =
          table.prob_event(conj(outcome_a, setting_a)) -
          table.prob_event(conj(conj(outcome_a, setting_a), c_event));
      const double p_b_nc =
          table.prob_event(conj(predictor_b, setting_a)) -
          table.prob_event(conj(conj(predictor_b, setting_a), c_event));
      const double p_abn =
          table.prob_event(conj(conj(outcome_a, predictor_b), setting_a)) -
          table.prob_event(
              conj(conj(conj(outcome_a, predictor_b), setting_a), c_event));
      const double lhs_n = p_abn / p_anc;
      const double rhs_n = (p_a_nc / p_anc) * (p_b_nc / p_anc);
      if (std::abs(lhs_n - rhs_n) > kProbTol) return false;
    }
    (void)subset;
    return true;
  };

  // Subsets by cardinality, lexicographic within each size.
  const int m = static_cast<int>(candidates.size());
  for (int size = 0; size <= m; ++size) {
    std::vector<int> pick(size);
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      for (int i = 0; i < size; ++i) pick[i] = candidates[idx[i]];
      // all value assignments of this subset, lexicographic
      std::optional<JointTable::Event> found;
      for_each_assignment(table.cards, pick, [&](const std::vector<int>& vals) {
        if (found) return;
        JointTable::Event c_event;
        for (int i = 0; i < size; ++i) c_event[table.names[pick[i]]] = vals[i];
        if (screens(c_event, pick)) found = c_event;
      });
      if (found) return found;
      if (size == 0) break;
      int i = size - 1;
      while (i >= 0 && idx[i] == m - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace endqt::ccm
