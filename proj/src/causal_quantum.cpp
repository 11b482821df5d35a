#include "endqt/causal_quantum.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

namespace endqt::qcm {

namespace {

constexpr double kTol = 1e-10;

CMatrix identity(int d) { return CMatrix::Identity(d, d); }

// Choi of a channel given Kraus operators: C[(o1,i1),(o2,i2)] =
// sum_k K[o1,i1] conj(K[o2,i2]).
CMatrix choi_matrix(const std::vector<CMatrix>& kraus) {
  const int out = static_cast<int>(kraus.front().rows());
  const int in = static_cast<int>(kraus.front().cols());
  CMatrix c = CMatrix::Zero(out * in, out * in);
  for (const auto& k : kraus) {
    if (k.rows() != out || k.cols() != in)
      throw std::invalid_argument("Kraus operators must share a shape");
    CVector v(out * in);
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < in; ++i) v(o * in + i) = k(o, i);
    c += v * v.adjoint();
  }
  return c;
}

}  // namespace

ChannelCJ choi_from_kraus(std::string node, const std::vector<CMatrix>& kraus) {
  if (kraus.empty()) throw std::invalid_argument("channel needs Kraus operators");
  const int in = static_cast<int>(kraus.front().cols());
  CMatrix tp = CMatrix::Zero(in, in);
  for (const auto& k : kraus) tp += k.adjoint() * k;
  if ((tp - identity(in)).cwiseAbs().maxCoeff() > kTol)
    throw std::invalid_argument("channel is not trace preserving");
  return ChannelCJ{std::move(node), choi_matrix(kraus), {}};
}

ChannelCJ choi_from_unitary(std::string node, const CMatrix& u) {
  const int d = static_cast<int>(u.rows());
  if (u.cols() != d || (u.adjoint() * u - identity(d)).cwiseAbs().maxCoeff() > kTol)
    throw std::invalid_argument("matrix is not unitary");
  return choi_from_kraus(std::move(node), {u});
}

ChannelCJ choi_from_state(std::string node, const CMatrix& rho) {
  const int d = static_cast<int>(rho.rows());
  if (rho.cols() != d) throw std::invalid_argument("state matrix not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kTol ||
      std::abs(rho.trace().real() - 1.0) > kTol)
    throw std::invalid_argument("preparation is not a density operator");
  return ChannelCJ{std::move(node), rho, {}};
}

CMatrix apply_choi(const CMatrix& choi, int out_dim, int in_dim, const CMatrix& rho) {
  if (choi.rows() != static_cast<Eigen::Index>(out_dim) * in_dim ||
      rho.rows() != in_dim || rho.cols() != in_dim)
    throw std::invalid_argument("choi/state dimension mismatch");
  CMatrix out = CMatrix::Zero(out_dim, out_dim);
  for (int o1 = 0; o1 < out_dim; ++o1)
    for (int o2 = 0; o2 < out_dim; ++o2) {
      cdouble acc = 0.0;
      for (int i1 = 0; i1 < in_dim; ++i1)
        for (int i2 = 0; i2 < in_dim; ++i2)
          acc += choi(o1 * in_dim + i1, o2 * in_dim + i2) * rho(i1, i2);
      out(o1, o2) = acc;
    }
  return out;
}

std::vector<InstrumentElement> projective_instrument(
    const std::string& node, const std::string& setting,
    const std::vector<CMatrix>& projectors, const std::vector<double>& values,
    bool sdc_flag) {
  if (projectors.size() != values.size())
    throw std::invalid_argument("projector/value count mismatch");
  std::vector<InstrumentElement> out;
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    const auto& p = projectors[k];
    const int d = static_cast<int>(p.rows());
    // Destructive outcome map rho -> tr(P rho); its Choi on a trivial output
    // is P transposed.
    std::vector<CMatrix> kraus;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
    for (int m = 0; m < d; ++m) {
      if (es.eigenvalues()(m) < 0.5) continue;
      CMatrix bra(1, d);
      bra = es.eigenvectors().col(m).adjoint();
      kraus.push_back(bra);
    }
    CMatrix cj = kraus.empty() ? CMatrix::Zero(d, d) : choi_matrix(kraus);
    InstrumentElement el;
    el.node = node;
    el.setting = setting;
    el.outcome = "k" + std::to_string(k);
    el.outcome_value = values[k];
    el.matrix = std::move(cj);
    el.sdc_flag = sdc_flag;
    out.push_back(std::move(el));
  }
  return out;
}

std::vector<InstrumentElement> spin_instrument(const std::string& node,
                                               const std::string& setting,
                                               double theta, bool sdc_flag) {
  CMatrix obs(2, 2);
  obs << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
  CMatrix plus = (identity(2) + obs) / 2.0;
  CMatrix minus = (identity(2) - obs) / 2.0;
  auto out = projective_instrument(node, setting, {plus, minus}, {1.0, -1.0},
                                   sdc_flag);
  out[0].outcome = "+1";
  out[1].outcome = "-1";
  return out;
}

namespace {

std::vector<std::int64_t> space_strides(const std::vector<ElementarySpace>& spaces) {
  std::vector<std::int64_t> s(spaces.size());
  std::int64_t acc = 1;
  for (int i = static_cast<int>(spaces.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= spaces[i].dim;
  }
  return s;
}

// Embeds an operator living on `sub` (registry indices in the matrix's kron
// order) into the ordered global space.
CMatrix embed(const CMatrix& m, const std::vector<int>& sub,
              const std::vector<ElementarySpace>& spaces) {
  const auto strides = space_strides(spaces);
  std::int64_t total = 1;
  for (const auto& s : spaces) total *= s.dim;

  std::int64_t sub_dim = 1;
  for (int s : sub) sub_dim *= spaces[s].dim;
  if (m.rows() != sub_dim || m.cols() != sub_dim)
    throw std::invalid_argument("factor matrix does not match its spaces");

  // Position of a global index within the factor's kron order.
  auto sub_index = [&](std::int64_t global) {
    std::int64_t r = 0;
    for (int s : sub)
      r = r * spaces[s].dim + (global / strides[s]) % spaces[s].dim;
    return r;
  };
  // Enumerate complement assignments.
  std::vector<int> rest;
  for (int i = 0; i < static_cast<int>(spaces.size()); ++i)
    if (std::find(sub.begin(), sub.end(), i) == sub.end()) rest.push_back(i);

  CMatrix out = CMatrix::Zero(total, total);
  std::int64_t rest_count = 1;
  for (int r : rest) rest_count *= spaces[r].dim;

  // Base global offsets of every subset row index, for one rest assignment.
  std::vector<std::int64_t> sub_offsets(sub_dim);
  for (std::int64_t i = 0; i < sub_dim; ++i) {
    std::int64_t off = 0, v = i;
    for (int k = static_cast<int>(sub.size()) - 1; k >= 0; --k) {
      off += (v % spaces[sub[k]].dim) * strides[sub[k]];
      v /= spaces[sub[k]].dim;
    }
    sub_offsets[i] = off;
  }
  for (std::int64_t e = 0; e < rest_count; ++e) {
    std::int64_t base = 0, v = e;
    for (int k = static_cast<int>(rest.size()) - 1; k >= 0; --k) {
      base += (v % spaces[rest[k]].dim) * strides[rest[k]];
      v /= spaces[rest[k]].dim;
    }
    for (std::int64_t i = 0; i < sub_dim; ++i)
      for (std::int64_t j = 0; j < sub_dim; ++j)
        out(base + sub_offsets[i], base + sub_offsets[j]) = m(i, j);
  }
  return out;
}

// Partial trace over `traced` (registry indices) of an operator on `sub`.
CMatrix trace_out(const CMatrix& m, const std::vector<int>& sub,
                  const std::vector<int>& traced,
                  const std::vector<ElementarySpace>& spaces) {
  std::vector<int> kept;
  for (int s : sub)
    if (std::find(traced.begin(), traced.end(), s) == traced.end())
      kept.push_back(s);
  std::int64_t kdim = 1, tdim = 1;
  for (int s : kept) kdim *= spaces[s].dim;
  for (int s : sub)
    if (std::find(kept.begin(), kept.end(), s) == kept.end()) tdim *= spaces[s].dim;

  // index decomposition in the factor's own order
  std::vector<std::int64_t> sub_strides(sub.size());
  std::int64_t acc = 1;
  for (int k = static_cast<int>(sub.size()) - 1; k >= 0; --k) {
    sub_strides[k] = acc;
    acc *= spaces[sub[k]].dim;
  }
  auto split = [&](std::int64_t idx) {
    std::int64_t kidx = 0, tidx = 0;
    for (std::size_t k = 0; k < sub.size(); ++k) {
      const std::int64_t digit = (idx / sub_strides[k]) % spaces[sub[k]].dim;
      if (std::find(traced.begin(), traced.end(), sub[k]) != traced.end())
        tidx = tidx * spaces[sub[k]].dim + digit;
      else
        kidx = kidx * spaces[sub[k]].dim + digit;
    }
    return std::pair{kidx, tidx};
  };

  CMatrix out = CMatrix::Zero(kdim, kdim);
  const std::int64_t dim = m.rows();
  for (std::int64_t i = 0; i < dim; ++i) {
    auto [ki, ti] = split(i);
    for (std::int64_t j = 0; j < dim; ++j) {
      auto [kj, tj] = split(j);
      if (ti == tj) out(ki, kj) += m(i, j);
    }
  }
  return out;
}

}  // namespace

std::int64_t ProcessOperator::global_dim() const {
  std::int64_t d = 1;
  for (const auto& s : spaces_) d *= s.dim;
  return d;
}

CMatrix ProcessOperator::dense(std::int64_t cap) const {
  const std::int64_t d = global_dim();
  if (d > cap)
    throw std::runtime_error("process operator too large to materialize");
  CMatrix sigma = CMatrix::Identity(d, d);
  for (int n : topo_) sigma = sigma * embed(factors_[n].matrix, factors_[n].spaces, spaces_);
  return sigma;
}

int ProcessOperator::node_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
    if (nodes_[i].name == name) return i;
  throw std::invalid_argument("unknown node: " + name);
}

std::vector<int> ProcessOperator::instrument_spaces(int node) const {
  std::vector<int> out = out_spaces_[node];
  out.push_back(in_space_[node]);
  return out;
}

ProcessOperator assemble_process(const std::vector<NodeSpec>& nodes,
                                 std::vector<ChannelCJ> channels) {
  ProcessOperator p;
  p.nodes_ = nodes;
  const int n = static_cast<int>(nodes.size());

  auto index_of = [&](const std::string& name) {
    for (int i = 0; i < n; ++i)
      if (nodes[i].name == name) return i;
    throw std::invalid_argument("unknown parent node: " + name);
  };

  // children in node order; topological order via Kahn
  std::vector<std::vector<int>> children(n);
  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v) {
    if (nodes[v].input_dim < 1 || nodes[v].output_dim < 1)
      throw std::invalid_argument("node dimensions must be >= 1");
    for (const auto& pa : nodes[v].parents) {
      children[index_of(pa)].push_back(v);
      ++indeg[v];
    }
  }
  std::deque<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    p.topo_.push_back(v);
    for (int c : children[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(p.topo_.size()) != n)
    throw std::invalid_argument("node graph has a directed cycle");

  // Channel lookup and slice dims. The slice a child consumes from a parent
  // comes from parent_dims, or for single-parent nodes from the channel's
  // input dimension.
  std::vector<const ChannelCJ*> chan(n, nullptr);
  for (const auto& c : channels) {
    int v = index_of(c.node);
    if (chan[v]) throw std::invalid_argument("duplicate channel for " + c.node);
    chan[v] = &c;
  }
  for (int v = 0; v < n; ++v)
    if (!chan[v])
      throw std::invalid_argument("missing channel for " + nodes[v].name);

  std::vector<std::vector<int>> slice_dims(n);  // aligned with parents
  for (int v = 0; v < n; ++v) {
    const auto& spec = nodes[v];
    if (!spec.parent_dims.empty()) {
      if (spec.parent_dims.size() != spec.parents.size())
        throw std::invalid_argument("parent_dims mismatch at " + spec.name);
      slice_dims[v] = spec.parent_dims;
    } else if (spec.parents.size() == 1) {
      const std::int64_t rows = chan[v]->matrix.rows();
      if (rows % spec.input_dim != 0)
        throw std::invalid_argument("channel shape mismatch at " + spec.name);
      slice_dims[v] = {static_cast<int>(rows / spec.input_dim)};
    } else if (!spec.parents.empty()) {
      throw std::invalid_argument("multi-parent node " + spec.name +
                                  " needs parent_dims");
    }
  }

  // Registry: per node an input space, then output slices (or a leaf output).
  p.in_space_.assign(n, -1);
  p.out_spaces_.assign(n, {});
  auto add_space = [&](const std::string& label, int dim) {
    p.spaces_.push_back({label, dim});
    return static_cast<int>(p.spaces_.size()) - 1;
  };
  for (int v = 0; v < n; ++v)
    p.in_space_[v] = add_space("in:" + nodes[v].name, nodes[v].input_dim);
  std::vector<std::vector<int>> slice_of(n, std::vector<int>(n, -1));  // [parent][child]
  for (int v = 0; v < n; ++v) {
    if (children[v].empty()) {
      p.out_spaces_[v].push_back(add_space("out:" + nodes[v].name,
                                           nodes[v].output_dim));
      continue;
    }
    std::int64_t prod = 1;
    for (int c : children[v]) {
      int at = -1;
      for (std::size_t k = 0; k < nodes[c].parents.size(); ++k)
        if (index_of(nodes[c].parents[k]) == v) at = static_cast<int>(k);
      const int dim = slice_dims[c][at];
      slice_of[v][c] =
          add_space("out:" + nodes[v].name + ":" + nodes[c].name, dim);
      p.out_spaces_[v].push_back(slice_of[v][c]);
      prod *= dim;
    }
    if (prod != nodes[v].output_dim)
      throw std::invalid_argument("output slices of " + nodes[v].name +
                                  " do not multiply to its output dimension");
  }

  auto label_index = [&](const std::string& label) {
    for (int i = 0; i < static_cast<int>(p.spaces_.size()); ++i)
      if (p.spaces_[i].label == label) return i;
    throw std::invalid_argument("unknown space label: " + label);
  };

  // Factors: channel of node v on [in:v, parent slices...].
  for (int v = 0; v < n; ++v) {
    Factor f;
    f.node = nodes[v].name;
    f.matrix = chan[v]->matrix;
    if (!chan[v]->space_labels.empty()) {
      p.default_wiring_ = false;
      for (const auto& label : chan[v]->space_labels)
        f.spaces.push_back(label_index(label));
    } else {
      f.spaces.push_back(p.in_space_[v]);
      for (std::size_t k = 0; k < nodes[v].parents.size(); ++k) {
        const int pa = index_of(nodes[v].parents[k]);
        f.spaces.push_back(slice_of[pa][v]);
      }
    }
    std::int64_t want = 1;
    for (int s : f.spaces) want *= p.spaces_[s].dim;
    if (f.matrix.rows() != want || f.matrix.cols() != want)
      throw std::invalid_argument("channel for " + nodes[v].name +
                                  " has the wrong dimension");

    // Positivity and trace preservation (partial trace over the channel's
    // output, i.e. the node input, must be the identity).
    Eigen::SelfAdjointEigenSolver<CMatrix> es(f.matrix, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kTol)
      throw std::invalid_argument("channel for " + nodes[v].name +
                                  " is not positive semidefinite");
    if (!nodes[v].parents.empty() && chan[v]->space_labels.empty()) {
      CMatrix reduced =
          trace_out(f.matrix, f.spaces, {f.spaces.front()}, p.spaces_);
      const std::int64_t in_dim = reduced.rows();
      if ((reduced - CMatrix::Identity(in_dim, in_dim)).cwiseAbs().maxCoeff() >
          kTol)
        throw std::invalid_argument("channel for " + nodes[v].name +
                                    " is not trace preserving");
    }
    p.factors_.push_back(std::move(f));
  }

  // Pairwise commutation. Disjoint supports commute exactly; overlapping
  // supports get a numerical check on the union space.
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      std::vector<int> shared;
      for (int s : p.factors_[a].spaces)
        for (int t : p.factors_[b].spaces)
          if (s == t) shared.push_back(s);
      if (shared.empty()) continue;
      std::vector<int> uni = p.factors_[a].spaces;
      for (int s : p.factors_[b].spaces)
        if (std::find(uni.begin(), uni.end(), s) == uni.end()) uni.push_back(s);
      std::vector<ElementarySpace> local;
      std::vector<int> amap, bmap;
      for (int s : uni) local.push_back(p.spaces_[s]);
      auto pos = [&](int s) {
        return static_cast<int>(std::find(uni.begin(), uni.end(), s) -
                                uni.begin());
      };
      for (int s : p.factors_[a].spaces) amap.push_back(pos(s));
      for (int s : p.factors_[b].spaces) bmap.push_back(pos(s));
      CMatrix fa = embed(p.factors_[a].matrix, amap, local);
      CMatrix fb = embed(p.factors_[b].matrix, bmap, local);
      if (spectral_norm(fa * fb - fb * fa) > kTol)
        throw QmcViolation("channels for " + nodes[a].name + " and " +
                           nodes[b].name + " do not commute");
    }
  }
  return p;
}

namespace {

void validate_instruments(const ProcessOperator& process,
                          const std::vector<std::vector<InstrumentElement>>& ins) {
  for (const auto& elements : ins) {
    if (elements.empty()) throw std::invalid_argument("empty instrument");
    const int v = process.node_index(elements.front().node);
    const auto& spec = process.nodes()[v];
    const std::int64_t want =
        static_cast<std::int64_t>(spec.input_dim) * spec.output_dim;
    CMatrix sum =
        CMatrix::Zero(elements.front().matrix.rows(), elements.front().matrix.cols());
    for (const auto& el : elements) {
      if (el.node != elements.front().node)
        throw std::invalid_argument("instrument mixes nodes");
      if (el.matrix.rows() != want)
        throw std::invalid_argument("instrument for " + el.node +
                                    " has the wrong dimension");
      Eigen::SelfAdjointEigenSolver<CMatrix> es(el.matrix, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -kTol)
        throw std::invalid_argument("instrument element not positive");
      sum += el.matrix;
    }
    // Sum over outcomes must be trace preserving: tracing out the node
    // output leaves the identity on the node input.
    auto spaces = process.instrument_spaces(v);
    std::vector<int> traced(spaces.begin(), spaces.end() - 1);
    CMatrix reduced = traced.empty()
                          ? sum
                          : trace_out(sum, spaces, traced, process.spaces());
    const std::int64_t in_dim = reduced.rows();
    if ((reduced - CMatrix::Identity(in_dim, in_dim)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("instrument for " +
                                  elements.front().node +
                                  " is not trace preserving over outcomes");
  }
}

}  // namespace

double JointDistribution::prob(const std::vector<int>& outcome) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < outcome.size(); ++k)
    idx = idx * outcome_labels[k].size() + outcome[k];
  return probabilities[idx];
}

double JointDistribution::product_expectation() const {
  double e = 0.0;
  std::vector<int> digits(node_names.size(), 0);
  for (std::size_t idx = 0; idx < probabilities.size(); ++idx) {
    std::size_t rest = idx;
    double v = 1.0;
    for (int k = static_cast<int>(node_names.size()) - 1; k >= 0; --k) {
      const std::size_t card = outcome_labels[k].size();
      digits[k] = static_cast<int>(rest % card);
      rest /= card;
      v *= outcome_values[k][digits[k]];
    }
    e += v * probabilities[idx];
  }
  return e;
}

std::vector<double> JointDistribution::marginal(std::size_t node_pos) const {
  std::vector<double> out(outcome_labels[node_pos].size(), 0.0);
  for (std::size_t idx = 0; idx < probabilities.size(); ++idx) {
    std::size_t rest = idx;
    int digit = 0;
    for (int k = static_cast<int>(node_names.size()) - 1; k >= 0; --k) {
      const std::size_t card = outcome_labels[k].size();
      if (static_cast<std::size_t>(k) == node_pos)
        digit = static_cast<int>(rest % card);
      rest /= card;
    }
    out[digit] += probabilities[idx];
  }
  return out;
}

JointDistribution joint_probabilities(
    const ProcessOperator& process,
    const std::vector<std::vector<InstrumentElement>>& instruments) {
  validate_instruments(process, instruments);
  const int n = static_cast<int>(process.nodes().size());

  // Instrument per node; missing nodes get the trivial identity intervention.
  std::vector<const std::vector<InstrumentElement>*> chosen(n, nullptr);
  for (const auto& ins : instruments)
    chosen[process.node_index(ins.front().node)] = &ins;
  std::vector<std::vector<InstrumentElement>> trivial(n);
  for (int v = 0; v < n; ++v) {
    if (chosen[v]) continue;
    const auto& spec = process.nodes()[v];
    if (spec.input_dim != spec.output_dim)
      throw std::invalid_argument("node " + spec.name +
                                  " needs an explicit instrument");
    InstrumentElement el;
    el.node = spec.name;
    el.setting = "id";
    el.outcome = "pass";
    el.matrix = choi_from_unitary(spec.name, identity(spec.input_dim)).matrix;
    trivial[v].push_back(std::move(el));
    chosen[v] = &trivial[v];
  }

  JointDistribution dist;
  std::vector<int> observed;  // nodes with more than the trivial outcome
  for (const auto& ins : instruments) {
    const int v = process.node_index(ins.front().node);
    observed.push_back(v);
    dist.node_names.push_back(process.nodes()[v].name);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& el : ins) {
      labels.push_back(el.outcome);
      values.push_back(el.outcome_value);
    }
    dist.outcome_labels.push_back(std::move(labels));
    dist.outcome_values.push_back(std::move(values));
  }

  std::size_t combos = 1;
  for (const auto& labels : dist.outcome_labels) combos *= labels.size();

  const bool use_dense = process.global_dim() <= 512;
  CMatrix sigma;
  if (use_dense) sigma = process.dense(512);

  dist.probabilities.assign(combos, 0.0);
  std::vector<int> digits(observed.size(), 0);
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::size_t rest = combo;
    for (int k = static_cast<int>(observed.size()) - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(rest % dist.outcome_labels[k].size());
      rest /= dist.outcome_labels[k].size();
    }
    // Active instrument element per node for this outcome combination.
    std::vector<const CMatrix*> tau(n, nullptr);
    for (int v = 0; v < n; ++v) tau[v] = &(*chosen[v])[0].matrix;
    for (std::size_t k = 0; k < observed.size(); ++k)
      tau[observed[k]] = &(*chosen[observed[k]])[digits[k]].matrix;

    double prob;
    if (use_dense) {
      // P = Tr[ sigma * transpose(tensor of instrument elements) ]
      const std::int64_t d = process.global_dim();
      CMatrix t = CMatrix::Identity(d, d);
      for (int v = 0; v < n; ++v)
        t = t * embed(tau[v]->transpose(), process.instrument_spaces(v),
                      process.spaces());
      prob = (sigma * t).trace().real();
    } else {
      // Associative contraction over the forest, leaves to roots.
      if (!process.default_wiring())
        throw std::runtime_error(
            "explicitly wired processes must fit the dense evaluation path");
      std::vector<CMatrix> message(n);
      std::vector<bool> have_message(n, false);
      // A node's message lives on the slice its channel reads from its parent.
      std::vector<int> message_space(n, -1);
      for (int c = 0; c < n; ++c)
        if (process.factors()[c].spaces.size() > 1)
          message_space[c] = process.factors()[c].spaces[1];
      std::vector<int> order = process.topo_order();
      prob = 1.0;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        const auto& spec = process.nodes()[v];
        if (spec.parents.size() > 1)
          throw std::runtime_error(
              "contraction path requires at most one parent per node");
        // Local spaces: factor spaces + instrument spaces (+ children
        // messages live on this node's out slices already).
        std::vector<int> local = process.factors()[v].spaces;
        for (int s : process.instrument_spaces(v))
          if (std::find(local.begin(), local.end(), s) == local.end())
            local.push_back(s);
        std::vector<ElementarySpace> local_spaces;
        for (int s : local) local_spaces.push_back(process.spaces()[s]);
        auto lpos = [&](int s) {
          auto at = std::find(local.begin(), local.end(), s);
          if (at == local.end())
            throw std::logic_error("space missing from local set");
          return static_cast<int>(at - local.begin());
        };
        std::vector<int> fmap, imap;
        for (int s : process.factors()[v].spaces) fmap.push_back(lpos(s));
        for (int s : process.instrument_spaces(v)) imap.push_back(lpos(s));

        CMatrix prod = embed(process.factors()[v].matrix, fmap, local_spaces);
        // children messages on this node's out slices
        for (int s : process.out_spaces(v)) {
          for (int c = 0; c < n; ++c) {
            if (!have_message[c] || message_space[c] != s) continue;
            prod = prod * embed(message[c], {lpos(s)}, local_spaces);
            have_message[c] = false;
          }
        }
        prod = prod * embed(tau[v]->transpose(), imap, local_spaces);

        // Trace out everything but the parent slice.
        std::vector<int> keep;
        if (!spec.parents.empty()) {
          // parent slice is the second factor space under default wiring
          keep.push_back(process.factors()[v].spaces[1]);
        }
        std::vector<int> traced;
        for (int s : local)
          if (std::find(keep.begin(), keep.end(), s) == keep.end())
            traced.push_back(s);
        CMatrix reduced = trace_out(prod, local, traced, process.spaces());
        if (keep.empty()) {
          prob *= reduced(0, 0).real();
        } else {
          message[v] = std::move(reduced);
          have_message[v] = true;
        }
      }
    }
    dist.probabilities[combo] = std::max(0.0, prob);
  }

  double total = 0.0;
  for (double p : dist.probabilities) total += p;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::runtime_error("outcome probabilities do not sum to 1");
  return dist;
}

CMatrix singlet_density() {
  CVector psi = CVector::Zero(4);
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = -1.0 / std::sqrt(2.0);
  return psi * psi.adjoint();
}

namespace {

ProcessOperator bell_process(const CMatrix& rho_lambda) {
  std::vector<NodeSpec> nodes{
      {"source", 4, 4, {}, {}},
      {"a", 2, 1, {"source"}, {}},
      {"b", 2, 1, {"source"}, {}},
  };
  std::vector<ChannelCJ> channels;
  channels.push_back(choi_from_state("source", rho_lambda));
  channels.push_back(choi_from_unitary("a", identity(2)));
  channels.push_back(choi_from_unitary("b", identity(2)));
  return assemble_process(nodes, std::move(channels));
}

}  // namespace

JointDistribution bell_scenario(double angle_a, double angle_b,
                                const CMatrix& rho_lambda) {
  auto process = bell_process(rho_lambda);
  return joint_probabilities(process, {spin_instrument("a", "s", angle_a),
                                       spin_instrument("b", "t", angle_b)});
}

double bell_correlator(double angle_a, double angle_b, const CMatrix& rho_lambda) {
  return bell_scenario(angle_a, angle_b, rho_lambda).product_expectation();
}

double chsh_value(double a, double a_prime, double b, double b_prime,
                  const CMatrix& rho_lambda) {
  return bell_correlator(a, b, rho_lambda) + bell_correlator(a, b_prime, rho_lambda) +
         bell_correlator(a_prime, b, rho_lambda) -
         bell_correlator(a_prime, b_prime, rho_lambda);
}

ChshAngles tsirelson_angles() {
  const double pi = std::numbers::pi;
  return ChshAngles{0.0, 3 * pi / 2, 3 * pi / 4, 5 * pi / 4};
}

namespace {

CMatrix cnot() {
  CMatrix u = CMatrix::Zero(4, 4);
  u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

// Friend interaction as a channel: a CNOT entangling the incoming qubit with
// a fresh memory qubit. Isometry Kraus K = U (I (x) |0>).
CMatrix friend_isometry() {
  CMatrix k(4, 2);
  k.setZero();
  // |0> -> |00>, |1> -> |11>
  k(0, 0) = 1.0;
  k(3, 1) = 1.0;
  return k;
}

// Wigner's sharp measurement on the lab: the x-z spin observable transported
// through the friend unitary.
std::vector<InstrumentElement> wigner_instrument(const std::string& node,
                                                 double theta) {
  CMatrix obs(2, 2);
  obs << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
  CMatrix big = cnot() * kron(obs, identity(2)) * cnot().adjoint();
  CMatrix plus = (identity(4) + big) / 2.0;
  CMatrix minus = (identity(4) - big) / 2.0;
  auto out =
      projective_instrument(node, "theta", {plus, minus}, {1.0, -1.0}, true);
  out[0].outcome = "+1";
  out[1].outcome = "-1";
  return out;
}

// Friend measurement with a determinate outcome: project the incoming qubit
// in the computational basis, then entangle with the memory.
std::vector<InstrumentElement> friend_instrument(const std::string& node) {
  std::vector<InstrumentElement> out;
  for (int c = 0; c < 2; ++c) {
    CMatrix proj = CMatrix::Zero(2, 2);
    proj(c, c) = 1.0;
    CMatrix kraus = cnot() * kron(proj, CMatrix::Identity(2, 1).eval());
    // kraus: C^2 -> C^4, rho -> U (P rho P (x) |0><0|) U+
    InstrumentElement el;
    el.node = node;
    el.setting = "z";
    el.outcome = c == 0 ? "+1" : "-1";
    el.outcome_value = c == 0 ? 1.0 : -1.0;
    el.matrix = choi_matrix({kraus});
    el.sdc_flag = true;
    out.push_back(std::move(el));
  }
  return out;
}

}  // namespace

EwfResult ewf_scenario(bool isolated, double wigner_angle_a,
                       double wigner_angle_b) {
  EwfResult result;
  result.isolated = isolated;

  if (isolated) {
    std::vector<NodeSpec> nodes{
        {"source", 4, 4, {}, {}},
        {"wigner_a", 4, 1, {"source"}, {}},
        {"wigner_b", 4, 1, {"source"}, {}},
    };
    std::vector<ChannelCJ> channels;
    channels.push_back(choi_from_state("source", singlet_density()));
    channels.push_back(choi_from_kraus("wigner_a", {friend_isometry()}));
    channels.push_back(choi_from_kraus("wigner_b", {friend_isometry()}));
    auto process = assemble_process(nodes, std::move(channels));
    result.dist = joint_probabilities(
        process, {wigner_instrument("wigner_a", wigner_angle_a),
                  wigner_instrument("wigner_b", wigner_angle_b)});

    // Reversal: run both friend unitaries on the joint state, then their
    // inverses; the initial state must return exactly.
    CVector singlet = CVector::Zero(4);
    singlet(1) = 1.0 / std::sqrt(2.0);
    singlet(2) = -1.0 / std::sqrt(2.0);
    auto initial = tensor_product(
        StateVector::make(singlet, {2, 2}),
        tensor_product(StateVector::basis(2, 0), StateVector::basis(2, 0)));
    auto forward_a = apply_unitary(initial, cnot(), {0, 2});
    auto forward = apply_unitary(forward_a, cnot(), {1, 3});
    auto back_a = apply_unitary(forward, cnot().adjoint(), {0, 2});
    auto back = apply_unitary(back_a, cnot().adjoint(), {1, 3});
    result.reversal_fidelity = state_fidelity(initial, back);
  } else {
    std::vector<NodeSpec> nodes{
        {"source", 4, 4, {}, {}},
        {"friend_a", 2, 4, {"source"}, {}},
        {"friend_b", 2, 4, {"source"}, {}},
        {"wigner_a", 4, 1, {"friend_a"}, {}},
        {"wigner_b", 4, 1, {"friend_b"}, {}},
    };
    std::vector<ChannelCJ> channels;
    channels.push_back(choi_from_state("source", singlet_density()));
    channels.push_back(choi_from_unitary("friend_a", identity(2)));
    channels.push_back(choi_from_unitary("friend_b", identity(2)));
    channels.push_back(choi_from_unitary("wigner_a", identity(4)));
    channels.push_back(choi_from_unitary("wigner_b", identity(4)));
    auto process = assemble_process(nodes, std::move(channels));
    result.dist = joint_probabilities(
        process, {wigner_instrument("wigner_a", wigner_angle_a),
                  wigner_instrument("wigner_b", wigner_angle_b),
                  friend_instrument("friend_a"), friend_instrument("friend_b")});
    result.reversal_fidelity = 0.0;
  }
  return result;
}

}  // namespace endqt::qcm
