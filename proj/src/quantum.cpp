#include "endqt/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace endqt {

namespace {

long long dims_product(const std::vector<int>& dims) {
  long long p = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("subsystem dimension must be >= 1");
    p *= d;
  }
  return p;
}

// Strides of a mixed-radix index with dims ordered leftmost-major.
std::vector<long long> strides_of(const std::vector<int>& dims) {
  std::vector<long long> s(dims.size());
  long long acc = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

void check_subsystems(const std::vector<int>& subsys, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (int t : subsys) {
    if (t < 0 || t >= static_cast<int>(n))
      throw std::out_of_range("subsystem index " + std::to_string(t) + " out of range");
    if (seen[t]++) throw std::invalid_argument("duplicate subsystem index");
  }
}

}  // namespace

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

StateVector StateVector::make(CVector amplitudes, std::vector<int> dims) {
  if (dims_product(dims) != amplitudes.size())
    throw std::invalid_argument("dims product does not match amplitude count");
  double n2 = amplitudes.squaredNorm();
  if (std::abs(n2 - 1.0) > kAlgebraTol)
    throw std::invalid_argument("state vector is not normalized");
  StateVector s;
  s.amplitudes = std::move(amplitudes);
  s.dims = std::move(dims);
  return s;
}

StateVector StateVector::basis(int dim, int index) {
  if (index < 0 || index >= dim) throw std::out_of_range("basis index out of range");
  CVector v = CVector::Zero(dim);
  v(index) = 1.0;
  return make(std::move(v), {dim});
}

StateVector StateVector::qubit(cdouble a, cdouble b) {
  CVector v(2);
  v << a, b;
  return make(std::move(v), {2});
}

DensityOperator DensityOperator::make(CMatrix matrix, std::vector<int> dims) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("matrix not square");
  if (dims_product(dims) != matrix.rows())
    throw std::invalid_argument("dims product does not match matrix size");
  if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > kAlgebraTol)
    throw std::invalid_argument("density operator is not Hermitian");
  if (std::abs(matrix.trace().real() - 1.0) > kAlgebraTol ||
      std::abs(matrix.trace().imag()) > kAlgebraTol)
    throw std::invalid_argument("density operator trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kAlgebraTol)
    throw std::invalid_argument("density operator has a negative eigenvalue");
  DensityOperator r;
  r.matrix = std::move(matrix);
  r.dims = std::move(dims);
  return r;
}

DensityOperator DensityOperator::pure(const StateVector& s) {
  return make(s.amplitudes * s.amplitudes.adjoint(), s.dims);
}

DensityOperator DensityOperator::maximally_mixed(int dim) {
  return make(CMatrix::Identity(dim, dim) / static_cast<double>(dim), {dim});
}

Observable Observable::make(CMatrix hermitian) {
  if (hermitian.rows() != hermitian.cols())
    throw std::invalid_argument("observable matrix not square");
  if ((hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff() > kAlgebraTol)
    throw std::invalid_argument("observable is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian);
  const auto& evals = es.eigenvalues();
  const auto& evecs = es.eigenvectors();
  const int n = static_cast<int>(evals.size());
  double scale = std::max(1.0, std::abs(evals(0)));
  scale = std::max(scale, std::abs(evals(n - 1)));

  Observable o;
  o.matrix_ = std::move(hermitian);
  // Solver returns ascending order; merge degenerate eigenspaces, then flip
  // so entries run from the largest eigenvalue down.
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && std::abs(evals(j) - evals(i)) <= kSpectralTol * scale) ++j;
    CMatrix proj = CMatrix::Zero(n, n);
    double mean = 0.0;
    for (int k = i; k < j; ++k) {
      proj += evecs.col(k) * evecs.col(k).adjoint();
      mean += evals(k);
    }
    mean /= (j - i);
    o.eigenvalues_.push_back(mean);
    o.projectors_.push_back(std::move(proj));
    i = j;
  }
  std::reverse(o.eigenvalues_.begin(), o.eigenvalues_.end());
  std::reverse(o.projectors_.begin(), o.projectors_.end());
  return o;
}

Observable Observable::pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return make(m);
}

Observable Observable::pauli_y() {
  CMatrix m(2, 2);
  m << 0, cdouble(0, -1), cdouble(0, 1), 0;
  return make(m);
}

Observable Observable::pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return make(m);
}

Observable Observable::spin_xz(double theta) {
  CMatrix m(2, 2);
  m << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
  return make(m);
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  std::vector<int> dims = a.dims;
  dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  return StateVector::make(kron(a.amplitudes, b.amplitudes), std::move(dims));
}

DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b) {
  std::vector<int> dims = a.dims;
  dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  return DensityOperator::make(kron(a.matrix, b.matrix), std::move(dims));
}

StateVector apply_unitary(const StateVector& state, const CMatrix& u,
                          const std::vector<int>& targets) {
  check_subsystems(targets, state.dims.size());
  long long tdim = 1;
  for (int t : targets) tdim *= state.dims[t];
  if (u.rows() != u.cols() || u.rows() != tdim)
    throw std::invalid_argument("unitary size does not match targeted subspace");
  if ((u.adjoint() * u - CMatrix::Identity(tdim, tdim)).cwiseAbs().maxCoeff() >
      kSpectralTol)
    throw std::invalid_argument("matrix is not unitary on the targeted subspace");

  const auto strides = strides_of(state.dims);
  std::vector<long long> tstride(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) tstride[k] = strides[targets[k]];

  // Enumerate the non-target part of the index; gather/scatter the targeted
  // subspace through u.
  std::vector<int> rest;
  for (int s = 0; s < static_cast<int>(state.dims.size()); ++s)
    if (std::find(targets.begin(), targets.end(), s) == targets.end()) rest.push_back(s);
  long long rest_count = 1;
  for (int s : rest) rest_count *= state.dims[s];

  CVector out = CVector::Zero(state.dim());
  CVector gather(tdim);
  for (long long r = 0; r < rest_count; ++r) {
    long long base = 0;
    long long rr = r;
    for (int k = static_cast<int>(rest.size()) - 1; k >= 0; --k) {
      base += (rr % state.dims[rest[k]]) * strides[rest[k]];
      rr /= state.dims[rest[k]];
    }
    for (long long x = 0; x < tdim; ++x) {
      long long idx = base;
      long long xx = x;
      for (int k = static_cast<int>(targets.size()) - 1; k >= 0; --k) {
        idx += (xx % state.dims[targets[k]]) * tstride[k];
        xx /= state.dims[targets[k]];
      }
      gather(x) = state.amplitudes(idx);
    }
    CVector mixed = u * gather;
    for (long long x = 0; x < tdim; ++x) {
      long long idx = base;
      long long xx = x;
      for (int k = static_cast<int>(targets.size()) - 1; k >= 0; --k) {
        idx += (xx % state.dims[targets[k]]) * tstride[k];
        xx /= state.dims[targets[k]];
      }
      out(idx) = mixed(x);
    }
  }
  StateVector result;
  result.amplitudes = std::move(out);
  result.dims = state.dims;
  return result;
}

namespace {

// Shared index walk for partial traces: enumerates kept/traced parts.
struct TraceLayout {
  std::vector<int> keep;
  std::vector<int> traced;
  std::vector<long long> strides;
  long long keep_dim = 1;
  long long traced_dim = 1;
  std::vector<int> dims;

  TraceLayout(const std::vector<int>& all_dims, const std::vector<int>& keep_set)
      : keep(keep_set), dims(all_dims) {
    check_subsystems(keep, all_dims.size());
    if (keep.empty()) throw std::invalid_argument("keep set must be non-empty");
    strides = strides_of(all_dims);
    for (int s = 0; s < static_cast<int>(all_dims.size()); ++s)
      if (std::find(keep.begin(), keep.end(), s) == keep.end()) traced.push_back(s);
    for (int s : keep) keep_dim *= all_dims[s];
    for (int s : traced) traced_dim *= all_dims[s];
  }

  long long offset(const std::vector<int>& subsys, long long combined) const {
    long long off = 0;
    for (int k = static_cast<int>(subsys.size()) - 1; k >= 0; --k) {
      off += (combined % dims[subsys[k]]) * strides[subsys[k]];
      combined /= dims[subsys[k]];
    }
    return off;
  }
};

}  // namespace

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& keep) {
  TraceLayout lay(rho.dims, keep);
  CMatrix out = CMatrix::Zero(lay.keep_dim, lay.keep_dim);
  for (long long t = 0; t < lay.traced_dim; ++t) {
    long long toff = lay.offset(lay.traced, t);
    for (long long i = 0; i < lay.keep_dim; ++i) {
      long long ioff = lay.offset(lay.keep, i) + toff;
      for (long long j = 0; j < lay.keep_dim; ++j)
        out(i, j) += rho.matrix(ioff, lay.offset(lay.keep, j) + toff);
    }
  }
  std::vector<int> kept_dims;
  for (int s : lay.keep) kept_dims.push_back(rho.dims[s]);
  return DensityOperator::make(std::move(out), std::move(kept_dims));
}

DensityOperator reduced_density(const StateVector& psi, const std::vector<int>& keep) {
  TraceLayout lay(psi.dims, keep);
  CMatrix out = CMatrix::Zero(lay.keep_dim, lay.keep_dim);
  std::vector<long long> koff(lay.keep_dim);
  for (long long i = 0; i < lay.keep_dim; ++i) koff[i] = lay.offset(lay.keep, i);
  for (long long t = 0; t < lay.traced_dim; ++t) {
    long long toff = lay.offset(lay.traced, t);
    for (long long i = 0; i < lay.keep_dim; ++i) {
      cdouble ai = psi.amplitudes(koff[i] + toff);
      if (ai == cdouble{}) continue;
      for (long long j = 0; j < lay.keep_dim; ++j)
        out(i, j) += ai * std::conj(psi.amplitudes(koff[j] + toff));
    }
  }
  std::vector<int> kept_dims;
  for (int s : lay.keep) kept_dims.push_back(psi.dims[s]);
  return DensityOperator::make(std::move(out), std::move(kept_dims));
}

double von_neumann_entropy(const DensityOperator& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > kAlgebraTol) s -= lam * std::log(lam);
  }
  return s;
}

std::vector<std::pair<double, double>> born_probabilities(const DensityOperator& rho,
                                                          const Observable& obs) {
  if (rho.dim() != obs.dim())
    throw std::invalid_argument("state and observable dimensions differ");
  std::vector<std::pair<double, double>> out;
  out.reserve(obs.eigenvalues().size());
  for (std::size_t k = 0; k < obs.eigenvalues().size(); ++k) {
    double p = (obs.projectors()[k] * rho.matrix).trace().real();
    out.emplace_back(obs.eigenvalues()[k], std::max(0.0, p));
  }
  return out;
}

OutcomeSample sample_outcome(const DensityOperator& rho, const Observable& obs,
                             SplitRng& rng) {
  auto probs = born_probabilities(rho, obs);
  double u = rng.next_double();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k].second;
    if (u < acc || k + 1 == probs.size())
      return OutcomeSample{probs[k].first, static_cast<int>(k), probs[k].second};
  }
  return OutcomeSample{probs.back().first, static_cast<int>(probs.size()) - 1,
                       probs.back().second};
}

double commutator_defect(const CMatrix& h, const Observable& obs) {
  if (h.rows() != obs.dim() || h.cols() != obs.dim())
    throw std::invalid_argument("Hamiltonian and observable dimensions differ");
  return spectral_norm(h * obs.matrix() - obs.matrix() * h);
}

double state_fidelity(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("state dimensions differ");
  return std::norm(a.amplitudes.dot(b.amplitudes));
}

}  // namespace endqt
