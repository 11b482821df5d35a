#pragma once

#include <cmath>
#include <vector>

#include "endqt/quantum.hpp"
#include "endqt/rng.hpp"

namespace endqt::testing {

inline CVector random_amplitudes(SplitRng& rng, int dim) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i)
    v(i) = cdouble(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  v /= v.norm();
  return v;
}

inline StateVector random_state(SplitRng& rng, std::vector<int> dims) {
  int dim = 1;
  for (int d : dims) dim *= d;
  return StateVector::make(random_amplitudes(rng, dim), std::move(dims));
}

inline DensityOperator random_density(SplitRng& rng, int dim, int rank = 0) {
  if (rank <= 0) rank = dim;
  CMatrix m = CMatrix::Zero(dim, dim);
  double total = 0.0;
  std::vector<double> w(rank);
  for (int k = 0; k < rank; ++k) {
    w[k] = rng.uniform(0.05, 1.0);
    total += w[k];
  }
  for (int k = 0; k < rank; ++k) {
    CVector v = random_amplitudes(rng, dim);
    m += (w[k] / total) * (v * v.adjoint());
  }
  return DensityOperator::make((m + m.adjoint().eval()) / 2.0, {dim});
}

inline CMatrix random_hermitian(SplitRng& rng, int dim) {
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      m(i, j) = cdouble(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return (m + m.adjoint().eval()) / 2.0;
}

inline CMatrix random_unitary(SplitRng& rng, int dim) {
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      m(i, j) = cdouble(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  Eigen::HouseholderQR<CMatrix> qr(m);
  CMatrix q = qr.householderQ();
  // normalize column phases so the factorization is unique-ish
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    cdouble d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline CMatrix cnot_matrix() {
  CMatrix u = CMatrix::Zero(4, 4);
  u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

}  // namespace endqt::testing
