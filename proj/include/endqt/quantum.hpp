#pragma once

#include <Eigen/Dense>

#include <complex>
#include <utility>
#include <vector>

#include "endqt/rng.hpp"

namespace endqt {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// Tolerance for algebraic identities (norms, traces, Hermiticity).
inline constexpr double kAlgebraTol = 1e-12;
// Tolerance for spectral operations (eigendecompositions, unitarity checks).
inline constexpr double kSpectralTol = 1e-10;

CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

// Largest singular value.
double spectral_norm(const CMatrix& m);

// Finite-dimensional pure state over an ordered list of subsystems.
// Subsystem 0 is the leftmost tensor factor.
struct StateVector {
  CVector amplitudes;
  std::vector<int> dims;

  // Validates unit norm (1e-12) and that the dims product matches the length.
  static StateVector make(CVector amplitudes, std::vector<int> dims);

  static StateVector basis(int dim, int index);
  static StateVector qubit(cdouble a, cdouble b);

  int dim() const { return static_cast<int>(amplitudes.size()); }
};

struct DensityOperator {
  CMatrix matrix;
  std::vector<int> dims;

  // Validates Hermiticity and unit trace (1e-12) and spectrum >= -1e-12.
  static DensityOperator make(CMatrix matrix, std::vector<int> dims);

  static DensityOperator pure(const StateVector& s);
  static DensityOperator maximally_mixed(int dim);

  int dim() const { return static_cast<int>(matrix.rows()); }
};

// Hermitian observable with a cached eigendecomposition. Degenerate
// eigenvalues are merged into a single eigenspace projector; entries are
// ordered by decreasing eigenvalue.
class Observable {
 public:
  static Observable make(CMatrix hermitian);

  static Observable pauli_x();
  static Observable pauli_y();
  static Observable pauli_z();
  // cos(theta) sigma_z + sin(theta) sigma_x: spin direction in the x-z plane.
  static Observable spin_xz(double theta);

  const CMatrix& matrix() const { return matrix_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const std::vector<CMatrix>& projectors() const { return projectors_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Observable() = default;
  CMatrix matrix_;
  std::vector<double> eigenvalues_;
  std::vector<CMatrix> projectors_;
};

struct OutcomeSample {
  double eigenvalue = 0.0;
  int index = 0;  // position in the born_probabilities list
  double probability = 0.0;
};

StateVector tensor_product(const StateVector& a, const StateVector& b);
DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b);

// Applies u to the listed subsystems (in the given order); u must be unitary
// on that subspace within 1e-10.
StateVector apply_unitary(const StateVector& state, const CMatrix& u,
                          const std::vector<int>& targets);

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& keep);

// Reduced density operator of |psi><psi| over the kept subsystems, computed
// without forming the full matrix.
DensityOperator reduced_density(const StateVector& psi, const std::vector<int>& keep);

// In nats. Eigenvalues <= 1e-12 contribute zero.
double von_neumann_entropy(const DensityOperator& rho);

// (eigenvalue, probability) pairs ordered by decreasing eigenvalue.
std::vector<std::pair<double, double>> born_probabilities(const DensityOperator& rho,
                                                          const Observable& obs);

OutcomeSample sample_outcome(const DensityOperator& rho, const Observable& obs,
                             SplitRng& rng);

// Spectral norm of [h, O]. Zero (within 1e-10) iff they commute.
double commutator_defect(const CMatrix& h, const Observable& obs);

// |<a|b>|^2 for unit vectors.
double state_fidelity(const StateVector& a, const StateVector& b);

}  // namespace endqt
