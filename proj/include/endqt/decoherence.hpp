#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "endqt/quantum.hpp"
#include "endqt/rng.hpp"

namespace endqt {

struct CouplingDistribution {
  enum class Kind { uniform, fixed };

  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;  // fixed kind only
  std::uint64_t seed = 0;

  static CouplingDistribution uniform01(std::uint64_t seed);
  static CouplingDistribution make_uniform(double lo, double hi, std::uint64_t seed);
  static CouplingDistribution make_fixed(std::vector<double> values);

  // Couplings for one bath; `stream` selects an independent draw.
  std::vector<double> sample(std::size_t count, std::uint64_t stream) const;
};

// One target qubit coupled to G environment spins.
struct SpinBathConfig {
  std::vector<double> couplings;    // g_j, angular frequency
  std::vector<cdouble> env_alpha;   // per-spin weights, |a|^2+|b|^2 = 1
  std::vector<cdouble> env_beta;
  cdouble target_a{1.0, 0.0};
  cdouble target_b{0.0, 0.0};

  static SpinBathConfig make(std::vector<double> couplings,
                             std::vector<cdouble> env_alpha,
                             std::vector<cdouble> env_beta, cdouble target_a,
                             cdouble target_b);
  // |alpha_j| = |beta_j| = 1/sqrt(2) for every spin.
  static SpinBathConfig equal_weight(std::vector<double> couplings,
                                     cdouble target_a, cdouble target_b);

  std::size_t bath_size() const { return couplings.size(); }
  // |alpha_j|^2 - |beta_j|^2 per spin.
  std::vector<double> weight_imbalance() const;
};

struct DecoherenceTrace {
  std::vector<double> times;
  std::vector<cdouble> z;
  std::optional<double> gamma;
  std::optional<double> decoherence_time;

  // Validates |z(0)| = 1 (1e-12) and strictly increasing times.
  static DecoherenceTrace make(std::vector<double> times, std::vector<cdouble> z);
};

struct TimeGrid {
  double t_max = 10.0;
  double dt = 0.01;
  std::vector<double> points() const;  // 0, dt, ..., up to and including t_max
};

cdouble z_factor_general(const SpinBathConfig& cfg, double t);
double z_factor_equal_weight(const std::vector<double>& couplings, double t);

// Kernel-backed evaluation over a grid.
DecoherenceTrace compute_trace(const SpinBathConfig& cfg, const TimeGrid& grid);
DecoherenceTrace compute_trace_equal_weight(const std::vector<double>& couplings,
                                            const TimeGrid& grid);

struct EntangleResult {
  StateVector joint;        // target first, then the G environment spins
  DensityOperator reduced;  // 2x2 target state
};

// Exact-mode entangling step: builds the full 2^(G+1) joint state.
// Throws for G > max_exact_bath (use the analytic product formula instead).
inline constexpr int kMaxExactBath = 20;
EntangleResult entangle_step(const StateVector& target, const SpinBathConfig& cfg,
                             double t);

// Least-squares Gamma for |z| ~ exp(-Gamma^2 t^2). Fits ln|z| against t^2
// through the origin, on samples with |z| in (0.1, 0.999) taken before the
// first sustained threshold crossing.
double fit_gaussian_decay(const DecoherenceTrace& trace);

// Smallest sampled T with |z(t)| < epsilon for every sample in [T, T+window].
// Absent if no such T fits inside the trace.
std::optional<double> estimate_decoherence_time(const DecoherenceTrace& trace,
                                                double epsilon, double window);

// Normalized entropy S(rho)/ln(N), in [0, 1]. Rejects N = 1.
double differentiation_degree(const DensityOperator& rho_reduced);

// Interaction-strength convention: the spin-spin coupling enters the
// Hamiltonian with a 1/2 prefactor, so a coupling g drives the product
// formula at rate g/2. Everything that consumes a CouplingDistribution
// (timescale estimates, chain steps, plot data) applies this mapping;
// z_factor_* take the formula rates directly.
std::vector<double> phase_rates(const std::vector<double>& hamiltonian_couplings);
DecoherenceTrace trace_for_couplings(const std::vector<double>& hamiltonian_couplings,
                                     const TimeGrid& grid);

// Mean estimated decoherence time over independent coupling draws; drops
// draws where no sustained crossing exists.
struct DecoherenceTimeStats {
  double mean = 0.0;
  double stddev = 0.0;
  int found = 0;
  int total = 0;
};
DecoherenceTimeStats mean_decoherence_time(int bath_size,
                                           const CouplingDistribution& dist,
                                           double epsilon, double window,
                                           const TimeGrid& grid, int n_draws,
                                           std::uint64_t stream_base = 0);

// CSV with header t,re_z,im_z,abs_z.
void write_trace_csv(const DecoherenceTrace& trace, std::ostream& os);

}  // namespace endqt
