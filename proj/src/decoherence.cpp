#include "endqt/decoherence.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "endqt/format.hpp"
#include "endqt/kernels.hpp"

namespace endqt {

CouplingDistribution CouplingDistribution::uniform01(std::uint64_t seed) {
  return make_uniform(0.0, 1.0, seed);
}

CouplingDistribution CouplingDistribution::make_uniform(double lo, double hi,
                                                        std::uint64_t seed) {
  if (!(lo < hi)) throw std::invalid_argument("uniform coupling range needs lo < hi");
  CouplingDistribution d;
  d.kind = Kind::uniform;
  d.lo = lo;
  d.hi = hi;
  d.seed = seed;
  return d;
}

CouplingDistribution CouplingDistribution::make_fixed(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("fixed couplings must be non-empty");
  CouplingDistribution d;
  d.kind = Kind::fixed;
  d.values = std::move(values);
  return d;
}

std::vector<double> CouplingDistribution::sample(std::size_t count,
                                                 std::uint64_t stream) const {
  if (kind == Kind::fixed) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = values[i % values.size()];
    return out;
  }
  SplitRng rng = SplitRng(seed).split(stream);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = rng.uniform(lo, hi);
  return out;
}

SpinBathConfig SpinBathConfig::make(std::vector<double> couplings,
                                    std::vector<cdouble> env_alpha,
                                    std::vector<cdouble> env_beta, cdouble target_a,
                                    cdouble target_b) {
  if (couplings.empty()) throw std::invalid_argument("bath must have at least one spin");
  if (env_alpha.size() != couplings.size() || env_beta.size() != couplings.size())
    throw std::invalid_argument("weight lists must match the coupling count");
  for (std::size_t j = 0; j < couplings.size(); ++j) {
    double n = std::norm(env_alpha[j]) + std::norm(env_beta[j]);
    if (std::abs(n - 1.0) > kAlgebraTol)
      throw std::invalid_argument("environment weights not normalized");
  }
  if (std::abs(std::norm(target_a) + std::norm(target_b) - 1.0) > kAlgebraTol)
    throw std::invalid_argument("target amplitudes not normalized");
  SpinBathConfig cfg;
  cfg.couplings = std::move(couplings);
  cfg.env_alpha = std::move(env_alpha);
  cfg.env_beta = std::move(env_beta);
  cfg.target_a = target_a;
  cfg.target_b = target_b;
  return cfg;
}

SpinBathConfig SpinBathConfig::equal_weight(std::vector<double> couplings,
                                            cdouble target_a, cdouble target_b) {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<cdouble> a(couplings.size(), cdouble(r, 0.0));
  std::vector<cdouble> b(couplings.size(), cdouble(r, 0.0));
  return make(std::move(couplings), std::move(a), std::move(b), target_a, target_b);
}

std::vector<double> SpinBathConfig::weight_imbalance() const {
  std::vector<double> w(couplings.size());
  for (std::size_t j = 0; j < couplings.size(); ++j)
    w[j] = std::norm(env_alpha[j]) - std::norm(env_beta[j]);
  return w;
}

DecoherenceTrace DecoherenceTrace::make(std::vector<double> times,
                                        std::vector<cdouble> z) {
  if (times.size() != z.size() || times.empty())
    throw std::invalid_argument("trace needs matching non-empty times and values");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("trace times must be strictly increasing");
  if (times.front() == 0.0 && std::abs(std::abs(z.front()) - 1.0) > kAlgebraTol)
    throw std::invalid_argument("|z(0)| must be 1");
  DecoherenceTrace tr;
  tr.times = std::move(times);
  tr.z = std::move(z);
  return tr;
}

std::vector<double> TimeGrid::points() const {
  if (!(dt > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("bad time grid");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(t_max / dt + 0.5);
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) * dt);
  return out;
}

cdouble z_factor_general(const SpinBathConfig& cfg, double t) {
  const auto w = cfg.weight_imbalance();
  double re = 0.0, im = 0.0;
  kernels::active().z_general_grid(cfg.couplings.data(), w.data(),
                                   cfg.couplings.size(), &t, 1, &re, &im);
  return {re, im};
}

double z_factor_equal_weight(const std::vector<double>& couplings, double t) {
  if (couplings.empty()) throw std::invalid_argument("couplings must be non-empty");
  double out = 0.0;
  kernels::active().z_equal_grid(couplings.data(), couplings.size(), &t, 1, &out);
  return out;
}

DecoherenceTrace compute_trace(const SpinBathConfig& cfg, const TimeGrid& grid) {
  const auto times = grid.points();
  const auto w = cfg.weight_imbalance();
  std::vector<double> re(times.size()), im(times.size());
  kernels::active().z_general_grid(cfg.couplings.data(), w.data(),
                                   cfg.couplings.size(), times.data(), times.size(),
                                   re.data(), im.data());
  std::vector<cdouble> z(times.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {re[i], im[i]};
  return DecoherenceTrace::make(times, std::move(z));
}

DecoherenceTrace compute_trace_equal_weight(const std::vector<double>& couplings,
                                            const TimeGrid& grid) {
  if (couplings.empty()) throw std::invalid_argument("couplings must be non-empty");
  const auto times = grid.points();
  std::vector<double> zr(times.size());
  kernels::active().z_equal_grid(couplings.data(), couplings.size(), times.data(),
                                 times.size(), zr.data());
  std::vector<cdouble> z(times.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {zr[i], 0.0};
  return DecoherenceTrace::make(times, std::move(z));
}

EntangleResult entangle_step(const StateVector& target, const SpinBathConfig& cfg,
                             double t) {
  if (target.dim() != 2) throw std::invalid_argument("target must be a qubit");
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  const int g_count = static_cast<int>(cfg.bath_size());
  if (g_count > kMaxExactBath)
    throw std::runtime_error(
        "bath too large for the exact joint state; use the analytic mode");

  // Evolved branch states: the |0> branch picks up phase exp(+i g t) on |0>
  // spins and exp(-i g t) on |1> spins; the |1> branch the opposite. This is
  // the phase convention whose reduced off-diagonal equals a*conj(b)*z(t).
  const cdouble a = target.amplitudes(0);
  const cdouble b = target.amplitudes(1);
  CVector branch0(1), branch1(1);
  branch0 << 1.0;
  branch1 << 1.0;
  for (int j = 0; j < g_count; ++j) {
    const cdouble phase = std::polar(1.0, cfg.couplings[j] * t);
    CVector spin0(2), spin1(2);
    spin0 << cfg.env_alpha[j] * phase, cfg.env_beta[j] * std::conj(phase);
    spin1 << cfg.env_alpha[j] * std::conj(phase), cfg.env_beta[j] * phase;
    branch0 = kron(branch0, spin0);
    branch1 = kron(branch1, spin1);
  }
  CVector joint(2 * branch0.size());
  joint.head(branch0.size()) = a * branch0;
  joint.tail(branch1.size()) = b * branch1;

  std::vector<int> dims(1 + g_count, 2);
  StateVector joint_state = StateVector::make(std::move(joint), std::move(dims));
  DensityOperator reduced = reduced_density(joint_state, {0});
  return EntangleResult{std::move(joint_state), std::move(reduced)};
}

double fit_gaussian_decay(const DecoherenceTrace& trace) {
  std::size_t usable = 0;
  for (const auto& zv : trace.z) {
    const double m = std::abs(zv);
    if (m > 1e-6 && m < 0.999) ++usable;
  }
  if (usable < 10)
    throw std::invalid_argument("not enough usable samples for a decay fit");

  const auto crossing = estimate_decoherence_time(trace, 0.1, 1.0);
  double sxx = 0.0, sxy = 0.0;
  std::size_t n_fit = 0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double m = std::abs(trace.z[i]);
    if (m <= 0.1 || m >= 0.999) continue;
    if (crossing && trace.times[i] >= *crossing) continue;
    const double x = trace.times[i] * trace.times[i];
    const double y = std::log(m);
    sxx += x * x;
    sxy += x * y;
    ++n_fit;
  }
  if (n_fit < 2) {
    // fall back to the full usable band
    sxx = sxy = 0.0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
      const double m = std::abs(trace.z[i]);
      if (m <= 1e-6 || m >= 0.999) continue;
      const double x = trace.times[i] * trace.times[i];
      sxx += x * x;
      sxy += x * std::log(m);
    }
  }
  if (sxx == 0.0) throw std::invalid_argument("degenerate decay fit");
  const double gamma_sq = -sxy / sxx;
  return std::sqrt(std::max(0.0, gamma_sq));
}

std::optional<double> estimate_decoherence_time(const DecoherenceTrace& trace,
                                                double epsilon, double window) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must be in (0, 1)");
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  const auto& ts = trace.times;
  const std::size_t n = ts.size();
  if (n == 0 || ts.back() - ts.front() < window) return std::nullopt;

  // Two-pointer scan for the earliest start of a run of below-threshold
  // samples spanning at least `window`.
  std::size_t run_start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(trace.z[i]) >= epsilon) {
      run_start = i + 1;
      continue;
    }
    if (ts[i] - ts[run_start] >= window) return ts[run_start];
  }
  return std::nullopt;
}

double differentiation_degree(const DensityOperator& rho_reduced) {
  const int n = rho_reduced.dim();
  if (n < 2) throw std::invalid_argument("differentiation degree needs dim >= 2");
  const double d = von_neumann_entropy(rho_reduced) / std::log(static_cast<double>(n));
  return std::min(1.0, std::max(0.0, d));
}

std::vector<double> phase_rates(const std::vector<double>& hamiltonian_couplings) {
  std::vector<double> r(hamiltonian_couplings.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = 0.5 * hamiltonian_couplings[j];
  return r;
}

DecoherenceTrace trace_for_couplings(const std::vector<double>& hamiltonian_couplings,
                                     const TimeGrid& grid) {
  return compute_trace_equal_weight(phase_rates(hamiltonian_couplings), grid);
}

DecoherenceTimeStats mean_decoherence_time(int bath_size,
                                           const CouplingDistribution& dist,
                                           double epsilon, double window,
                                           const TimeGrid& grid, int n_draws,
                                           std::uint64_t stream_base) {
  DecoherenceTimeStats stats;
  stats.total = n_draws;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n_draws; ++k) {
    const auto g = dist.sample(static_cast<std::size_t>(bath_size), stream_base + k);
    const auto trace = trace_for_couplings(g, grid);
    if (auto t = estimate_decoherence_time(trace, epsilon, window)) {
      sum += *t;
      sum2 += *t * *t;
      ++stats.found;
    }
  }
  if (stats.found > 0) {
    stats.mean = sum / stats.found;
    const double var = sum2 / stats.found - stats.mean * stats.mean;
    stats.stddev = std::sqrt(std::max(0.0, var));
  }
  return stats;
}

void write_trace_csv(const DecoherenceTrace& trace, std::ostream& os) {
  os << "t,re_z,im_z,abs_z\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    os << fmt12(trace.times[i]) << ',' << fmt12(trace.z[i].real()) << ','
       << fmt12(trace.z[i].imag()) << ',' << fmt12(std::abs(trace.z[i])) << '\n';
  }
}

}  // namespace endqt
