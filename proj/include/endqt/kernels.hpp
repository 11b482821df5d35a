#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace endqt::kernels {

// Decoherence-factor grid kernels. For couplings g_j and weight imbalances
// w_j = |alpha_j|^2 - |beta_j|^2, the factor at time t is
//   z(t) = prod_j [ cos(2 g_j t) + i w_j sin(2 g_j t) ].
// The equal-weight case (all w_j = 0) is real-valued.
using ZEqualGridFn = void (*)(const double* g, std::size_t n_g, const double* t,
                              std::size_t n_t, double* out);
using ZGeneralGridFn = void (*)(const double* g, const double* w, std::size_t n_g,
                                const double* t, std::size_t n_t, double* out_re,
                                double* out_im);

struct Kernels {
  const char* name;
  ZEqualGridFn z_equal_grid;
  ZGeneralGridFn z_general_grid;
};

enum class Impl { scalar, avx2, neon };

// Compiled into this binary and usable on this machine.
bool available(Impl impl);
std::vector<Impl> available_impls();

// Throws std::runtime_error if the implementation is unavailable.
const Kernels& get(Impl impl);

// Runtime-selected implementation: ENDQT_KERNEL=scalar|avx2|neon|auto wins,
// otherwise the best available vector unit.
const Kernels& active();
Impl active_impl();

// Test hooks.
void force(Impl impl);
void reset_selection();

const char* impl_name(Impl impl);

}  // namespace endqt::kernels
