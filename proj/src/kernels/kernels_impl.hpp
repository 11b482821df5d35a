#pragma once

#include <cstddef>

// Per-variant entry points, each compiled in its own translation unit with the
// matching target flags. The dispatcher picks one set at runtime.
namespace endqt::kernels::detail {

void z_equal_grid_scalar(const double* g, std::size_t n_g, const double* t,
                         std::size_t n_t, double* out);
void z_general_grid_scalar(const double* g, const double* w, std::size_t n_g,
                           const double* t, std::size_t n_t, double* out_re,
                           double* out_im);

#if defined(ENDQT_HAVE_AVX2)
void z_equal_grid_avx2(const double* g, std::size_t n_g, const double* t,
                       std::size_t n_t, double* out);
void z_general_grid_avx2(const double* g, const double* w, std::size_t n_g,
                         const double* t, std::size_t n_t, double* out_re,
                         double* out_im);
#endif

#if defined(ENDQT_HAVE_NEON)
void z_equal_grid_neon(const double* g, std::size_t n_g, const double* t,
                       std::size_t n_t, double* out);
void z_general_grid_neon(const double* g, const double* w, std::size_t n_g,
                         const double* t, std::size_t n_t, double* out_re,
                         double* out_im);
#endif

}  // namespace endqt::kernels::detail
