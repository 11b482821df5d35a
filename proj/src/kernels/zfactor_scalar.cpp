#include <cmath>

#include "kernels_impl.hpp"

// Reference kernels. Plain loops over std::cos/std::sin; the vector variants
// are equivalence-tested against these.
namespace endqt::kernels::detail {

void z_equal_grid_scalar(const double* g, std::size_t n_g, const double* t,
                         std::size_t n_t, double* out) {
  for (std::size_t k = 0; k < n_t; ++k) {
    double z = 1.0;
    const double tk2 = 2.0 * t[k];
    for (std::size_t j = 0; j < n_g; ++j) z *= std::cos(g[j] * tk2);
    out[k] = z;
  }
}

void z_general_grid_scalar(const double* g, const double* w, std::size_t n_g,
                           const double* t, std::size_t n_t, double* out_re,
                           double* out_im) {
  for (std::size_t k = 0; k < n_t; ++k) {
    double re = 1.0, im = 0.0;
    const double tk2 = 2.0 * t[k];
    for (std::size_t j = 0; j < n_g; ++j) {
      const double c = std::cos(g[j] * tk2);
      const double s = w[j] * std::sin(g[j] * tk2);
      const double nre = re * c - im * s;
      im = re * s + im * c;
      re = nre;
    }
    out_re[k] = re;
    out_im[k] = im;
  }
}

}  // namespace endqt::kernels::detail
