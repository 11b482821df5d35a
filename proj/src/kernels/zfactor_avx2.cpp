#if defined(ENDQT_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace endqt::kernels::detail {
namespace {

// Argument reduction by pi/2 (Cody-Waite, three terms) followed by minimax
// polynomials on [-pi/4, pi/4]. Arguments here are 2*g*t with g and t at
// desk scale, so the reduction stays far inside its exact range.
constexpr double kTwoOverPi = 6.36619772367581343076e-1;
constexpr double kPio2Hi = 1.57079625129699707031e0;
constexpr double kPio2Mid = 7.54978941586159635336e-8;
constexpr double kPio2Lo = 5.39030285815811905290e-15;

constexpr double kSin[] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                           2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                           8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCos[] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                           -2.75573141792967388112e-7,  2.48015872888517179954e-5,
                           -1.38888888888730564116e-3,  4.16666666666665929218e-2};

inline __m256d poly5(const double* c, __m256d z) {
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 6; ++i) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[i]));
  return p;
}

struct SinCos4 {
  __m256d s;
  __m256d c;
};

inline SinCos4 sincos4(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);
  const __m256d ps =
      _mm256_fmadd_pd(_mm256_mul_pd(poly5(kSin, z), z), r, r);  // sin(r)
  __m256d pc = _mm256_mul_pd(_mm256_mul_pd(poly5(kCos, z), z), z);
  pc = _mm256_add_pd(pc, _mm256_fnmadd_pd(z, _mm256_set1_pd(0.5),
                                          _mm256_set1_pd(1.0)));  // cos(r)

  // Quadrant q = n mod 4 kept in doubles; n is integer-valued so this is exact.
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d q = _mm256_fnmadd_pd(
      _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.25))), four, n);
  const __m256d q1 = _mm256_cmp_pd(q, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  const __m256d q2 = _mm256_cmp_pd(q, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  const __m256d q3 = _mm256_cmp_pd(q, _mm256_set1_pd(3.0), _CMP_EQ_OQ);

  const __m256d swap = _mm256_or_pd(q1, q3);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d sin_neg = _mm256_and_pd(_mm256_or_pd(q2, q3), sign);
  const __m256d cos_neg = _mm256_and_pd(_mm256_or_pd(q1, q2), sign);

  SinCos4 out;
  out.s = _mm256_xor_pd(_mm256_blendv_pd(ps, pc, swap), sin_neg);
  out.c = _mm256_xor_pd(_mm256_blendv_pd(pc, ps, swap), cos_neg);
  return out;
}

}  // namespace

void z_equal_grid_avx2(const double* g, std::size_t n_g, const double* t,
                       std::size_t n_t, double* out) {
  std::size_t k = 0;
  for (; k + 4 <= n_t; k += 4) {
    const __m256d t2 = _mm256_mul_pd(_mm256_loadu_pd(t + k), _mm256_set1_pd(2.0));
    __m256d acc = _mm256_set1_pd(1.0);
    for (std::size_t j = 0; j < n_g; ++j) {
      acc = _mm256_mul_pd(acc, sincos4(_mm256_mul_pd(t2, _mm256_set1_pd(g[j]))).c);
    }
    _mm256_storeu_pd(out + k, acc);
  }
  if (k < n_t) z_equal_grid_scalar(g, n_g, t + k, n_t - k, out + k);
}

void z_general_grid_avx2(const double* g, const double* w, std::size_t n_g,
                         const double* t, std::size_t n_t, double* out_re,
                         double* out_im) {
  std::size_t k = 0;
  for (; k + 4 <= n_t; k += 4) {
    const __m256d t2 = _mm256_mul_pd(_mm256_loadu_pd(t + k), _mm256_set1_pd(2.0));
    __m256d re = _mm256_set1_pd(1.0);
    __m256d im = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n_g; ++j) {
      const SinCos4 sc = sincos4(_mm256_mul_pd(t2, _mm256_set1_pd(g[j])));
      const __m256d ws = _mm256_mul_pd(sc.s, _mm256_set1_pd(w[j]));
      const __m256d nre = _mm256_fnmadd_pd(im, ws, _mm256_mul_pd(re, sc.c));
      im = _mm256_fmadd_pd(re, ws, _mm256_mul_pd(im, sc.c));
      re = nre;
    }
    _mm256_storeu_pd(out_re + k, re);
    _mm256_storeu_pd(out_im + k, im);
  }
  if (k < n_t)
    z_general_grid_scalar(g, w, n_g, t + k, n_t - k, out_re + k, out_im + k);
}

}  // namespace endqt::kernels::detail

#endif  // ENDQT_HAVE_AVX2
