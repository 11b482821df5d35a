#if defined(ENDQT_HAVE_NEON)

#include <arm_neon.h>

#include <cmath>

#include "kernels_impl.hpp"

// Mirrors the AVX2 variant with 2-lane float64 vectors; same reduction and
// polynomials, same quadrant handling.
namespace endqt::kernels::detail {
namespace {

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

inline float64x2_t poly5(const double* c, float64x2_t z) {
  float64x2_t p = vdupq_n_f64(c[0]);
  for (int i = 1; i < 6; ++i) p = vfmaq_f64(vdupq_n_f64(c[i]), p, z);
  return p;
}

struct SinCos2 {
  float64x2_t s;
  float64x2_t c;
};

inline SinCos2 sincos2(float64x2_t x) {
  const float64x2_t n = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(kTwoOverPi)));
  float64x2_t r = vfmsq_f64(x, n, vdupq_n_f64(kPio2Hi));
  r = vfmsq_f64(r, n, vdupq_n_f64(kPio2Mid));
  r = vfmsq_f64(r, n, vdupq_n_f64(kPio2Lo));

  const float64x2_t z = vmulq_f64(r, r);
  // vfmaq_f64(a, b, c) = a + b*c; sin(r) = r + (poly*z)*r
  const float64x2_t sin_r = vfmaq_f64(r, vmulq_f64(poly5(kSin, z), z), r);
  float64x2_t cos_r = vmulq_f64(vmulq_f64(poly5(kCos, z), z), z);
  cos_r = vaddq_f64(cos_r, vfmsq_f64(vdupq_n_f64(1.0), z, vdupq_n_f64(0.5)));

  const float64x2_t q =
      vfmsq_f64(n, vrndmq_f64(vmulq_f64(n, vdupq_n_f64(0.25))), vdupq_n_f64(4.0));
  const uint64x2_t q1 = vceqq_f64(q, vdupq_n_f64(1.0));
  const uint64x2_t q2 = vceqq_f64(q, vdupq_n_f64(2.0));
  const uint64x2_t q3 = vceqq_f64(q, vdupq_n_f64(3.0));

  const uint64x2_t swap = vorrq_u64(q1, q3);
  const uint64x2_t signbit = vdupq_n_u64(0x8000000000000000ull);
  const uint64x2_t sin_neg = vandq_u64(vorrq_u64(q2, q3), signbit);
  const uint64x2_t cos_neg = vandq_u64(vorrq_u64(q1, q2), signbit);

  SinCos2 out;
  const float64x2_t base_s = vbslq_f64(swap, cos_r, sin_r);
  const float64x2_t base_c = vbslq_f64(swap, sin_r, cos_r);
  out.s = vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(base_s), sin_neg));
  out.c = vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(base_c), cos_neg));
  return out;
}

}  // namespace

void z_equal_grid_neon(const double* g, std::size_t n_g, const double* t,
                       std::size_t n_t, double* out) {
  std::size_t k = 0;
  for (; k + 2 <= n_t; k += 2) {
    const float64x2_t t2 = vmulq_f64(vld1q_f64(t + k), vdupq_n_f64(2.0));
    float64x2_t acc = vdupq_n_f64(1.0);
    for (std::size_t j = 0; j < n_g; ++j)
      acc = vmulq_f64(acc, sincos2(vmulq_f64(t2, vdupq_n_f64(g[j]))).c);
    vst1q_f64(out + k, acc);
  }
  if (k < n_t) z_equal_grid_scalar(g, n_g, t + k, n_t - k, out + k);
}

void z_general_grid_neon(const double* g, const double* w, std::size_t n_g,
                         const double* t, std::size_t n_t, double* out_re,
                         double* out_im) {
  std::size_t k = 0;
  for (; k + 2 <= n_t; k += 2) {
    const float64x2_t t2 = vmulq_f64(vld1q_f64(t + k), vdupq_n_f64(2.0));
    float64x2_t re = vdupq_n_f64(1.0);
    float64x2_t im = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < n_g; ++j) {
      const SinCos2 sc = sincos2(vmulq_f64(t2, vdupq_n_f64(g[j])));
      const float64x2_t ws = vmulq_f64(sc.s, vdupq_n_f64(w[j]));
      const float64x2_t nre = vfmsq_f64(vmulq_f64(re, sc.c), im, ws);
      im = vfmaq_f64(vmulq_f64(im, sc.c), re, ws);
      re = nre;
    }
    vst1q_f64(out_re + k, re);
    vst1q_f64(out_im + k, im);
  }
  if (k < n_t)
    z_general_grid_scalar(g, w, n_g, t + k, n_t - k, out_re + k, out_im + k);
}

}  // namespace endqt::kernels::detail

#endif  // ENDQT_HAVE_NEON
