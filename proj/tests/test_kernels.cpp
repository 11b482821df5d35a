#include <doctest.h>

#include <cmath>
#include <vector>

#include "endqt/kernels.hpp"
#include "endqt/rng.hpp"

using namespace endqt;
namespace k = endqt::kernels;

namespace {

struct Case {
  std::vector<double> g;
  std::vector<double> w;
  std::vector<double> t;
};

Case random_case(SplitRng& rng, std::size_t n_g, std::size_t n_t, double g_hi,
                 double t_hi) {
  Case c;
  for (std::size_t j = 0; j < n_g; ++j) c.g.push_back(rng.uniform(0.0, g_hi));
  for (std::size_t j = 0; j < n_g; ++j) c.w.push_back(rng.uniform(-1.0, 1.0));
  for (std::size_t j = 0; j < n_t; ++j) c.t.push_back(rng.uniform(0.0, t_hi));
  return c;
}

}  // namespace

TEST_CASE("scalar kernel matches std::cos directly") {
  std::vector<double> g{0.3, 0.7};
  std::vector<double> t{0.0, 1.0, 2.5};
  std::vector<double> out(t.size());
  k::get(k::Impl::scalar).z_equal_grid(g.data(), g.size(), t.data(), t.size(),
                                       out.data());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double expect = std::cos(2 * 0.3 * t[i]) * std::cos(2 * 0.7 * t[i]);
    CHECK(out[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("vector variants agree with the scalar reference") {
  SplitRng rng(101);
  for (k::Impl impl : k::available_impls()) {
    if (impl == k::Impl::scalar) continue;
    const auto& vec = k::get(impl);
    const auto& ref = k::get(k::Impl::scalar);
    for (int rep = 0; rep < 40; ++rep) {
      std::size_t n_g = 1 + rng.next_below(64);
      std::size_t n_t = 1 + rng.next_below(300);
      double g_hi = (rep % 2 == 0) ? 1.0 : 5.0;
      double t_hi = (rep % 3 == 0) ? 50.0 : 10.0;
      Case c = random_case(rng, n_g, n_t, g_hi, t_hi);

      std::vector<double> a(n_t), b(n_t);
      ref.z_equal_grid(c.g.data(), n_g, c.t.data(), n_t, a.data());
      vec.z_equal_grid(c.g.data(), n_g, c.t.data(), n_t, b.data());
      for (std::size_t i = 0; i < n_t; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);

      std::vector<double> re0(n_t), im0(n_t), re1(n_t), im1(n_t);
      ref.z_general_grid(c.g.data(), c.w.data(), n_g, c.t.data(), n_t, re0.data(),
                         im0.data());
      vec.z_general_grid(c.g.data(), c.w.data(), n_g, c.t.data(), n_t, re1.data(),
                         im1.data());
      for (std::size_t i = 0; i < n_t; ++i) {
        CHECK(std::abs(re0[i] - re1[i]) < 1e-12);
        CHECK(std::abs(im0[i] - im1[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("equal-weight kernel equals the general kernel at zero imbalance") {
  SplitRng rng(102);
  for (k::Impl impl : k::available_impls()) {
    const auto& kern = k::get(impl);
    Case c = random_case(rng, 24, 101, 1.0, 10.0);
    std::vector<double> w0(c.g.size(), 0.0);
    std::vector<double> eq(c.t.size()), re(c.t.size()), im(c.t.size());
    kern.z_equal_grid(c.g.data(), c.g.size(), c.t.data(), c.t.size(), eq.data());
    kern.z_general_grid(c.g.data(), w0.data(), c.g.size(), c.t.data(), c.t.size(),
                        re.data(), im.data());
    for (std::size_t i = 0; i < c.t.size(); ++i) {
      CHECK(std::abs(eq[i] - re[i]) < 1e-12);
      CHECK(std::abs(im[i]) < 1e-12);
    }
  }
}

TEST_CASE("modulus never exceeds one") {
  SplitRng rng(103);
  for (k::Impl impl : k::available_impls()) {
    const auto& kern = k::get(impl);
    Case c = random_case(rng, 32, 257, 2.0, 20.0);
    std::vector<double> re(c.t.size()), im(c.t.size());
    kern.z_general_grid(c.g.data(), c.w.data(), c.g.size(), c.t.data(), c.t.size(),
                        re.data(), im.data());
    for (std::size_t i = 0; i < c.t.size(); ++i)
      CHECK(std::hypot(re[i], im[i]) <= 1.0 + 1e-12);
  }
}

TEST_CASE("forcing an implementation changes the active selection") {
  auto impls = k::available_impls();
  for (k::Impl impl : impls) {
    k::force(impl);
    CHECK(k::active_impl() == impl);
    CHECK(std::string(k::active().name) == k::impl_name(impl));
  }
  k::reset_selection();
}

TEST_CASE("unavailable implementations are rejected") {
#if !defined(__aarch64__)
  CHECK_FALSE(k::available(k::Impl::neon));
  CHECK_THROWS(k::get(k::Impl::neon));
  CHECK_THROWS(k::force(k::Impl::neon));
#else
  CHECK_FALSE(k::available(k::Impl::avx2));
  CHECK_THROWS(k::get(k::Impl::avx2));
#endif
  CHECK(k::available(k::Impl::scalar));
}
