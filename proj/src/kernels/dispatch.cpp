#include "endqt/kernels.hpp"

#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace endqt::kernels {

namespace {

const Kernels kScalar{"scalar", detail::z_equal_grid_scalar,
                      detail::z_general_grid_scalar};

#if defined(ENDQT_HAVE_AVX2)
const Kernels kAvx2{"avx2", detail::z_equal_grid_avx2, detail::z_general_grid_avx2};
#endif
#if defined(ENDQT_HAVE_NEON)
const Kernels kNeon{"neon", detail::z_equal_grid_neon, detail::z_general_grid_neon};
#endif

bool cpu_supports(Impl impl) {
  switch (impl) {
    case Impl::scalar:
      return true;
    case Impl::avx2:
#if defined(ENDQT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Impl::neon:
#if defined(ENDQT_HAVE_NEON)
      return true;  // baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

Impl pick_default() {
  const char* env = std::getenv("ENDQT_KERNEL");
  if (env != nullptr) {
    std::string v(env);
    if (v == "scalar") return Impl::scalar;
    if (v == "avx2" && cpu_supports(Impl::avx2)) return Impl::avx2;
    if (v == "neon" && cpu_supports(Impl::neon)) return Impl::neon;
    // "auto" or anything unusable falls through to detection.
  }
  if (cpu_supports(Impl::avx2)) return Impl::avx2;
  if (cpu_supports(Impl::neon)) return Impl::neon;
  return Impl::scalar;
}

std::mutex g_mutex;
bool g_selected = false;
Impl g_impl = Impl::scalar;

Impl selected() {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (!g_selected) {
    g_impl = pick_default();
    g_selected = true;
  }
  return g_impl;
}

}  // namespace

bool available(Impl impl) { return cpu_supports(impl); }

std::vector<Impl> available_impls() {
  std::vector<Impl> out;
  for (Impl impl : {Impl::scalar, Impl::avx2, Impl::neon})
    if (cpu_supports(impl)) out.push_back(impl);
  return out;
}

const Kernels& get(Impl impl) {
  if (!cpu_supports(impl))
    throw std::runtime_error(std::string("kernel implementation unavailable: ") +
                             impl_name(impl));
  switch (impl) {
    case Impl::scalar:
      return kScalar;
    case Impl::avx2:
#if defined(ENDQT_HAVE_AVX2)
      return kAvx2;
#else
      break;
#endif
    case Impl::neon:
#if defined(ENDQT_HAVE_NEON)
      return kNeon;
#else
      break;
#endif
  }
  return kScalar;
}

const Kernels& active() { return get(selected()); }

Impl active_impl() { return selected(); }

void force(Impl impl) {
  if (!cpu_supports(impl))
    throw std::runtime_error(std::string("kernel implementation unavailable: ") +
                             impl_name(impl));
  std::lock_guard<std::mutex> lock(g_mutex);
  g_impl = impl;
  g_selected = true;
}

void reset_selection() {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_selected = false;
}

const char* impl_name(Impl impl) {
  switch (impl) {
    case Impl::scalar:
      return "scalar";
    case Impl::avx2:
      return "avx2";
    case Impl::neon:
      return "neon";
  }
  return "?";
}

}  // namespace endqt::kernels
