#include <cstdlib>
#include <cstring>

#include "faircompose/kernels.hpp"

namespace faircompose::kernels {

namespace {

const Backend& select() {
  const char* forced = std::getenv("FAIRCOMPOSE_KERNELS");
  if (forced && std::strcmp(forced, "scalar") == 0) return scalar::backend;
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2::supported()) return avx2::backend;
#endif
#if defined(__aarch64__)
  return neon::backend;
#endif
  return scalar::backend;
}

}  // namespace

const Backend& active() {
  static const Backend& chosen = select();
  return chosen;
}

}  // namespace faircompose::kernels
