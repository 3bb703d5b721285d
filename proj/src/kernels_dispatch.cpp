#include "msgmimc/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace msgmimc::kern {

bool have_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return avx2_compiled() && __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Ops& active_ops() {
  static const Ops* selected = [] {
    if (const char* env = std::getenv("MSGMIMC_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
      if (std::strcmp(env, "avx2") == 0) {
        if (!have_avx2())
          throw std::runtime_error("MSGMIMC_KERNELS=avx2 but AVX2 unavailable");
        return &avx2_ops();
      }
      throw std::runtime_error("MSGMIMC_KERNELS must be 'scalar' or 'avx2'");
    }
    return have_avx2() ? &avx2_ops() : &scalar_ops();
  }();
  return *selected;
}

} // namespace msgmimc::kern
