#include <cstdlib>

#include "perc/kernels.hpp"

namespace perc::kernels {

const Backend& active_backend() {
  static const Backend& chosen = []() -> const Backend& {
    const char* force = std::getenv("PERC_FORCE_SCALAR");
    if (force && force[0] == '1') return scalar_backend();
#if defined(PERC_HAVE_AVX2_BUILD)
    if (avx2_supported()) return avx2_backend();
#endif
    return scalar_backend();
  }();
  return chosen;
}

}  // namespace perc::kernels
