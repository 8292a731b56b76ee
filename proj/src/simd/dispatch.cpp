#include <atomic>
#include <cstdlib>
#include <string>

#include "v2x/simd/kernels.hpp"

namespace v2x::simd {
namespace {

const KernelTable* initial_table() {
  const KernelTable* avx2 = cpu_has_avx2() ? avx2_kernels() : nullptr;
  if (const char* env = std::getenv("V2X_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2 != nullptr) return avx2;
  }
  return avx2 != nullptr ? avx2 : &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select_backend(Backend b) {
  const KernelTable* t = nullptr;
  switch (b) {
    case Backend::Scalar:
      t = &scalar_kernels();
      break;
    case Backend::Avx2:
      t = cpu_has_avx2() ? avx2_kernels() : nullptr;
      break;
  }
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace v2x::simd
