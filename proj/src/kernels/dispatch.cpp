#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace wlab::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* select_default() {
  if (const char* env = std::getenv("WLAB_SIMD"); env != nullptr && std::string(env) == "scalar")
    return &detail::kScalarTable;
  if (const Table* t = avx2_table()) return t;
  return &detail::kScalarTable;
}

std::atomic<const Table*>& slot() {
  static std::atomic<const Table*> current{select_default()};
  return current;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

const Table& scalar_table() { return detail::kScalarTable; }

const Table* avx2_table() {
  static const bool usable = detail::kAvx2Compiled && cpu_has_avx2();
  return usable ? &detail::kAvx2Table : nullptr;
}

const Table& active() { return *slot().load(std::memory_order_acquire); }

bool force(Isa isa) {
  const Table* t = isa == Isa::scalar ? &detail::kScalarTable : avx2_table();
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace wlab::kernels
