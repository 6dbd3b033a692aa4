#include <cstdlib>
#include <stdexcept>
#include <string>

#include "probe/kernels.hpp"

namespace probe::kernels {

const KernelTable& avx2_kernels();

const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_kernels();
#endif
  return nullptr;
}

namespace {

const KernelTable* select_table() {
  if (const char* forced = std::getenv("PROBE_KERNELS")) {
    const std::string choice(forced);
    if (choice == "scalar") return &scalar_table();
    if (choice == "avx2") {
      if (const KernelTable* t = avx2_table()) return t;
      throw std::runtime_error("PROBE_KERNELS=avx2 requested but the CPU lacks AVX2/FMA");
    }
    throw std::runtime_error("unknown PROBE_KERNELS value: " + choice);
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

const KernelTable*& current() {
  static const KernelTable* table = select_table();
  return table;
}

}  // namespace

const KernelTable& active() { return *current(); }

void set_active(const KernelTable& table) { current() = &table; }

}  // namespace probe::kernels
