#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bowtie/kernels.hpp"

namespace bowtie::kernels {
namespace {

Backend detect() {
  if (const char* env = std::getenv("BOWTIE_KERNELS")) {
    if (std::string(env) == "scalar") return Backend::scalar;
  }
  return (avx2_table() != nullptr && cpu_supports_avx2()) ? Backend::avx2 : Backend::scalar;
}

const Table& table_for(Backend b) { return b == Backend::avx2 ? *avx2_table() : scalar_table(); }

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

const Table& active() { return table_for(current().load(std::memory_order_relaxed)); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

Backend select(Backend b) {
  if (b == Backend::avx2 && (avx2_table() == nullptr || !cpu_supports_avx2())) {
    throw std::runtime_error("avx2 kernels are not available on this CPU");
  }
  return current().exchange(b);
}

}  // namespace bowtie::kernels
