#pragma once
// Data-parallel inner loops shared by the variational engine and the Fock oracle.
//
// Every kernel has a portable scalar reference implementation and an AVX2/FMA
// variant.  The variant is picked once at first use from the CPU feature bits;
// BOWTIE_KERNELS=scalar in the environment pins the reference path.

#include <complex>
#include <span>
#include <string_view>

namespace bowtie::kernels {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

struct Table {
  // sum_k conj(a_k) * b_k
  cplx (*cdotc)(std::span<const cplx> a, std::span<const cplx> b);
  // sum_k w_k * conj(a_k) * b_k
  cplx (*wdotc)(std::span<const double> w, std::span<const cplx> a, std::span<const cplx> b);
  // sum_k w_k * a_k
  cplx (*wsum)(std::span<const double> w, std::span<const cplx> a);
  // out_k += w_k * x_k
  void (*wmadd)(std::span<cplx> out, std::span<const double> w, std::span<const cplx> x);
  // out_k += s * x_k
  void (*axpy)(std::span<cplx> out, double s, std::span<const cplx> x);
};

const Table& scalar_table();
// Null when the translation unit was built without x86 intrinsics support.
const Table* avx2_table();

bool cpu_supports_avx2();

const Table& active();
Backend active_backend();
std::string_view backend_name(Backend b);

// Returns the previously active backend.  Throws if the backend is unavailable.
Backend select(Backend b);

inline cplx cdotc(std::span<const cplx> a, std::span<const cplx> b) { return active().cdotc(a, b); }
inline cplx wdotc(std::span<const double> w, std::span<const cplx> a, std::span<const cplx> b) {
  return active().wdotc(w, a, b);
}
inline cplx wsum(std::span<const double> w, std::span<const cplx> a) { return active().wsum(w, a); }
inline void wmadd(std::span<cplx> out, std::span<const double> w, std::span<const cplx> x) {
  active().wmadd(out, w, x);
}
inline void axpy(std::span<cplx> out, double s, std::span<const cplx> x) { active().axpy(out, s, x); }

}  // namespace bowtie::kernels
