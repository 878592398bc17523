#include "bowtie/kernels.hpp"

#include <cassert>

namespace bowtie::kernels {
namespace {

cplx cdotc_scalar(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    re += a[k].real() * b[k].real() + a[k].imag() * b[k].imag();
    im += a[k].real() * b[k].imag() - a[k].imag() * b[k].real();
  }
  return {re, im};
}

cplx wdotc_scalar(std::span<const double> w, std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size() && w.size() == a.size());
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ar = w[k] * a[k].real();
    const double ai = w[k] * a[k].imag();
    re += ar * b[k].real() + ai * b[k].imag();
    im += ar * b[k].imag() - ai * b[k].real();
  }
  return {re, im};
}

cplx wsum_scalar(std::span<const double> w, std::span<const cplx> a) {
  assert(w.size() == a.size());
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    re += w[k] * a[k].real();
    im += w[k] * a[k].imag();
  }
  return {re, im};
}

void wmadd_scalar(std::span<cplx> out, std::span<const double> w, std::span<const cplx> x) {
  assert(out.size() == x.size() && w.size() == x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] += w[k] * x[k];
}

void axpy_scalar(std::span<cplx> out, double s, std::span<const cplx> x) {
  assert(out.size() == x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] += s * x[k];
}

}  // namespace

const Table& scalar_table() {
  static const Table table{cdotc_scalar, wdotc_scalar, wsum_scalar, wmadd_scalar, axpy_scalar};
  return table;
}

}  // namespace bowtie::kernels
