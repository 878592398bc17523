#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "bowtie/kernels.hpp"

namespace kn = bowtie::kernels;
using cplx = std::complex<double>;

namespace {

struct Data {
  std::vector<cplx> a, b;
  std::vector<double> w;
};

Data make_data(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    d.a.emplace_back(u(rng), u(rng));
    d.b.emplace_back(u(rng), u(rng));
    d.w.push_back(u(rng) * 10.0);
  }
  return d;
}

// Naive loops written independently of both kernel tables.
cplx naive_cdotc(const Data& d) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < d.a.size(); ++i) s += std::conj(d.a[i]) * d.b[i];
  return s;
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
    if (kn::avx2_table() == nullptr || !kn::cpu_supports_avx2()) GTEST_SKIP() << "no AVX2 on this machine";
  }
};

void expect_close(cplx x, cplx y, double tol) {
  EXPECT_NEAR(x.real(), y.real(), tol);
  EXPECT_NEAR(x.imag(), y.imag(), tol);
}

}  // namespace

TEST(Kernels, ScalarMatchesNaive) {
  const Data d = make_data(37, 1);
  expect_close(kn::scalar_table().cdotc(d.a, d.b), naive_cdotc(d), 1e-13);
}

TEST(Kernels, EmptySpans) {
  const std::vector<cplx> none;
  const std::vector<double> w;
  for (const kn::Table* t : {&kn::scalar_table(), kn::avx2_table()}) {
    if (!t) continue;
    EXPECT_EQ(t->cdotc(none, none), cplx{});
    EXPECT_EQ(t->wsum(w, none), cplx{});
  }
}

TEST_P(KernelEquivalence, AllKernelsAgree) {
  const std::size_t n = GetParam();
  const Data d = make_data(n, 100 + static_cast<unsigned>(n));
  const kn::Table& s = kn::scalar_table();
  const kn::Table& v = *kn::avx2_table();
  const double tol = 1e-13 * (1.0 + static_cast<double>(n));
  expect_close(v.cdotc(d.a, d.b), s.cdotc(d.a, d.b), tol);
  expect_close(v.wdotc(d.w, d.a, d.b), s.wdotc(d.w, d.a, d.b), 10 * tol);
  expect_close(v.wsum(d.w, d.a), s.wsum(d.w, d.a), 10 * tol);

  std::vector<cplx> out_s = d.b, out_v = d.b;
  s.wmadd(out_s, d.w, d.a);
  v.wmadd(out_v, d.w, d.a);
  for (std::size_t i = 0; i < n; ++i) expect_close(out_v[i], out_s[i], 1e-13);
  s.axpy(out_s, -0.37, d.a);
  v.axpy(out_v, -0.37, d.a);
  for (std::size_t i = 0; i < n; ++i) expect_close(out_v[i], out_s[i], 1e-13);
}

INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence, ::testing::Values(1, 2, 3, 4, 5, 7, 8, 16, 31, 40, 63, 80, 257));

TEST(Kernels, SelectSwitchesBackend) {
  const kn::Backend before = kn::select(kn::Backend::scalar);
  EXPECT_EQ(kn::active_backend(), kn::Backend::scalar);
  EXPECT_EQ(kn::backend_name(kn::Backend::scalar), "scalar");
  kn::select(before);
  EXPECT_EQ(kn::active_backend(), before);
}
