#pragma once
// Multi-D2 trial state: M branches, each a spin amplitude vector times a K-mode coherent state.
//
//   |D> = sum_n sum_s A_ns |s> prod_k exp(alpha_nk b_k^+ - alpha_nk^* b_k) |vac>

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <string>

#include "bowtie/model.hpp"

namespace bowtie {

using cplx = std::complex<double>;

using AmplitudeMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, 3, Eigen::RowMajor>;
using DisplacementMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using OverlapMatrix = Eigen::MatrixXcd;

struct MultiD2State {
  AmplitudeMatrix amplitudes;        // M x 3, columns ordered plus, zero, minus
  DisplacementMatrix displacements;  // M x K, one contiguous row per branch

  MultiD2State() = default;
  MultiD2State(int multiplicity, int n_modes);

  int multiplicity() const { return static_cast<int>(amplitudes.rows()); }
  int n_modes() const { return static_cast<int>(displacements.cols()); }

  std::span<const cplx> branch_displacements(int n) const {
    return {displacements.data() + static_cast<std::ptrdiff_t>(n) * n_modes(),
            static_cast<std::size_t>(n_modes())};
  }
};

struct Populations {
  double plus = 0.0;
  double zero = 0.0;
  double minus = 0.0;

  double operator[](Spin s) const { return s == Spin::plus ? plus : (s == Spin::zero ? zero : minus); }
  double sum() const { return plus + zero + minus; }
};

// Branch 0 holds the requested spin at the vacuum; the others get seeded noise of magnitude
// <= noise in both amplitudes and displacements.  The result is renormalized.
MultiD2State init_state(Spin spin, int multiplicity, int n_modes, double noise, std::uint64_t seed);

// S_mn, evaluated from a single accumulated exponent.
cplx debye_waller(const MultiD2State& state, int m, int n);
OverlapMatrix overlap_matrix(const MultiD2State& state);

// Throws NumericalError when a quadratic form that must be real is not.
Populations populations(const MultiD2State& state);
Populations populations(const MultiD2State& state, const OverlapMatrix& overlap);
// Sum of the three populations; the identity with populations() is exact by construction.
double norm_squared(const MultiD2State& state);

// <b_k^+ b_k>, 0-based mode index.
double mode_occupation(const MultiD2State& state, int k);
double mode_occupation(const MultiD2State& state, const OverlapMatrix& overlap, int k);

// Text snapshot: "M,K" header line, the two counts, M amplitude rows (re,im per spin) and
// M displacement rows (re,im per mode).
std::string serialize(const MultiD2State& state);
MultiD2State deserialize(const std::string& text);

// Deterministic uniform doubles in [0, 1) that do not depend on the standard library's
// distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace bowtie
