#include "bowtie/state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/kernels.hpp"

namespace bowtie {

namespace {

constexpr double kImagTol = 1e-12;

void check_real(cplx value, const char* what) {
  if (std::abs(value.imag()) > kImagTol * std::max(1.0, std::abs(value.real()))) {
    throw NumericalError(std::string(what) + " has a non-real residue " + format_number(value.imag()));
  }
}

// Real part of sum_{m,n} conj(x_m) y_n S_mn written so that the result is real by construction,
// together with the raw imaginary residue for diagnostics.
template <class Weight>
cplx hermitian_form(int m_count, Weight&& weight, const OverlapMatrix& s) {
  double re = 0.0;
  cplx raw = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const cplx diag = weight(m, m);
    re += diag.real();
    raw += diag;
    for (int n = m + 1; n < m_count; ++n) {
      const cplx w = weight(m, n) * s(m, n);
      re += 2.0 * w.real();
      raw += w + weight(n, m) * s(n, m);
    }
  }
  return {re, raw.imag()};
}

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MultiD2State::MultiD2State(int multiplicity, int n_modes)
    : amplitudes(AmplitudeMatrix::Zero(multiplicity, 3)),
      displacements(DisplacementMatrix::Zero(multiplicity, n_modes)) {}

MultiD2State init_state(Spin spin, int multiplicity, int n_modes, double noise, std::uint64_t seed) {
  if (multiplicity < 1) throw ConfigError("ansatz.multiplicity must be at least 1");
  if (n_modes < 0) throw ConfigError("mode count must be non-negative");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("ansatz.noise must be non-negative");
  if (noise == 0.0 && multiplicity > 1) {
    throw ConfigError("ansatz.noise = 0 with multiplicity > 1 gives identical branches (singular Gram matrix)");
  }
  MultiD2State state(multiplicity, n_modes);
  state.amplitudes(0, index_of(spin)) = 1.0;

  SplitMix64 rng(seed);
  // Uniform in the square of half-width noise / sqrt(2), hence |z| <= noise.
  const double half = noise / std::sqrt(2.0);
  auto draw = [&] {
    const double re = (2.0 * rng.uniform() - 1.0) * half;
    const double im = (2.0 * rng.uniform() - 1.0) * half;
    return cplx(re, im);
  };
  for (int n = 1; n < multiplicity; ++n) {
    for (int s = 0; s < 3; ++s) state.amplitudes(n, s) = draw();
    for (int k = 0; k < n_modes; ++k) state.displacements(n, k) = draw();
  }
  const double norm = std::sqrt(norm_squared(state));
  state.amplitudes /= norm;
  return state;
}

cplx debye_waller(const MultiD2State& state, int m, int n) {
  if (m == n) return 1.0;
  const auto am = state.branch_displacements(m);
  const auto an = state.branch_displacements(n);
  const cplx cross = kernels::cdotc(am, an);
  const double nm = kernels::cdotc(am, am).real();
  const double nn = kernels::cdotc(an, an).real();
  return std::exp(cross - 0.5 * (nm + nn));
}

OverlapMatrix overlap_matrix(const MultiD2State& state) {
  const int m_count = state.multiplicity();
  OverlapMatrix s(m_count, m_count);
  std::vector<double> sq(m_count);
  for (int m = 0; m < m_count; ++m) {
    const auto am = state.branch_displacements(m);
    sq[m] = kernels::cdotc(am, am).real();
  }
  for (int m = 0; m < m_count; ++m) {
    s(m, m) = 1.0;
    for (int n = m + 1; n < m_count; ++n) {
      const cplx exponent =
          kernels::cdotc(state.branch_displacements(m), state.branch_displacements(n)) - 0.5 * (sq[m] + sq[n]);
      s(m, n) = std::exp(exponent);
      s(n, m) = std::conj(s(m, n));
    }
  }
  return s;
}

Populations populations(const MultiD2State& state, const OverlapMatrix& overlap) {
  const int m_count = state.multiplicity();
  double p[3];
  for (int s = 0; s < 3; ++s) {
    const auto& a = state.amplitudes;
    const cplx form = hermitian_form(
        m_count, [&](int m, int n) { return std::conj(a(m, s)) * a(n, s); }, overlap);
    check_real(form, "spin population");
    p[s] = form.real();
  }
  return {p[0], p[1], p[2]};
}

Populations populations(const MultiD2State& state) { return populations(state, overlap_matrix(state)); }

double norm_squared(const MultiD2State& state) { return populations(state).sum(); }

double mode_occupation(const MultiD2State& state, const OverlapMatrix& overlap, int k) {
  if (k < 0 || k >= state.n_modes()) throw ConfigError("mode index out of range");
  const auto& a = state.amplitudes;
  const auto& d = state.displacements;
  const cplx form = hermitian_form(
      state.multiplicity(),
      [&](int m, int n) { return a.row(m).dot(a.row(n)) * std::conj(d(m, k)) * d(n, k); },
      overlap);
  check_real(form, "mode occupation");
  return form.real();
}

double mode_occupation(const MultiD2State& state, int k) {
  return mode_occupation(state, overlap_matrix(state), k);
}

std::string serialize(const MultiD2State& state) {
  std::string out = "M,K\n";
  out += std::to_string(state.multiplicity()) + "," + std::to_string(state.n_modes()) + "\n";
  auto row = [&out](auto&& values, Eigen::Index count) {
    for (Eigen::Index j = 0; j < count; ++j) {
      if (j) out += ',';
      append_number(out, values(j).real());
      out += ',';
      append_number(out, values(j).imag());
    }
    out += '\n';
  };
  for (int n = 0; n < state.multiplicity(); ++n) row(state.amplitudes.row(n), 3);
  if (state.n_modes() > 0) {
    for (int n = 0; n < state.multiplicity(); ++n) row(state.displacements.row(n), state.n_modes());
  }
  return out;
}

MultiD2State deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& why) { return ConfigError("malformed state snapshot: " + why); };
  if (!std::getline(in, line) || line != "M,K") throw fail("missing 'M,K' header");
  if (!std::getline(in, line)) throw fail("missing dimensions");
  int m_count = 0, k_count = 0;
  {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw fail("dimensions must be 'M,K'");
    try {
      m_count = std::stoi(line.substr(0, comma));
      k_count = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw fail("dimensions must be integers");
    }
  }
  if (m_count < 1 || k_count < 0) throw fail("invalid dimensions");
  auto read_row = [&](Eigen::Index count) {
    if (!std::getline(in, line)) throw fail("truncated record");
    std::vector<double> values;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw fail("non-numeric cell '" + cell + "'");
      }
    }
    if (values.size() != static_cast<std::size_t>(2 * count)) throw fail("wrong number of columns");
    return values;
  };
  MultiD2State state(m_count, k_count);
  for (int n = 0; n < m_count; ++n) {
    const auto v = read_row(3);
    for (int s = 0; s < 3; ++s) state.amplitudes(n, s) = {v[2 * s], v[2 * s + 1]};
  }
  if (k_count > 0) {
    for (int n = 0; n < m_count; ++n) {
      const auto v = read_row(k_count);
      for (int k = 0; k < k_count; ++k) state.displacements(n, k) = {v[2 * k], v[2 * k + 1]};
    }
  }
  return state;
}

}  // namespace bowtie
