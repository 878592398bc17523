#include "bowtie/bath.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"

namespace bowtie {

namespace {

constexpr double kQuadratureTol = 1e-14;
constexpr double kBoundaryTol = 1e-12;

template <class F>
double integrate(F&& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, lo, hi, kQuadratureTol);
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::density ? "density" : "linear"; }

Scheme parse_scheme(std::string_view text) {
  if (text == "density") return Scheme::density;
  if (text == "linear") return Scheme::linear;
  throw ConfigError("unknown discretization scheme '" + std::string(text) + "' (expected density or linear)");
}

void BathParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("bath.alpha must be non-negative");
  if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("bath.s must be positive");
  if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw ConfigError("bath.omega_c must be positive");
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) throw ConfigError("bath.omega_max must be positive");
  if (n_modes < 1) throw ConfigError("bath.n_modes must be at least 1");
}

double spectral_density(double omega, const BathParams& b) {
  if (omega < 0.0) throw ConfigError("spectral density is defined for omega >= 0");
  if (omega == 0.0) return 0.0;
  return 2.0 * b.alpha * std::pow(b.omega_c, 1.0 - b.s) * std::pow(omega, b.s) * std::exp(-omega / b.omega_c);
}

double integrate_density(const BathParams& b, double lo, double hi) {
  return integrate([&](double w) { return spectral_density(w, b); }, lo, hi);
}

double integrate_first_moment(const BathParams& b, double lo, double hi) {
  return integrate([&](double w) { return w * spectral_density(w, b); }, lo, hi);
}

DiscretizedBath density_discretize(const BathParams& b) {
  b.validate();
  const double total = integrate_density(b, 0.0, b.omega_max);
  if (!(total > 0.0)) throw NumericalError("bath has zero weight");
  const int n = b.n_modes;

  DiscretizedBath out;
  out.boundaries.resize(n + 1);
  out.boundaries[0] = 0.0;
  out.boundaries[n] = b.omega_max;
  for (int k = 1; k < n; ++k) {
    // Cumulative rho-mass reaches k at the k-th edge.
    const double target = total * static_cast<double>(k) / n;
    double lo = out.boundaries[k - 1], hi = b.omega_max;
    while (hi - lo > kBoundaryTol) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (integrate_density(b, 0.0, mid) < target ? lo : hi) = mid;
    }
    out.boundaries[k] = 0.5 * (lo + hi);
  }

  out.frequencies.resize(n);
  out.couplings.resize(n);
  for (int k = 0; k < n; ++k) {
    const double lo = out.boundaries[k], hi = out.boundaries[k + 1];
    const double weight = integrate_density(b, lo, hi);
    out.couplings[k] = std::sqrt(weight);
    out.frequencies[k] = integrate_first_moment(b, lo, hi) / weight;
  }
  return out;
}

DiscretizedBath linear_discretize(const BathParams& b) {
  b.validate();
  if (!(b.alpha > 0.0)) throw NumericalError("bath has zero weight");
  const int n = b.n_modes;
  const double dw = b.omega_max / n;
  DiscretizedBath out;
  out.boundaries.resize(n + 1);
  out.frequencies.resize(n);
  out.couplings.resize(n);
  for (int k = 0; k <= n; ++k) out.boundaries[k] = k * dw;
  out.boundaries[n] = b.omega_max;
  for (int k = 0; k < n; ++k) {
    out.frequencies[k] = (k + 0.5) * dw;
    out.couplings[k] = std::sqrt(spectral_density(out.frequencies[k], b) * dw);
  }
  return out;
}

DiscretizedBath discretize(const BathParams& b) {
  return b.scheme == Scheme::density ? density_discretize(b) : linear_discretize(b);
}

std::string bath_csv(const DiscretizedBath& bath) {
  std::string out = "k,omega_k,eta_k,lo,hi\n";
  for (std::size_t k = 0; k < bath.size(); ++k) {
    out += std::to_string(k + 1);
    for (double x : {bath.frequencies[k], bath.couplings[k], bath.boundaries[k], bath.boundaries[k + 1]}) {
      out += ',';
      append_number(out, x);
    }
    out += '\n';
  }
  return out;
}

}  // namespace bowtie
