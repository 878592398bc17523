#pragma once
// Ohmic-family spectral density J(w) = 2 alpha wc^(1-s) w^s exp(-w / wc) and its discretization
// into N effective modes.

#include <string>
#include <string_view>
#include <vector>

namespace bowtie {

enum class Scheme { density, linear };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view text);

struct BathParams {
  double alpha = 0.002;
  double s = 1.0;
  double omega_c = 10.0;
  double omega_max = 50.0;
  int n_modes = 40;
  Scheme scheme = Scheme::density;

  void validate() const;
};

struct DiscretizedBath {
  std::vector<double> frequencies;
  std::vector<double> couplings;
  std::vector<double> boundaries;  // N + 1 edges, 0 .. omega_max

  std::size_t size() const { return frequencies.size(); }
};

double spectral_density(double omega, const BathParams& b);

// Double-exponential (tanh-sinh) quadrature of J over [lo, hi].
double integrate_density(const BathParams& b, double lo, double hi);
// Integral of J(w) * w over [lo, hi].
double integrate_first_moment(const BathParams& b, double lo, double hi);

// Equal spectral weight per interval; every coupling equals sqrt(I_tot / N).
DiscretizedBath density_discretize(const BathParams& b);

// Uniform intervals, midpoint frequencies, eta_k = sqrt(J(w_k) dw).
DiscretizedBath linear_discretize(const BathParams& b);

// Dispatches on b.scheme.
DiscretizedBath discretize(const BathParams& b);

std::string bath_csv(const DiscretizedBath& bath);

}  // namespace bowtie
