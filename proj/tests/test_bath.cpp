#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "bowtie/bath.hpp"
#include "bowtie/errors.hpp"

using namespace bowtie;

namespace {

// Closed form of the integral of J over [0, w]: 2 alpha wc^2 gamma_lower(s + 1, w / wc).
double closed_form_total(const BathParams& b, double w) {
  return 2.0 * b.alpha * b.omega_c * b.omega_c * boost::math::tgamma_lower(b.s + 1.0, w / b.omega_c);
}

BathParams ohmic(int n = 40) {
  BathParams b;
  b.alpha = 0.002;
  b.s = 1.0;
  b.omega_c = 10.0;
  b.omega_max = 50.0;
  b.n_modes = n;
  return b;
}

}  // namespace

TEST(SpectralDensity, Examples) {
  const BathParams b = ohmic();
  EXPECT_NEAR(spectral_density(10.0, b), 0.04 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(spectral_density(10.0, b), 0.0147152, 1e-7);
  for (double s : {0.5, 1.0, 1.75}) {
    BathParams q = b;
    q.s = s;
    EXPECT_EQ(spectral_density(0.0, q), 0.0);
    // Maximum at s * wc: compare to neighbours on a fine grid.
    const double peak = s * q.omega_c;
    EXPECT_GT(spectral_density(peak, q), spectral_density(peak * 0.99, q));
    EXPECT_GT(spectral_density(peak, q), spectral_density(peak * 1.01, q));
  }
  EXPECT_THROW(spectral_density(-1.0, b), ConfigError);
}

TEST(SpectralDensity, QuadratureMatchesGammaFunction) {
  for (double s : {0.5, 0.75, 1.0, 1.5, 1.75}) {
    BathParams b = ohmic();
    b.s = s;
    const double exact = closed_form_total(b, b.omega_max);
    EXPECT_NEAR(integrate_density(b, 0.0, b.omega_max) / exact, 1.0, 1e-12) << "s=" << s;
  }
  const BathParams b = ohmic();
  EXPECT_NEAR(integrate_density(b, 0.0, 50.0), 2 * 0.002 * 100 * (1 - 6 * std::exp(-5.0)), 1e-14);
}

TEST(DensityScheme, EqualCouplingsConserveTotalWeight) {
  for (double s : {0.5, 1.0, 1.75}) {
    BathParams b = ohmic(40);
    b.s = s;
    const DiscretizedBath d = density_discretize(b);
    ASSERT_EQ(d.size(), 40u);
    const double total = closed_form_total(b, b.omega_max);
    const auto [mn, mx] = std::minmax_element(d.couplings.begin(), d.couplings.end());
    EXPECT_LE(*mx - *mn, 1e-10 * d.couplings[0]);
    EXPECT_NEAR(d.couplings[0], std::sqrt(total / 40.0), 1e-10 * d.couplings[0]);
    double sum = 0.0;
    for (double eta : d.couplings) sum += eta * eta;
    EXPECT_NEAR(sum / total, 1.0, 1e-10);
    for (std::size_t k = 0; k < d.size(); ++k) {
      EXPECT_GT(d.frequencies[k], d.boundaries[k]);
      EXPECT_LT(d.frequencies[k], d.boundaries[k + 1]);
      if (k) EXPECT_GT(d.frequencies[k], d.frequencies[k - 1]);
      // rho-mass of each interval is one.
      const double mass = 40.0 * integrate_density(b, d.boundaries[k], d.boundaries[k + 1]) / total;
      EXPECT_NEAR(mass, 1.0, 1e-8);
    }
  }
}

TEST(DensityScheme, OhmicBoundariesFollowClosedFormCdf) {
  const BathParams b = ohmic(40);
  const DiscretizedBath d = density_discretize(b);
  auto cdf = [&](double w) { return 1.0 - std::exp(-w / b.omega_c) * (1.0 + w / b.omega_c); };
  for (int k = 0; k <= 40; ++k) {
    EXPECT_NEAR(cdf(d.boundaries[k]), k / 40.0 * cdf(b.omega_max), 1e-11) << "k=" << k;
  }
}

TEST(DensityScheme, SingleModeSitsAtMeanFrequency) {
  BathParams b = ohmic(1);
  const DiscretizedBath d = density_discretize(b);
  // For s = 1 the first moment is 2 alpha wc^3 gamma_lower(3, x).
  const double mean = b.omega_c * boost::math::tgamma_lower(3.0, 5.0) / boost::math::tgamma_lower(2.0, 5.0);
  EXPECT_NEAR(d.frequencies[0], mean, 1e-10);
}

TEST(LinearScheme, MidpointsAndRiemannLimit) {
  BathParams b = ohmic(2);
  b.omega_max = 20.0;
  const DiscretizedBath d = linear_discretize(b);
  EXPECT_DOUBLE_EQ(d.frequencies[0], 5.0);
  EXPECT_DOUBLE_EQ(d.frequencies[1], 15.0);
  EXPECT_GT(std::abs(d.couplings[0] - d.couplings[1]), 1e-3);

  BathParams big = ohmic(1000);
  const DiscretizedBath fine = linear_discretize(big);
  double sum = 0.0;
  for (double eta : fine.couplings) sum += eta * eta;
  EXPECT_NEAR(sum / closed_form_total(big, big.omega_max), 1.0, 1e-3);
}

TEST(Discretize, ZeroCouplingAndBadInputs) {
  BathParams b = ohmic();
  b.alpha = 0.0;
  EXPECT_THROW(density_discretize(b), NumericalError);
  EXPECT_THROW(linear_discretize(b), NumericalError);
  b = ohmic();
  b.s = 0.0;
  EXPECT_THROW(discretize(b), ConfigError);
  b = ohmic();
  b.n_modes = 0;
  EXPECT_THROW(discretize(b), ConfigError);
  EXPECT_THROW(parse_scheme("log"), ConfigError);
}

TEST(Discretize, CsvLayout) {
  BathParams b = ohmic(2);
  b.scheme = Scheme::linear;
  b.omega_max = 20.0;
  const std::string csv = bath_csv(discretize(b));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,omega_k,eta_k,lo,hi");
  EXPECT_NE(csv.find("\n2,15,"), std::string::npos);
}
