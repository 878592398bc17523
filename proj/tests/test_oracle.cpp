#include <gtest/gtest.h>

#include <cmath>

#include "bowtie/dynamics.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/oracle.hpp"

using namespace bowtie;

namespace {

const SystemParams kFig2{1.0, 0.1, 1.0};
const SingleModeCoupling kFig2Mode{0.1, 10.0};

// Plain 3x3 RK4 written against h_system directly.
Eigen::Vector3cd bare_rk4(const SystemParams& p, Eigen::Vector3cd psi, double t0, double t1, double dt) {
  auto f = [&](double t, const Eigen::Vector3cd& y) -> Eigen::Vector3cd {
    return cplx(0.0, -1.0) * (h_system(t, p).cast<cplx>() * y);
  };
  const long steps = std::lround((t1 - t0) / dt);
  for (long i = 0; i < steps; ++i) {
    const double t = t0 + i * dt;
    const Eigen::Vector3cd k1 = f(t, psi);
    const Eigen::Vector3cd k2 = f(t + dt / 2, psi + dt / 2 * k1);
    const Eigen::Vector3cd k3 = f(t + dt / 2, psi + dt / 2 * k2);
    const Eigen::Vector3cd k4 = f(t + dt, psi + dt * k3);
    psi += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi;
}

FockOptions every(int n) {
  FockOptions o;
  o.record_every = n;
  return o;
}

}  // namespace

TEST(FockOracle, DecoupledVacuumCutoffIsBareProblem) {
  const TimeGrid grid{-5.0, 5.0, 1e-3};
  FockVector fin;
  fock_propagate(kFig2, {0.0, 10.0}, 0, Spin::plus, grid, every(1000), &fin);
  const Eigen::Vector3cd ref = bare_rk4(kFig2, Eigen::Vector3cd(1.0, 0.0, 0.0), -5.0, 5.0, 1e-3);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(std::abs(fin.coefficients[s] - ref[s]), 0.0, 1e-13);
}

TEST(FockOracle, CutoffConvergedAndUnitary) {
  const TimeGrid grid{-30.0, 30.0, 1e-4};
  const Trajectory a = fock_propagate(kFig2, kFig2Mode, 20, Spin::plus, grid, every(5000));
  const Trajectory b = fock_propagate(kFig2, kFig2Mode, 30, Spin::plus, grid, every(5000));
  EXPECT_LT(max_population_deviation(a, b), 1e-8);
  double drift = 0.0;
  for (double e : a.norm_error) drift = std::max(drift, e);
  EXPECT_LT(drift, 1e-10);
}

TEST(FockOracle, CutoffTooSmallIsReported) {
  const TimeGrid grid{-30.0, 30.0, 1e-3};
  try {
    fock_propagate(kFig2, {0.4, 10.0}, 1, Spin::plus, grid);
    FAIL() << "expected a cutoff error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("cutoff too small"), std::string::npos);
  }
}

TEST(FockOracle, CoherentExpansionReproducesObservables) {
  MultiD2State s = init_state(Spin::plus, 3, 1, 0.4, 19);
  s.displacements(0, 0) = cplx(0.7, -0.3);
  s.amplitudes /= std::sqrt(norm_squared(s));
  const FockVector f = to_fock(s, {35});
  const Populations a = populations(s), b = f.populations();
  for (Spin sp : kSpins) EXPECT_NEAR(a[sp], b[sp], 1e-12);
  EXPECT_NEAR(mode_occupation(s, 0), f.mode_occupation(0), 1e-12);
}

TEST(FockOracle, TwoModeSmokeAgainstEngine) {
  const std::vector<double> w{8.0, 12.0}, eta{0.08, 0.06};
  const TimeGrid grid{-5.0, 5.0, 1e-3};
  const Trajectory exact = fock_propagate_modes(kFig2, w, eta, {6, 6}, Spin::plus, grid, every(100));
  PropagationOptions o;
  o.grid = grid;
  o.record_every = 100;
  const Trajectory engine = propagate(init_state(Spin::plus, 6, 2, 1e-2, 7), ModelAssembly{kFig2, w, eta}, o);
  EXPECT_LT(max_population_deviation(exact, engine), 0.01);
  EXPECT_THROW(fock_propagate_modes(kFig2, w, eta, {7, 2}, Spin::plus, grid), ConfigError);
}

TEST(BareAsymptotics, UncoupledLevelsStayPut) {
  for (Spin sp : kSpins) {
    const AsymptoticResult r = bare_asymptotics({1.0, 0.0, 1.0}, sp, 50.0);
    for (Spin s2 : kSpins) EXPECT_NEAR(r.final[s2], s2 == sp ? 1.0 : 0.0, 1e-12);
  }
}

TEST(BareAsymptotics, MirrorSymmetrySimplexAndHorizon) {
  const AsymptoticResult plus = bare_asymptotics(kFig2, Spin::plus);
  const AsymptoticResult minus = bare_asymptotics(kFig2, Spin::minus);
  EXPECT_NEAR(plus.final.plus, minus.final.minus, 1e-9);
  EXPECT_NEAR(plus.final.zero, minus.final.zero, 1e-9);
  EXPECT_NEAR(plus.final.minus, minus.final.plus, 1e-9);
  for (const auto& r : {plus, minus}) {
    EXPECT_NEAR(r.final.sum(), 1.0, 1e-10);
    for (Spin sp : kSpins) {
      EXPECT_GE(r.final[sp], -1e-10);
      EXPECT_LE(r.final[sp], 1.0 + 1e-10);
    }
  }
  // The tail variation is not an error bound: at fixed dt the RK4 phase error grows with T and
  // dominates the change, so the comparison is against the certified tolerance.
  const AsymptoticResult longer = bare_asymptotics(kFig2, Spin::plus, 400.0);
  for (Spin sp : kSpins) EXPECT_LE(std::abs(longer.final[sp] - plus.final[sp]), 1e-5);
}

TEST(BareAsymptotics, ZeroStartFixture) {
  const AsymptoticResult r = bare_asymptotics(kFig2, Spin::zero);
  EXPECT_NEAR(r.final.plus, r.final.minus, 1e-9);
  // Pinned from the first converged evaluation (horizon 200, dt 1e-4); horizon 400 at dt 5e-5
  // agrees to 6e-8.
  EXPECT_NEAR(r.final.plus, 0.0599420929, 1e-7);
  EXPECT_NEAR(r.final.zero, 0.8801158141, 1e-7);
  EXPECT_LT(r.plateau_variation, 1e-4);
}

TEST(BareAsymptotics, UnconvergedHorizonThrows) {
  EXPECT_THROW(bare_asymptotics(kFig2, Spin::plus, 2.0, 1e-3), NumericalError);
  EXPECT_THROW(bare_asymptotics(kFig2, Spin::plus, -1.0), ConfigError);
}
