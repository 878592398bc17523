#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bowtie/dynamics.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/oracle.hpp"

using namespace bowtie;

namespace {

const SystemParams kFig2{1.0, 0.1, 1.0};
const SingleModeCoupling kFig2Mode{0.1, 10.0};

MultiD2State random_state(int m, int k, unsigned seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  MultiD2State s(m, k);
  for (int n = 0; n < m; ++n) {
    for (int j = 0; j < 3; ++j) s.amplitudes(n, j) = cplx(g(rng), g(rng));
    for (int q = 0; q < k; ++q) s.displacements(n, q) = scale * cplx(g(rng), g(rng));
  }
  s.amplitudes /= std::sqrt(norm_squared(s));
  return s;
}

MultiD2State displaced(const MultiD2State& s, const StateDerivative& d, double h) {
  MultiD2State out = s;
  out.amplitudes += h * d.d_amplitudes;
  out.displacements += h * d.d_displacements;
  return out;
}

std::vector<cplx> minus(const std::vector<cplx>& a, const std::vector<cplx>& b, double scale) {
  std::vector<cplx> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) * scale;
  return out;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

PropagationOptions options_for(TimeGrid grid, int record_every = 100) {
  PropagationOptions o;
  o.grid = grid;
  o.record_every = record_every;
  return o;
}

}  // namespace

TEST(Derivatives, BareSingleBranchIsSchroedinger) {
  const ModelAssembly bare = ModelAssembly::bare(kFig2);
  MultiD2State s(1, 0);
  s.amplitudes << cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.4, -0.6);
  for (double t : {-7.0, 0.0, 3.5}) {
    const StateDerivative d = assemble_derivatives(s, t, bare);
    const Eigen::Vector3cd expected = cplx(0.0, -1.0) * (h_system(t, kFig2).cast<cplx>() * s.amplitudes.row(0).transpose());
    // Exact up to the relative 1e-12 Tikhonov shift.
    for (int j = 0; j < 3; ++j) EXPECT_LT(std::abs(d.d_amplitudes(0, j) - expected[j]), 1e-11 * expected.norm());
  }
}

TEST(Derivatives, SolversAndSubspaceAgree) {
  const MultiD2State s = random_state(3, 12, 17, 0.3);
  std::vector<double> w, eta;
  for (int k = 0; k < 12; ++k) {
    w.push_back(1.0 + 4.0 * k);
    eta.push_back(0.05 + 0.01 * k);
  }
  const ModelAssembly model{kFig2, w, eta};
  SolverOptions full;
  full.mode_subspace = false;
  SolverOptions split;
  split.solver = EomSolver::real_split;
  const StateDerivative a = assemble_derivatives(s, -2.0, model);
  const StateDerivative b = assemble_derivatives(s, -2.0, model, full);
  const StateDerivative c = assemble_derivatives(s, -2.0, model, split);
  const double scale = a.d_displacements.norm() + a.d_amplitudes.norm();
  EXPECT_LT((a.d_amplitudes - b.d_amplitudes).norm(), 1e-9 * scale);
  EXPECT_LT((a.d_displacements - b.d_displacements).norm(), 1e-9 * scale);
  EXPECT_LT((a.d_amplitudes - c.d_amplitudes).norm(), 1e-7 * scale);
  EXPECT_LT((a.d_displacements - c.d_displacements).norm(), 1e-7 * scale);
}

TEST(Derivatives, NormIsStationary) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const MultiD2State s = random_state(4, 3, seed, 0.4);
    const ModelAssembly model{kFig2, {3.0, 10.0, 17.0}, {0.1, 0.2, 0.05}};
    for (EomSolver solver : {EomSolver::metric, EomSolver::real_split}) {
      SolverOptions o;
      o.solver = solver;
      const StateDerivative d = assemble_derivatives(s, 1.5, model, o);
      const double tol = solver == EomSolver::metric ? 1e-10 : 1e-9;
      EXPECT_LT(std::abs(overlap_rate(s, d).real()), tol) << to_string(solver);
    }
  }
}

// Dirac-Frenkel: the residual dD/dt + iHD must be orthogonal to every tangent direction of the ansatz.
// Both sides are evaluated in an exact Fock basis, independent of the equations of motion.
TEST(Derivatives, ResidualOrthogonalToTangentSpace) {
  const int m = 2;
  const std::vector<int> cut{30};
  const MultiD2State s = random_state(m, 1, 23, 0.5);
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  const double t = -1.5;
  const StateDerivative d = assemble_derivatives(s, t, model);

  const double h = 1e-5;
  const auto psi_dot = minus(to_fock(displaced(s, d, h), cut).coefficients,
                             to_fock(displaced(s, d, -h), cut).coefficients, 0.5 / h);
  const FockVector psi = to_fock(s, cut);
  const double hs = 1e-6;
  // Central difference of the exact propagator gives -iH psi up to O(hs^2).
  const auto exact = minus(fock_rk4_step(kFig2, {10.0}, {0.1}, psi, t, hs).coefficients,
                           fock_rk4_step(kFig2, {10.0}, {0.1}, psi, t, -hs).coefficients, 0.5 / hs);
  const auto residual = minus(psi_dot, exact, 1.0);
  const double res_norm = std::sqrt(inner(residual, residual).real());
  EXPECT_GT(res_norm, 1e-4);  // the ansatz is not exact here, so the check is not vacuous

  // Tangent directions: each complex parameter moved along 1 and i.
  double worst = 0.0;
  for (int which = 0; which < m * 4; ++which) {
    for (cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      MultiD2State up = s, down = s;
      const int n = which / 4, j = which % 4;
      if (j < 3) {
        up.amplitudes(n, j) += h * dir;
        down.amplitudes(n, j) -= h * dir;
      } else {
        up.displacements(n, 0) += h * dir;
        down.displacements(n, 0) -= h * dir;
      }
      const auto tangent = minus(to_fock(up, cut).coefficients, to_fock(down, cut).coefficients, 0.5 / h);
      worst = std::max(worst, std::abs(inner(tangent, residual)) / std::sqrt(inner(tangent, tangent).real()));
    }
  }
  EXPECT_LT(worst, 1e-6 * std::max(1.0, res_norm)) << "residual norm " << res_norm;
}

TEST(Rk4, ConsistentAsStepVanishes) {
  const MultiD2State s = random_state(3, 1, 4, 0.3);
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  double previous = 0.0;
  for (double dt : {1e-3, 1e-4, 1e-5}) {
    const MultiD2State next = rk4_step(s, 0.2, dt, model);
    const double change = (next.amplitudes - s.amplitudes).norm() + (next.displacements - s.displacements).norm();
    if (previous > 0.0) EXPECT_NEAR(previous / change, 10.0, 0.5);
    previous = change;
  }
}

TEST(Rk4, FourthOrderConvergence) {
  // Measured after the start-up transient of the small noise branches, which is stiff at coarse steps.
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  MultiD2State start;
  propagate(init_state(Spin::plus, 4, 1, 1e-2, 7), model, options_for({-30.0, -5.0, 1e-3}, 1 << 20), &start);
  auto run = [&](int halvings) {
    auto o = options_for({-5.0, 5.0, 0.01 / (1 << halvings)}, 10 << halvings);
    o.max_norm_error = 1.0;
    return propagate(start, model, o);
  };
  const Trajectory a = run(0), b = run(1), c = run(2);
  const double ratio = max_population_deviation(a, b) / max_population_deviation(b, c);
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Rk4, TimeReversal) {
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  const MultiD2State init = init_state(Spin::plus, 4, 1, 1e-2, 7);
  MultiD2State s = init;
  const double dt = 1e-3;
  const int steps = 4000;
  for (int i = 0; i < steps; ++i) s = rk4_step(s, -2.0 + i * dt, dt, model);
  const Populations mid = populations(s);
  EXPECT_GT(std::abs(mid.plus - 1.0), 1e-3);
  for (int i = steps; i > 0; --i) s = rk4_step(s, -2.0 + i * dt, -dt, model);
  const Populations back = populations(s), start = populations(init);
  for (Spin sp : kSpins) EXPECT_NEAR(back[sp], start[sp], 1e-5);
}

TEST(Propagate, UncoupledPopulationsConstant) {
  const SystemParams p{1.0, 0.0, 1.0};
  const ModelAssembly model = ModelAssembly::single_mode(p, {0.0, 10.0});
  for (Spin sp : kSpins) {
    const MultiD2State init = init_state(sp, 4, 1, 1e-2, 7);
    const Populations start = populations(init);
    const Trajectory tr = propagate(init, model, options_for({-30.0, 30.0, 1e-3}, 1000));
    for (const Populations& q : tr.populations) {
      // Only the RK4 amplitude error of the exp(-i v t^2 / 2) phases remains.
      for (Spin s2 : kSpins) EXPECT_NEAR(q[s2], start[s2], 1e-7);
    }
  }
}

TEST(Propagate, GaugeInvariance) {
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  MultiD2State init = init_state(Spin::zero, 4, 1, 1e-2, 7);
  const Trajectory a = propagate(init, model, options_for({-3.0, 3.0, 1e-3}));
  init.amplitudes *= std::polar(1.0, 1.1);
  const Trajectory b = propagate(init, model, options_for({-3.0, 3.0, 1e-3}));
  // Not bitwise: rounding in the ill-conditioned metric solves is amplified to ~1e-10.
  EXPECT_LT(max_population_deviation(a, b), 1e-8);
}

TEST(Propagate, SingleModeAndOneModeBathBitwiseIdentical) {
  DiscretizedBath one;
  one.frequencies = {kFig2Mode.omega_mode};
  one.couplings = {kFig2Mode.lambda};
  one.boundaries = {0.0, 20.0};
  const MultiD2State init = init_state(Spin::plus, 4, 1, 1e-2, 7);
  const auto o = options_for({-3.0, 3.0, 1e-3}, 10);
  const Trajectory a = propagate(init, ModelAssembly::single_mode(kFig2, kFig2Mode), o);
  const Trajectory b = propagate(init, ModelAssembly::bath(kFig2, one), o);
  EXPECT_EQ(trajectory_csv(a), trajectory_csv(b));
}

TEST(Propagate, BareModelSymmetricFromZero) {
  const Trajectory tr = propagate(init_state(Spin::zero, 1, 0, 0.0, 7), ModelAssembly::bare(kFig2),
                                  options_for({-30.0, 30.0, 1e-3}));
  double worst = 0.0;
  for (const Populations& q : tr.populations) worst = std::max(worst, std::abs(q.plus - q.minus));
  EXPECT_LE(worst, 1e-8);
  EXPECT_GT(tr.populations.back().plus, 0.01);
}

TEST(Propagate, RecordingAndDiagnostics) {
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  auto o = options_for({-1.0, 1.0, 1e-3}, 300);
  o.record_occupations = true;
  const Trajectory tr = propagate(init_state(Spin::plus, 2, 1, 1e-2, 7), model, o);
  ASSERT_EQ(tr.size(), 8u);  // 0, 300, ..., 1800 and the final step 2000
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
  EXPECT_EQ(tr.diagnostics.steps, 2000);
  EXPECT_EQ(tr.mode_occupations.size(), tr.size());
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
  const std::string csv = trajectory_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,P_plus,P_zero,P_minus,norm_err,n_occ_1");
}

TEST(Propagate, RejectsBadInputs) {
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  EXPECT_THROW(propagate(init_state(Spin::plus, 2, 3, 1e-2, 7), model, options_for({-1.0, 1.0, 1e-3})), ConfigError);
  EXPECT_THROW(propagate(init_state(Spin::plus, 2, 1, 1e-2, 7), model, options_for({1.0, -1.0, 1e-3})), ConfigError);
  auto tight = options_for({-1.0, 1.0, 0.2});
  tight.max_norm_error = 1e-14;
  EXPECT_THROW(propagate(init_state(Spin::plus, 4, 1, 1e-2, 7), model, tight), NumericalError);
}

TEST(Propagate, NormRefinementSplitsOnlyBadSteps) {
  const ModelAssembly model = ModelAssembly::single_mode(kFig2, kFig2Mode);
  const MultiD2State init = init_state(Spin::plus, 4, 1, 1e-2, 7);
  auto coarse = options_for({-30.0, -28.0, 0.01}, 10);
  coarse.max_norm_error = 1.0;
  const Trajectory fixed = propagate(init, model, coarse);
  EXPECT_EQ(fixed.diagnostics.refined_steps, 0);

  auto refined_opts = coarse;
  refined_opts.step_norm_tolerance = 1e-10;
  const Trajectory refined = propagate(init, model, refined_opts);
  EXPECT_GT(refined.diagnostics.refined_steps, 0);
  EXPECT_LT(refined.diagnostics.refined_steps, 200L * 255);
  EXPECT_LT(refined.diagnostics.max_norm_error, 0.1 * fixed.diagnostics.max_norm_error);

  // Refinement moves the populations towards a fine fixed-step reference.
  auto fine = options_for({-30.0, -28.0, 0.01 / 64}, 640);
  fine.max_norm_error = 1.0;
  const Trajectory reference = propagate(init, model, fine);
  EXPECT_LT(max_population_deviation(refined, reference), max_population_deviation(fixed, reference));

  // A loose tolerance never triggers and leaves the fixed-step result bitwise unchanged.
  auto loose = coarse;
  loose.step_norm_tolerance = 1.0;
  EXPECT_EQ(trajectory_csv(propagate(init, model, loose)), trajectory_csv(fixed));
  loose.step_norm_tolerance = -1.0;
  EXPECT_THROW(propagate(init, model, loose), ConfigError);
}
