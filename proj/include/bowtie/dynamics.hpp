#pragma once
// Time-dependent variational dynamics of the multi-D2 state under
//
//   H = v t Sz + Delta Sx + sum_k eta_k (b_k^+ + b_k) Sx + sum_k omega_k b_k^+ b_k
//
// A single boson mode is the K = 1 case (omega_1 = Omega, eta_1 = Lambda); the bare model is K = 0.

#include <string_view>
#include <vector>

#include "bowtie/bath.hpp"
#include "bowtie/model.hpp"
#include "bowtie/state.hpp"
#include "bowtie/trajectory.hpp"

namespace bowtie {

struct ModelAssembly {
  SystemParams system;
  std::vector<double> mode_frequencies;
  std::vector<double> mode_couplings;

  static ModelAssembly bare(const SystemParams& p);
  static ModelAssembly single_mode(const SystemParams& p, const SingleModeCoupling& c);
  static ModelAssembly bath(const SystemParams& p, const DiscretizedBath& b);

  int n_modes() const { return static_cast<int>(mode_frequencies.size()); }
  void validate() const;
};

// How the linear system for the parameter velocities is formed and solved.
//   metric     - Hermitian tangent-space metric in (z = dA - A kappa, d alpha); complex Cholesky.
//   real_split - the amplitude/displacement Euler-Lagrange rows split into real and imaginary
//                parts (dimension 2(3M + MK)), solved by Tikhonov-regularized normal equations.
enum class EomSolver { metric, real_split };

std::string_view to_string(EomSolver s);
EomSolver parse_eom_solver(std::string_view text);

struct SolverOptions {
  EomSolver solver = EomSolver::metric;
  // Tikhonov shift relative to trace / dimension of the normal matrix.
  double regularization = 1e-12;
  double max_regularization = 1e-6;
  double regularization_growth = 10.0;
  // Relative residual of the regularized system that triggers escalation, then failure.
  double residual_tolerance = 1e-8;
  double ill_condition_threshold = 1e12;
  // Restrict mode velocities to span{eta, alpha_n, omega * alpha_n}; exact, cheaper when K > 2M + 1.
  bool mode_subspace = true;
};

struct StateDerivative {
  AmplitudeMatrix d_amplitudes;
  DisplacementMatrix d_displacements;
  double residual = 0.0;
  double condition_estimate = 1.0;
  double regularization = 0.0;  // absolute shift actually used
  int escalations = 0;
  bool ill_conditioned = false;
};

StateDerivative assemble_derivatives(const MultiD2State& state, double t, const ModelAssembly& model,
                                     const SolverOptions& options = {});

// <D| d/dt |D> for the given velocities; its real part is half the norm rate.
cplx overlap_rate(const MultiD2State& state, const StateDerivative& d);

// Per-step solver statistics accumulated by rk4_step.
struct StepStats {
  double max_condition = 0.0;
  long ill_conditioned = 0;
  long escalations = 0;
};

MultiD2State rk4_step(const MultiD2State& state, double t, double dt, const ModelAssembly& model,
                      const SolverOptions& options = {}, StepStats* stats = nullptr);

struct PropagationOptions {
  TimeGrid grid;
  int record_every = 100;
  bool record_occupations = false;
  double max_norm_error = 1e-4;
  // A step whose norm changes by more than this is redone as two half steps, recursively up to
  // max_refinements levels.  The exact dynamics conserves the norm, so the change is integration
  // error; it concentrates where branches nearly coincide.  0 keeps every step at grid.dt.
  double step_norm_tolerance = 0.0;
  int max_refinements = 8;
  SolverOptions solver;
};

// Integrates over the grid (dt may be negative only through rk4_step directly).
Trajectory propagate(const MultiD2State& init, const ModelAssembly& model, const PropagationOptions& options,
                     MultiD2State* final_state = nullptr);

}  // namespace bowtie
