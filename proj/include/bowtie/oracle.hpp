#pragma once
// Brute-force reference propagators: exact RK4 integration in a truncated boson Fock space and the
// bare three-level problem integrated out to its asymptotic plateau.

#include <vector>

#include "bowtie/model.hpp"
#include "bowtie/state.hpp"
#include "bowtie/trajectory.hpp"

namespace bowtie {

// Product basis |s> (x) |n_1 .. n_K> with 0 <= n_q <= cutoffs[q]; spin-major, mode 1 fastest.
struct FockVector {
  std::vector<int> cutoffs;
  std::vector<cplx> coefficients;

  long block_size() const;  // prod (cutoffs[q] + 1)
  Populations populations() const;
  double norm_squared() const { return populations().sum(); }
  // Probability of finding any mode at its cutoff level.
  double top_level_occupation() const;
  double mode_occupation(int q) const;
};

FockVector fock_basis_state(Spin spin, std::vector<int> cutoffs);

// Coherent-state expansion of a multi-D2 state (at most two modes) in the truncated basis.
FockVector to_fock(const MultiD2State& state, const std::vector<int>& cutoffs);

// One RK4 step of i d/dt psi = H(t) psi; dt may be negative.
FockVector fock_rk4_step(const SystemParams& p, const std::vector<double>& frequencies,
                         const std::vector<double>& couplings, const FockVector& psi, double t, double dt);

struct FockOptions {
  int record_every = 1000;
  bool record_occupations = false;
  double top_level_tolerance = 1e-8;
};

// Single mode, initial state |spin> (x) |0>.  Throws NumericalError("cutoff too small ...") when the
// top Fock level ever carries more than the tolerance.
Trajectory fock_propagate(const SystemParams& p, const SingleModeCoupling& c, int n_max, Spin init,
                          const TimeGrid& grid, const FockOptions& options = {}, FockVector* final_state = nullptr);

// Up to two modes with independent cutoffs (each <= kMaxMultiModeCutoff); a smoke test for the
// multi-mode equations of motion.
inline constexpr int kMaxMultiModeCutoff = 6;
Trajectory fock_propagate_modes(const SystemParams& p, const std::vector<double>& frequencies,
                                const std::vector<double>& couplings, const std::vector<int>& cutoffs, Spin init,
                                const TimeGrid& grid, const FockOptions& options = {},
                                FockVector* final_state = nullptr);

// Same integrator from an arbitrary initial vector.
Trajectory fock_propagate_from(const SystemParams& p, const std::vector<double>& frequencies,
                               const std::vector<double>& couplings, const FockVector& init, const TimeGrid& grid,
                               const FockOptions& options = {}, FockVector* final_state = nullptr);

struct AsymptoticResult {
  Populations final;
  // max - min of each population over the last 10% of [-T, T], maximized over spins.
  double plateau_variation = 0.0;
};

// Bare model from -T to +T, read out in the instantaneous eigenbasis (labelled by the diabatic line
// each level joins) and normalized by the integrator norm.  Throws NumericalError("not converged ...")
// when the plateau variation exceeds plateau_tolerance.
AsymptoticResult bare_asymptotics(const SystemParams& p, Spin init, double horizon = 200.0, double dt = 1e-4,
                                  double plateau_tolerance = 1e-4);

}  // namespace bowtie
