#include "bowtie/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/kernels.hpp"

namespace bowtie {

namespace {

struct FockSpace {
  std::vector<int> cutoffs;
  std::vector<long> strides;
  long block = 1;

  explicit FockSpace(std::vector<int> c) : cutoffs(std::move(c)) {
    for (int n : cutoffs) {
      if (n < 0) throw ConfigError("Fock cutoff must be non-negative");
      strides.push_back(block);
      block *= n + 1;
    }
  }
  int level(long idx, std::size_t q) const { return static_cast<int>((idx / strides[q]) % (cutoffs[q] + 1)); }
};

// -i H(t) psi, assembled from shifted element-wise products on each spin block.
class FockHamiltonian {
 public:
  FockHamiltonian(const SystemParams& p, const std::vector<double>& freqs, const std::vector<double>& couplings,
                  const FockSpace& space)
      : p_(p), space_(space), boson_energy_(space.block, 0.0), raise_(freqs.size()), hpsi_(3 * space.block) {
    for (std::size_t q = 0; q < freqs.size(); ++q) {
      raise_[q].assign(space.block, 0.0);
      for (long idx = 0; idx < space.block; ++idx) {
        const int n = space.level(idx, q);
        boson_energy_[idx] += freqs[q] * n;
        raise_[q][idx] = couplings[q] * std::sqrt(static_cast<double>(n));  // <n|b^+|n-1>
      }
    }
  }

  void derivative(double t, std::span<const cplx> psi, std::span<cplx> out) {
    const long b = space_.block;
    auto blk = [b](auto span, int s) { return span.subspan(static_cast<std::size_t>(s) * b, b); };
    std::span<cplx> h(hpsi_);
    std::fill(h.begin(), h.end(), cplx{});
    const double vt = p_.v * t;
    for (Spin s : kSpins) {
      const int i = index_of(s);
      kernels::wmadd(blk(h, i), boson_energy_, blk(psi, i));
      kernels::axpy(blk(h, i), slope(s) * vt, blk(psi, i));
    }
    kernels::axpy(blk(h, 0), p_.delta, blk(psi, 1));
    kernels::axpy(blk(h, 1), p_.delta, blk(psi, 0));
    kernels::axpy(blk(h, 1), p_.delta, blk(psi, 2));
    kernels::axpy(blk(h, 2), p_.delta, blk(psi, 1));
    for (std::size_t q = 0; q < raise_.size(); ++q) {
      const long st = space_.strides[q];
      const std::span<const double> w(raise_[q]);
      // (b^+ + b) Sx: the zero block couples to plus + minus and vice versa.
      const std::pair<int, int> pairs[] = {{0, 1}, {2, 1}, {1, 0}, {1, 2}};
      for (auto [to, from] : pairs) {
        auto dst = blk(h, to);
        auto src = blk(psi, from);
        kernels::wmadd(dst.subspan(st), w.subspan(st), src.first(b - st));
        kernels::wmadd(dst.first(b - st), w.subspan(st), src.subspan(st));
      }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(h[i].imag(), -h[i].real());
  }

 private:
  SystemParams p_;
  const FockSpace& space_;
  std::vector<double> boson_energy_;
  std::vector<std::vector<double>> raise_;
  std::vector<cplx> hpsi_;
};

struct FockRun {
  Trajectory traj;
  FockVector final;
  double max_top = 0.0;
};

void check_modes(const std::vector<double>& freqs, const std::vector<double>& couplings, const FockVector& v) {
  if (freqs.size() != couplings.size() || freqs.size() != v.cutoffs.size()) {
    throw ConfigError("mode frequencies, couplings and cutoffs differ in length");
  }
  if (static_cast<long>(v.coefficients.size()) != 3 * v.block_size()) {
    throw ConfigError("Fock vector length does not match its cutoffs");
  }
}

class Rk4 {
 public:
  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  void step(FockHamiltonian& ham, std::vector<cplx>& psi, double t, double dt) {
    auto stage = [&](const std::vector<cplx>& k, double h) {
      tmp_ = psi;
      kernels::axpy(tmp_, h, k);
    };
    ham.derivative(t, psi, k1_);
    stage(k1_, 0.5 * dt);
    ham.derivative(t + 0.5 * dt, tmp_, k2_);
    stage(k2_, 0.5 * dt);
    ham.derivative(t + 0.5 * dt, tmp_, k3_);
    stage(k3_, dt);
    ham.derivative(t + dt, tmp_, k4_);
    kernels::axpy(psi, dt / 6.0, k1_);
    kernels::axpy(psi, dt / 3.0, k2_);
    kernels::axpy(psi, dt / 3.0, k3_);
    kernels::axpy(psi, dt / 6.0, k4_);
  }

 private:
  std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

FockRun run_fock(const SystemParams& p, const std::vector<double>& freqs, const std::vector<double>& couplings,
                 const FockVector& init, const TimeGrid& grid, const FockOptions& options) {
  p.validate();
  grid.validate();
  if (options.record_every < 1) throw ConfigError("record_every must be at least 1");
  check_modes(freqs, couplings, init);
  const std::vector<int>& cutoffs = init.cutoffs;
  const FockSpace space(cutoffs);
  FockHamiltonian ham(p, freqs, couplings, space);

  FockRun run;
  run.final = init;
  std::vector<cplx>& psi = run.final.coefficients;
  Rk4 rk4(psi.size());

  const long steps = grid.steps();
  const double dt = grid.dt;
  for (long i = 0;; ++i) {
    run.max_top = std::max(run.max_top, run.final.top_level_occupation());
    if (i % options.record_every == 0 || i == steps) {
      const Populations pop = run.final.populations();
      run.traj.times.push_back(grid.time(i));
      run.traj.populations.push_back(pop);
      const double err = std::abs(pop.sum() - 1.0);
      run.traj.norm_error.push_back(err);
      run.traj.diagnostics.max_norm_error = std::max(run.traj.diagnostics.max_norm_error, err);
      run.traj.diagnostics.final_norm_error = err;
      if (options.record_occupations) {
        std::vector<double> occ(cutoffs.size());
        for (std::size_t q = 0; q < cutoffs.size(); ++q) occ[q] = run.final.mode_occupation(static_cast<int>(q));
        run.traj.mode_occupations.push_back(std::move(occ));
      }
    }
    if (i == steps) break;
    rk4.step(ham, psi, grid.time(i), dt);
  }
  run.traj.diagnostics.steps = steps;
  // Without coupling nothing leaks upward; the vacuum-only cutoff is then exact.
  const bool coupled = std::any_of(couplings.begin(), couplings.end(), [](double eta) { return eta != 0.0; });
  if (coupled && run.max_top > options.top_level_tolerance) {
    throw NumericalError("cutoff too small: top Fock level reached occupation " + format_number(run.max_top) +
                         " (tolerance " + format_number(options.top_level_tolerance) + ")");
  }
  return run;
}

}  // namespace

long FockVector::block_size() const {
  long b = 1;
  for (int n : cutoffs) b *= n + 1;
  return b;
}

Populations FockVector::populations() const {
  const long b = block_size();
  double p[3] = {0.0, 0.0, 0.0};
  for (int s = 0; s < 3; ++s) {
    for (long i = 0; i < b; ++i) p[s] += std::norm(coefficients[s * b + i]);
  }
  return {p[0], p[1], p[2]};
}

double FockVector::top_level_occupation() const {
  if (cutoffs.empty()) return 0.0;
  const FockSpace space(cutoffs);
  double top = 0.0;
  for (long idx = 0; idx < space.block; ++idx) {
    bool at_top = false;
    for (std::size_t q = 0; q < cutoffs.size(); ++q) at_top = at_top || space.level(idx, q) == cutoffs[q];
    if (!at_top) continue;
    for (int s = 0; s < 3; ++s) top += std::norm(coefficients[s * space.block + idx]);
  }
  return top;
}

double FockVector::mode_occupation(int q) const {
  if (q < 0 || q >= static_cast<int>(cutoffs.size())) throw ConfigError("mode index out of range");
  const FockSpace space(cutoffs);
  double occ = 0.0;
  for (long idx = 0; idx < space.block; ++idx) {
    const int n = space.level(idx, q);
    for (int s = 0; s < 3; ++s) occ += n * std::norm(coefficients[s * space.block + idx]);
  }
  return occ;
}

FockVector fock_basis_state(Spin spin, std::vector<int> cutoffs) {
  FockVector v;
  v.cutoffs = std::move(cutoffs);
  const long b = FockSpace(v.cutoffs).block;
  v.coefficients.assign(3 * b, cplx{});
  v.coefficients[index_of(spin) * b] = 1.0;
  return v;
}

Trajectory fock_propagate(const SystemParams& p, const SingleModeCoupling& c, int n_max, Spin init,
                          const TimeGrid& grid, const FockOptions& options, FockVector* final_state) {
  c.validate();
  if (n_max < 0) throw ConfigError("oracle.n_max must be non-negative");
  FockRun run = run_fock(p, {c.omega_mode}, {c.lambda}, fock_basis_state(init, {n_max}), grid, options);
  if (final_state) *final_state = std::move(run.final);
  return std::move(run.traj);
}

Trajectory fock_propagate_modes(const SystemParams& p, const std::vector<double>& frequencies,
                                const std::vector<double>& couplings, const std::vector<int>& cutoffs, Spin init,
                                const TimeGrid& grid, const FockOptions& options, FockVector* final_state) {
  if (cutoffs.size() > 2) throw ConfigError("the multi-mode Fock oracle supports at most two modes");
  for (int n : cutoffs) {
    if (n > kMaxMultiModeCutoff) {
      throw ConfigError("multi-mode Fock cutoff must not exceed " + std::to_string(kMaxMultiModeCutoff));
    }
  }
  FockRun run = run_fock(p, frequencies, couplings, fock_basis_state(init, cutoffs), grid, options);
  if (final_state) *final_state = std::move(run.final);
  return std::move(run.traj);
}

Trajectory fock_propagate_from(const SystemParams& p, const std::vector<double>& frequencies,
                               const std::vector<double>& couplings, const FockVector& init, const TimeGrid& grid,
                               const FockOptions& options, FockVector* final_state) {
  FockRun run = run_fock(p, frequencies, couplings, init, grid, options);
  if (final_state) *final_state = std::move(run.final);
  return std::move(run.traj);
}

FockVector to_fock(const MultiD2State& state, const std::vector<int>& cutoffs) {
  if (static_cast<int>(cutoffs.size()) != state.n_modes()) throw ConfigError("cutoff count must equal the mode count");
  if (cutoffs.size() > 2) throw ConfigError("Fock expansion supports at most two modes");
  FockVector v = fock_basis_state(Spin::plus, cutoffs);
  std::fill(v.coefficients.begin(), v.coefficients.end(), cplx{});
  const FockSpace space(cutoffs);
  for (int n = 0; n < state.multiplicity(); ++n) {
    for (long idx = 0; idx < space.block; ++idx) {
      cplx weight = 1.0;
      for (std::size_t q = 0; q < cutoffs.size(); ++q) {
        const cplx a = state.displacements(n, static_cast<Eigen::Index>(q));
        const int level = space.level(idx, q);
        // <level|a> = exp(-|a|^2 / 2) a^level / sqrt(level!)
        cplx term = std::exp(-0.5 * std::norm(a));
        for (int j = 1; j <= level; ++j) term *= a / std::sqrt(static_cast<double>(j));
        weight *= term;
      }
      for (int s = 0; s < 3; ++s) v.coefficients[s * space.block + idx] += state.amplitudes(n, s) * weight;
    }
  }
  return v;
}

FockVector fock_rk4_step(const SystemParams& p, const std::vector<double>& frequencies,
                         const std::vector<double>& couplings, const FockVector& psi, double t, double dt) {
  check_modes(frequencies, couplings, psi);
  const FockSpace space(psi.cutoffs);
  FockHamiltonian ham(p, frequencies, couplings, space);
  FockVector out = psi;
  Rk4 rk4(out.coefficients.size());
  rk4.step(ham, out.coefficients, t, dt);
  return out;
}

AsymptoticResult bare_asymptotics(const SystemParams& p, Spin init, double horizon, double dt,
                                  double plateau_tolerance) {
  p.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("oracle.horizon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("oracle.dt must be positive");
  const TimeGrid grid{-horizon, horizon, dt};
  const long steps = grid.steps();
  const long stride = std::max(1L, std::lround(0.01 / dt));
  const double t_tail = 0.8 * horizon;

  // Start on the eigenvector that joins the requested diabatic line (for t < 0 the plus line is
  // lowest); a bare diabatic start leaves an O(Delta / (v T)) admixture that beats with the result.
  Eigen::Vector3cd psi;
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h_system(-horizon, p));
    psi = es.eigenvectors().col(index_of(init)).cast<cplx>();
  }
  const Eigen::Matrix3cd sx = spin1_operators().sx.cast<cplx>();
  auto rhs = [&](double t, const Eigen::Vector3cd& y) -> Eigen::Vector3cd {
    Eigen::Vector3cd out = p.delta * (sx * y);
    out[0] += p.v * t * y[0];
    out[2] -= p.v * t * y[2];
    return cplx(0.0, -1.0) * out;
  };
  // Diabatic populations carry a ~Delta / (v t) beat long after the crossing; projections on the
  // instantaneous eigenvectors share the same limit and settle as 1 / t^2.  For t > 0 the highest
  // level continues the plus line.
  auto adiabatic = [&](double t) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h_system(t, p));
    const double norm = psi.squaredNorm();
    Populations out;
    out.plus = std::norm(es.eigenvectors().col(2).cast<cplx>().dot(psi)) / norm;
    out.zero = std::norm(es.eigenvectors().col(1).cast<cplx>().dot(psi)) / norm;
    out.minus = std::norm(es.eigenvectors().col(0).cast<cplx>().dot(psi)) / norm;
    return out;
  };

  Populations lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  AsymptoticResult out;
  for (long i = 0;; ++i) {
    const double t = grid.time(i);
    if ((i % stride == 0 || i == steps) && t >= t_tail) {
      const Populations q = adiabatic(t);
      lo = {std::min(lo.plus, q.plus), std::min(lo.zero, q.zero), std::min(lo.minus, q.minus)};
      hi = {std::max(hi.plus, q.plus), std::max(hi.zero, q.zero), std::max(hi.minus, q.minus)};
      out.final = q;
    }
    if (i == steps) break;
    const Eigen::Vector3cd k1 = rhs(t, psi);
    const Eigen::Vector3cd k2 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1);
    const Eigen::Vector3cd k3 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2);
    const Eigen::Vector3cd k4 = rhs(t + dt, psi + dt * k3);
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!psi.allFinite()) throw NumericalError("bare integration diverged (reduce oracle.dt)");
  out.plateau_variation = std::max({hi.plus - lo.plus, hi.zero - lo.zero, hi.minus - lo.minus});
  if (out.plateau_variation > plateau_tolerance) {
    throw NumericalError("not converged: populations vary by " + format_number(out.plateau_variation) +
                         " over the last 10% of the window (increase oracle.horizon)");
  }
  return out;
}

}  // namespace bowtie
