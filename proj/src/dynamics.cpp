#include "bowtie/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/kernels.hpp"

namespace bowtie {

namespace {

constexpr cplx kI{0.0, 1.0};

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

// Quantities shared by every row of the equations of motion.
struct BranchTerms {
  OverlapMatrix overlap;     // S_mn
  Matrix coupling;           // X_mn = sum_k eta_k (conj(alpha_mk) + alpha_nk)
  Matrix mode_energy;        // W_mn = sum_k omega_k conj(alpha_mk) alpha_nk
  Matrix spin_overlap;       // rho_mn = A_m^H A_n
  Eigen::VectorXd sq_norm;   // |alpha_m|^2
  AmplitudeMatrix rhs_amp;   // R_ms = dE / dA*_ms
  DisplacementMatrix rhs_disp;  // R_mk = dE / dalpha*_mk (after eliminating the -1/2 alpha_mk terms)
};

BranchTerms branch_terms(const MultiD2State& state, double t, const ModelAssembly& model) {
  const int m_count = state.multiplicity();
  const int k_count = state.n_modes();
  const auto eta = as_span(model.mode_couplings);
  const auto omega = as_span(model.mode_frequencies);
  const double vt = model.system.v * t;
  const double delta = model.system.delta;
  const AmplitudeMatrix& a = state.amplitudes;

  BranchTerms bt;
  bt.overlap.resize(m_count, m_count);
  bt.coupling.resize(m_count, m_count);
  bt.mode_energy.resize(m_count, m_count);
  bt.sq_norm.resize(m_count);
  std::vector<cplx> eta_proj(m_count);
  for (int m = 0; m < m_count; ++m) {
    const auto am = state.branch_displacements(m);
    bt.sq_norm[m] = kernels::cdotc(am, am).real();
    eta_proj[m] = kernels::wsum(eta, am);
  }
  for (int m = 0; m < m_count; ++m) {
    const auto am = state.branch_displacements(m);
    for (int n = 0; n < m_count; ++n) {
      const auto an = state.branch_displacements(n);
      if (m == n) {
        bt.overlap(m, n) = 1.0;
      } else if (n > m) {
        bt.overlap(m, n) = std::exp(kernels::cdotc(am, an) - 0.5 * (bt.sq_norm[m] + bt.sq_norm[n]));
      } else {
        bt.overlap(m, n) = std::conj(bt.overlap(n, m));
      }
      bt.coupling(m, n) = std::conj(eta_proj[m]) + eta_proj[n];
      bt.mode_energy(m, n) = k_count ? kernels::wdotc(omega, am, an) : cplx{};
    }
  }
  bt.spin_overlap = a.conjugate() * a.transpose();

  // h_mn = vt Sz + (Delta + X_mn) Sx + W_mn, applied to the ket amplitudes of branch n.
  bt.rhs_amp = AmplitudeMatrix::Zero(m_count, 3);
  Matrix energy_form(m_count, m_count);  // A_m^H h_mn A_n
  Matrix sx_form(m_count, m_count);      // A_m^H Sx A_n
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < m_count; ++n) {
      const cplx c = delta + bt.coupling(m, n);
      const cplx w = bt.mode_energy(m, n);
      const cplx h0 = (vt + w) * a(n, 0) + c * a(n, 1);
      const cplx h1 = c * (a(n, 0) + a(n, 2)) + w * a(n, 1);
      const cplx h2 = (w - vt) * a(n, 2) + c * a(n, 1);
      const cplx s = bt.overlap(m, n);
      bt.rhs_amp(m, 0) += s * h0;
      bt.rhs_amp(m, 1) += s * h1;
      bt.rhs_amp(m, 2) += s * h2;
      energy_form(m, n) = std::conj(a(m, 0)) * h0 + std::conj(a(m, 1)) * h1 + std::conj(a(m, 2)) * h2;
      sx_form(m, n) = std::conj(a(m, 1)) * (a(n, 0) + a(n, 2)) + (std::conj(a(m, 0)) + std::conj(a(m, 2))) * a(n, 1);
    }
  }

  // R_mk = sum_n S_mn [ (A_m^H h_mn A_n) alpha_nk + rho_mn omega_k alpha_nk + (A_m^H Sx A_n) eta_k ]
  bt.rhs_disp = DisplacementMatrix::Zero(m_count, k_count);
  if (k_count > 0) {
    const Matrix c_energy = bt.overlap.cwiseProduct(energy_form);
    const Matrix c_norm = bt.overlap.cwiseProduct(bt.spin_overlap);
    const Vector c_sx = bt.overlap.cwiseProduct(sx_form).rowwise().sum();
    const DisplacementMatrix weighted = c_norm * state.displacements;
    bt.rhs_disp = c_energy * state.displacements;
    const Eigen::Map<const Eigen::RowVectorXd> omega_row(model.mode_frequencies.data(), k_count);
    const Eigen::Map<const Eigen::RowVectorXd> eta_row(model.mode_couplings.data(), k_count);
    for (int m = 0; m < m_count; ++m) {
      bt.rhs_disp.row(m) += weighted.row(m).cwiseProduct(omega_row.cast<cplx>());
      bt.rhs_disp.row(m) += c_sx[m] * eta_row.cast<cplx>();
    }
  }
  return bt;
}

// Trace / dimension of the full metric, used to scale the Tikhonov shift in both routes.
double metric_scale(const MultiD2State& state, const BranchTerms& bt) {
  const int m_count = state.multiplicity();
  const int k_count = state.n_modes();
  double trace = 3.0 * m_count;
  for (int m = 0; m < m_count; ++m) {
    trace += bt.spin_overlap(m, m).real() * (k_count + bt.sq_norm[m]);
  }
  return trace / (3.0 * m_count + static_cast<double>(m_count) * k_count);
}

struct SolveResult {
  Vector solution;
  double residual = 0.0;
  double condition = 1.0;
  double shift = 0.0;
  int escalations = 0;
};

// Solves (G + shift I) y = b for Hermitian positive semidefinite G, escalating the shift until the
// relative residual of the shifted system passes.  MatrixT is real or complex.
template <class MatrixT, class VectorT>
auto regularized_solve(const MatrixT& g, const VectorT& b, double scale, const SolverOptions& opt) {
  const double b_norm = b.norm();
  const double max_shift = opt.max_regularization * scale;
  double shift = opt.regularization * scale;
  struct Out {
    VectorT solution;
    double residual = 0.0;
    double condition = 1.0;
    double shift = 0.0;
    int escalations = 0;
  } out;
  out.solution = VectorT::Zero(b.size());
  if (b_norm == 0.0) return out;
  MatrixT shifted = g;
  for (;;) {
    shifted.diagonal() = g.diagonal().array() + shift;
    Eigen::LLT<MatrixT> llt(shifted);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      VectorT y = llt.solve(b);
      VectorT r = b - shifted * y;
      y += llt.solve(r);  // one step of iterative refinement
      r = b - shifted * y;
      out.solution = std::move(y);
      out.residual = r.norm() / b_norm;
      const double rc = llt.rcond();
      out.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
      ok = std::isfinite(out.residual) && out.residual <= opt.residual_tolerance;
    }
    out.shift = shift;
    if (ok) return out;
    if (shift >= max_shift) {
      throw NumericalError("stiff-step: regularized solve residual " + format_number(out.residual) +
                           " exceeds tolerance at the maximal shift " + format_number(shift));
    }
    shift = std::min(shift * opt.regularization_growth, max_shift);
    ++out.escalations;
  }
}

StateDerivative solve_metric(const MultiD2State& state, const ModelAssembly& model, const BranchTerms& bt,
                             const SolverOptions& opt) {
  const int m_count = state.multiplicity();
  const int k_count = state.n_modes();
  const AmplitudeMatrix& a = state.amplitudes;

  // Mode coordinates: either all K modes or an orthonormal basis of a subspace that contains
  // eta, every alpha_n and every omega * alpha_n (the metric leaves it and its complement invariant).
  const bool reduce = opt.mode_subspace && 2 * m_count + 1 < k_count;
  const int r = reduce ? 2 * m_count + 1 : k_count;
  Matrix basis;  // K x r, orthonormal columns
  Matrix coords;  // M x r, coordinates of alpha_n
  Matrix rhs_modes;  // M x r
  if (reduce) {
    Matrix span(k_count, r);
    const Eigen::Map<const Eigen::VectorXd> eta(model.mode_couplings.data(), k_count);
    const Eigen::Map<const Eigen::VectorXd> omega(model.mode_frequencies.data(), k_count);
    span.col(0) = eta.cast<cplx>();
    for (int n = 0; n < m_count; ++n) {
      span.col(1 + n) = state.displacements.row(n).transpose();
      span.col(1 + m_count + n) = state.displacements.row(n).transpose().cwiseProduct(omega.cast<cplx>());
    }
    Eigen::HouseholderQR<Matrix> qr(span);
    basis = qr.householderQ() * Matrix::Identity(k_count, r);
    coords = state.displacements * basis.conjugate();
    rhs_modes = bt.rhs_disp * basis.conjugate();
  } else {
    coords = state.displacements;
    rhs_modes = bt.rhs_disp;
  }

  const int dim = 3 * m_count + m_count * r;
  auto amp_index = [](int m, int s) { return 3 * m + s; };
  auto mode_index = [&](int m, int j) { return 3 * m_count + m * r + j; };
  Matrix g = Matrix::Zero(dim, dim);
  Vector b(dim);
  for (int m = 0; m < m_count; ++m) {
    for (int s = 0; s < 3; ++s) b[amp_index(m, s)] = -kI * bt.rhs_amp(m, s);
    for (int j = 0; j < r; ++j) b[mode_index(m, j)] = -kI * rhs_modes(m, j);
    for (int n = 0; n < m_count; ++n) {
      const cplx s_mn = bt.overlap(m, n);
      const cplx p_mn = bt.spin_overlap(m, n) * s_mn;
      for (int s = 0; s < 3; ++s) {
        g(amp_index(m, s), amp_index(n, s)) = s_mn;
        for (int j = 0; j < r; ++j) {
          const cplx v = a(n, s) * std::conj(coords(m, j)) * s_mn;
          g(amp_index(m, s), mode_index(n, j)) = v;
          g(mode_index(n, j), amp_index(m, s)) = std::conj(v);
        }
      }
      for (int j = 0; j < r; ++j) {
        for (int l = 0; l < r; ++l) {
          cplx v = p_mn * std::conj(coords(m, l)) * coords(n, j);
          if (j == l) v += p_mn;
          g(mode_index(m, j), mode_index(n, l)) = v;
        }
      }
    }
  }

  const auto sol = regularized_solve(g, b, metric_scale(state, bt), opt);

  StateDerivative d;
  d.residual = sol.residual;
  d.condition_estimate = sol.condition;
  d.regularization = sol.shift;
  d.escalations = sol.escalations;
  d.d_displacements.resize(m_count, k_count);
  Matrix c(m_count, r);
  for (int m = 0; m < m_count; ++m) {
    for (int j = 0; j < r; ++j) c(m, j) = sol.solution[mode_index(m, j)];
  }
  if (k_count > 0) d.d_displacements = reduce ? DisplacementMatrix(c * basis.transpose()) : DisplacementMatrix(c);
  d.d_amplitudes.resize(m_count, 3);
  for (int n = 0; n < m_count; ++n) {
    // dA = z + A kappa with kappa_n = Re sum_k conj(alpha_nk) dalpha_nk
    const cplx rate = k_count ? kernels::cdotc(state.branch_displacements(n),
                                               {d.d_displacements.data() + static_cast<std::ptrdiff_t>(n) * k_count,
                                                static_cast<std::size_t>(k_count)})
                              : cplx{};
    for (int s = 0; s < 3; ++s) d.d_amplitudes(n, s) = sol.solution[amp_index(n, s)] + a(n, s) * rate.real();
  }
  return d;
}

StateDerivative solve_real_split(const MultiD2State& state, const BranchTerms& bt, const SolverOptions& opt) {
  const int m_count = state.multiplicity();
  const int k_count = state.n_modes();
  const AmplitudeMatrix& a = state.amplitudes;
  const DisplacementMatrix& al = state.displacements;
  const int n = 3 * m_count + m_count * k_count;
  auto amp_index = [](int m, int s) { return 3 * m + s; };
  auto mode_index = [&](int m, int k) { return 3 * m_count + m * k_count + k; };

  // Rows read  C x + D conj(x) = R  with x = (dA, dalpha).
  Matrix cm = Matrix::Zero(n, n);
  Matrix dm = Matrix::Zero(n, n);
  Vector rhs(n);
  for (int m = 0; m < m_count; ++m) {
    for (int s = 0; s < 3; ++s) {
      const int row = amp_index(m, s);
      rhs[row] = bt.rhs_amp(m, s);
      for (int nb = 0; nb < m_count; ++nb) {
        const cplx is = kI * bt.overlap(m, nb);
        cm(row, amp_index(nb, s)) += is;
        for (int k = 0; k < k_count; ++k) {
          cm(row, mode_index(nb, k)) += is * a(nb, s) * (std::conj(al(m, k)) - 0.5 * std::conj(al(nb, k)));
          dm(row, mode_index(nb, k)) += is * a(nb, s) * (-0.5 * al(nb, k));
        }
      }
    }
    for (int k = 0; k < k_count; ++k) {
      const int row = mode_index(m, k);
      rhs[row] = bt.rhs_disp(m, k);
      for (int nb = 0; nb < m_count; ++nb) {
        const cplx is = kI * bt.overlap(m, nb);
        const cplx rho = bt.spin_overlap(m, nb);
        for (int s = 0; s < 3; ++s) cm(row, amp_index(nb, s)) += is * std::conj(a(m, s)) * al(nb, k);
        cm(row, mode_index(nb, k)) += is * rho;
        for (int q = 0; q < k_count; ++q) {
          cm(row, mode_index(nb, q)) += is * rho * al(nb, k) * (std::conj(al(m, q)) - 0.5 * std::conj(al(nb, q)));
          dm(row, mode_index(nb, q)) += is * rho * al(nb, k) * (-0.5 * al(nb, q));
        }
      }
    }
  }

  Eigen::MatrixXd real_sys(2 * n, 2 * n);
  real_sys.topLeftCorner(n, n) = cm.real() + dm.real();
  real_sys.topRightCorner(n, n) = -cm.imag() + dm.imag();
  real_sys.bottomLeftCorner(n, n) = cm.imag() + dm.imag();
  real_sys.bottomRightCorner(n, n) = cm.real() - dm.real();
  Eigen::VectorXd real_rhs(2 * n);
  real_rhs << rhs.real(), rhs.imag();

  const Eigen::MatrixXd normal = real_sys.transpose() * real_sys;
  const Eigen::VectorXd normal_rhs = real_sys.transpose() * real_rhs;
  const auto sol = regularized_solve(normal, normal_rhs, normal.trace() / (2.0 * n), opt);

  StateDerivative d;
  d.residual = sol.residual;
  d.condition_estimate = sol.condition;
  d.regularization = sol.shift;
  d.escalations = sol.escalations;
  d.d_amplitudes.resize(m_count, 3);
  d.d_displacements.resize(m_count, k_count);
  for (int m = 0; m < m_count; ++m) {
    for (int s = 0; s < 3; ++s) {
      d.d_amplitudes(m, s) = {sol.solution[amp_index(m, s)], sol.solution[n + amp_index(m, s)]};
    }
    for (int k = 0; k < k_count; ++k) {
      d.d_displacements(m, k) = {sol.solution[mode_index(m, k)], sol.solution[n + mode_index(m, k)]};
    }
  }
  return d;
}

void add_scaled(MultiD2State& out, const StateDerivative& k, double h) {
  kernels::axpy({out.amplitudes.data(), static_cast<std::size_t>(out.amplitudes.size())}, h,
                {k.d_amplitudes.data(), static_cast<std::size_t>(k.d_amplitudes.size())});
  if (out.displacements.size() > 0) {
    kernels::axpy({out.displacements.data(), static_cast<std::size_t>(out.displacements.size())}, h,
                  {k.d_displacements.data(), static_cast<std::size_t>(k.d_displacements.size())});
  }
}

}  // namespace

ModelAssembly ModelAssembly::bare(const SystemParams& p) { return {p, {}, {}}; }

ModelAssembly ModelAssembly::single_mode(const SystemParams& p, const SingleModeCoupling& c) {
  return {p, {c.omega_mode}, {c.lambda}};
}

ModelAssembly ModelAssembly::bath(const SystemParams& p, const DiscretizedBath& b) {
  return {p, b.frequencies, b.couplings};
}

void ModelAssembly::validate() const {
  system.validate();
  if (mode_frequencies.size() != mode_couplings.size()) {
    throw ConfigError("mode frequency and coupling lists differ in length");
  }
}

std::string_view to_string(EomSolver s) { return s == EomSolver::metric ? "metric" : "real_split"; }

EomSolver parse_eom_solver(std::string_view text) {
  if (text == "metric") return EomSolver::metric;
  if (text == "real_split") return EomSolver::real_split;
  throw ConfigError("unknown solver '" + std::string(text) + "' (expected metric or real_split)");
}

StateDerivative assemble_derivatives(const MultiD2State& state, double t, const ModelAssembly& model,
                                     const SolverOptions& options) {
  if (state.n_modes() != model.n_modes()) {
    throw ConfigError("state has " + std::to_string(state.n_modes()) + " modes but the model has " +
                      std::to_string(model.n_modes()));
  }
  const BranchTerms bt = branch_terms(state, t, model);
  StateDerivative d = options.solver == EomSolver::metric ? solve_metric(state, model, bt, options)
                                                          : solve_real_split(state, bt, options);
  d.ill_conditioned = d.condition_estimate > options.ill_condition_threshold;
  return d;
}

cplx overlap_rate(const MultiD2State& state, const StateDerivative& d) {
  const int m_count = state.multiplicity();
  const int k_count = state.n_modes();
  const OverlapMatrix s = overlap_matrix(state);
  cplx total = 0.0;
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < m_count; ++n) {
      cplx coherent = 0.0;
      for (int k = 0; k < k_count; ++k) {
        const cplx an = state.displacements(n, k);
        const cplx dn = d.d_displacements(n, k);
        coherent += std::conj(state.displacements(m, k)) * dn - 0.5 * (dn * std::conj(an) + an * std::conj(dn));
      }
      for (int sp = 0; sp < 3; ++sp) {
        total += std::conj(state.amplitudes(m, sp)) * s(m, n) *
                 (d.d_amplitudes(n, sp) + state.amplitudes(n, sp) * coherent);
      }
    }
  }
  return total;
}

MultiD2State rk4_step(const MultiD2State& state, double t, double dt, const ModelAssembly& model,
                      const SolverOptions& options, StepStats* stats) {
  auto eval = [&](const MultiD2State& y, double time) {
    StateDerivative d = assemble_derivatives(y, time, model, options);
    if (stats) {
      stats->max_condition = std::max(stats->max_condition, d.condition_estimate);
      stats->ill_conditioned += d.ill_conditioned ? 1 : 0;
      stats->escalations += d.escalations;
    }
    return d;
  };
  const StateDerivative k1 = eval(state, t);
  MultiD2State y = state;
  add_scaled(y, k1, 0.5 * dt);
  const StateDerivative k2 = eval(y, t + 0.5 * dt);
  y = state;
  add_scaled(y, k2, 0.5 * dt);
  const StateDerivative k3 = eval(y, t + 0.5 * dt);
  y = state;
  add_scaled(y, k3, dt);
  const StateDerivative k4 = eval(y, t + dt);
  y = state;
  add_scaled(y, k1, dt / 6.0);
  add_scaled(y, k2, dt / 3.0);
  add_scaled(y, k3, dt / 3.0);
  add_scaled(y, k4, dt / 6.0);
  return y;
}

Trajectory propagate(const MultiD2State& init, const ModelAssembly& model, const PropagationOptions& options,
                     MultiD2State* final_state) {
  model.validate();
  options.grid.validate();
  if (options.record_every < 1) throw ConfigError("grid.record_every must be at least 1");
  if (!(options.step_norm_tolerance >= 0.0)) throw ConfigError("grid.norm_tolerance must be non-negative");
  if (options.max_refinements < 0) throw ConfigError("max_refinements must be non-negative");
  if (init.n_modes() != model.n_modes()) throw ConfigError("initial state and model disagree on the mode count");

  const long steps = options.grid.steps();
  Trajectory traj;
  StepStats stats;
  MultiD2State state = init;

  const double tol = options.step_norm_tolerance;
  // `coarse` is the single step from `from` over h, with norm change `err`.  Splitting stops when
  // it no longer halves the change: the solves have then hit their rounding floor.
  std::function<MultiD2State(const MultiD2State&, double, double, double, int, MultiD2State, double)> refine =
      [&](const MultiD2State& from, double t, double h, double n0, int depth, MultiD2State coarse, double err) {
        if (tol <= 0.0 || err <= tol || depth >= options.max_refinements) return coarse;
        const double hh = 0.5 * h;
        MultiD2State first = rk4_step(from, t, hh, model, options.solver, &stats);
        const double n1 = norm_squared(first);
        MultiD2State second = rk4_step(first, t + hh, hh, model, options.solver, &stats);
        const double split_err = std::abs(norm_squared(second) - n0);
        if (split_err > 0.5 * err) return split_err < err ? second : coarse;
        ++traj.diagnostics.refined_steps;
        const MultiD2State a = refine(from, t, hh, n0, depth + 1, std::move(first), std::abs(n1 - n0));
        const double na = norm_squared(a);
        if (na != n1) second = rk4_step(a, t + hh, hh, model, options.solver, &stats);
        const double second_err = std::abs(norm_squared(second) - na);
        return refine(a, t + hh, hh, na, depth + 1, std::move(second), second_err);
      };
  auto advance = [&](const MultiD2State& from, double t, double h, double n0) {
    MultiD2State to = rk4_step(from, t, h, model, options.solver, &stats);
    if (tol <= 0.0) return to;
    const double err = std::abs(norm_squared(to) - n0);
    return refine(from, t, h, n0, 0, std::move(to), err);
  };

  auto record = [&](long i, const OverlapMatrix& s, const Populations& pop, double err) {
    traj.times.push_back(options.grid.time(i));
    traj.populations.push_back(pop);
    traj.norm_error.push_back(err);
    if (options.record_occupations) {
      std::vector<double> occ(state.n_modes());
      for (int k = 0; k < state.n_modes(); ++k) occ[k] = mode_occupation(state, s, k);
      traj.mode_occupations.push_back(std::move(occ));
    }
  };

  for (long i = 0;; ++i) {
    const OverlapMatrix s = overlap_matrix(state);
    const Populations pop = populations(state, s);
    const double err = std::abs(pop.sum() - 1.0);
    if (!std::isfinite(err)) {
      throw NumericalError("non-finite state at t = " + format_number(options.grid.time(i)));
    }
    traj.diagnostics.max_norm_error = std::max(traj.diagnostics.max_norm_error, err);
    if (err > options.max_norm_error) {
      throw NumericalError("norm error " + format_number(err) + " exceeds " + format_number(options.max_norm_error) +
                           " at t = " + format_number(options.grid.time(i)) +
                           " (reduce grid.dt or raise ansatz.multiplicity)");
    }
    if (i % options.record_every == 0 || i == steps) record(i, s, pop, err);
    if (i == steps) {
      traj.diagnostics.final_norm_error = err;
      break;
    }
    state = advance(state, options.grid.time(i), options.grid.dt, pop.sum());
  }
  traj.diagnostics.steps = steps;
  traj.diagnostics.max_condition = stats.max_condition;
  traj.diagnostics.ill_conditioned_solves = stats.ill_conditioned;
  traj.diagnostics.regularization_escalations = stats.escalations;
  if (final_state) *final_state = std::move(state);
  return traj;
}

}  // namespace bowtie
