#include "bowtie/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"

namespace bowtie {

namespace {

constexpr double kCoincidenceTol = 1e-9;

}  // namespace

void SystemParams::validate() const {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("model.v must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("model.delta must be non-negative");
  if (!(unit_freq > 0.0) || !std::isfinite(unit_freq)) throw ConfigError("model.unit_freq must be positive");
}

void SingleModeCoupling::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("coupling.lambda must be non-negative");
  if (!(omega_mode >= 0.0) || !std::isfinite(omega_mode)) {
    throw ConfigError("coupling.omega_mode must be non-negative");
  }
}

void TimeGrid::validate() const {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t0 < t1)) throw ConfigError("grid.t0 must be below grid.t1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("grid.dt must be positive");
}

long TimeGrid::steps() const { return std::lround((t1 - t0) / dt); }

std::string_view to_string(Spin s) {
  switch (s) {
    case Spin::plus: return "plus";
    case Spin::zero: return "zero";
    case Spin::minus: return "minus";
  }
  return "?";
}

char symbol(Spin s) {
  switch (s) {
    case Spin::plus: return '+';
    case Spin::zero: return '0';
    case Spin::minus: return '-';
  }
  return '?';
}

Spin parse_spin(std::string_view text) {
  if (text == "plus" || text == "+") return Spin::plus;
  if (text == "zero" || text == "0") return Spin::zero;
  if (text == "minus" || text == "-") return Spin::minus;
  throw ConfigError("unknown spin state '" + std::string(text) + "' (expected plus, zero or minus)");
}

std::string_view to_string(CrossingKind k) {
  switch (k) {
    case CrossingKind::f1: return "f1";
    case CrossingKind::f2: return "f2";
    case CrossingKind::a1: return "a1";
    case CrossingKind::a2: return "a2";
    case CrossingKind::a3: return "a3";
  }
  return "?";
}

SpinOperators spin1_operators() {
  SpinOperators ops;
  ops.sz = Eigen::Vector3d(1.0, 0.0, -1.0).asDiagonal();
  ops.sx << 0.0, 1.0, 0.0,
            1.0, 0.0, 1.0,
            0.0, 1.0, 0.0;
  return ops;
}

Eigen::Matrix3d h_system(double t, const SystemParams& p) {
  const SpinOperators ops = spin1_operators();
  return p.v * t * ops.sz + p.delta * ops.sx;
}

Eigen::MatrixXd h_single_mode_truncated(double t, const SystemParams& p, const SingleModeCoupling& c,
                                        int n_max) {
  if (n_max < 0) throw ConfigError("boson cutoff n_max must be non-negative");
  const int dim = 3 * (n_max + 1);
  const Eigen::Matrix3d hs = h_system(t, p);
  const Eigen::Matrix3d sx = spin1_operators().sx;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n <= n_max; ++n) {
    h.block<3, 3>(3 * n, 3 * n) = hs + n * c.omega_mode * Eigen::Matrix3d::Identity();
    if (n < n_max) {
      const Eigen::Matrix3d up = c.lambda * std::sqrt(static_cast<double>(n + 1)) * sx;
      h.block<3, 3>(3 * (n + 1), 3 * n) = up;
      h.block<3, 3>(3 * n, 3 * (n + 1)) = up;
    }
  }
  return h;
}

EnergyDiagram energy_diagram(const SystemParams& p, const SingleModeCoupling& c, int n_max,
                             const TimeGrid& grid) {
  p.validate();
  c.validate();
  grid.validate();
  const long steps = grid.steps();
  const int dim = 3 * (n_max + 1);
  EnergyDiagram out;
  out.times.resize(steps + 1);
  out.levels.resize(steps + 1, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (long i = 0; i <= steps; ++i) {
    const double t = grid.time(i);
    solver.compute(h_single_mode_truncated(t, p, c, n_max), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("eigensolver failed at t = " + format_number(t));
    }
    out.times[i] = t;
    out.levels.row(i) = solver.eigenvalues().transpose();
  }
  return out;
}

double diabatic_energy(const DiabaticLevel& level, double t, const SystemParams& p,
                       const SingleModeCoupling& c) {
  return slope(level.spin) * p.v * t + level.bosons * c.omega_mode;
}

namespace {

// Levels of the unbounded ladder passing through (t, E).
std::vector<DiabaticLevel> members_at(double t, double e, const SystemParams& p, const SingleModeCoupling& c) {
  std::vector<DiabaticLevel> out;
  for (Spin s : kSpins) {
    const double n_real = (e - slope(s) * p.v * t) / c.omega_mode;
    const double n_round = std::round(n_real);
    if (n_round < 0.0) continue;
    if (std::abs(n_real - n_round) * c.omega_mode <= kCoincidenceTol * std::max(1.0, std::abs(e))) {
      out.push_back({s, static_cast<int>(n_round)});
    }
  }
  return out;
}

CrossingKind classify(const std::vector<DiabaticLevel>& levels) {
  if (levels.size() == 3) {
    const int shift = levels[1].bosons - levels[0].bosons;
    if (shift == 0) return CrossingKind::a3;
    if (std::abs(shift) == 1) return CrossingKind::a1;
    return CrossingKind::f1;
  }
  const DiabaticLevel& a = levels[0];
  const DiabaticLevel& b = levels[1];
  if (std::abs(slope(a.spin) - slope(b.spin)) == 2) return CrossingKind::f2;
  return std::abs(a.bosons - b.bosons) == 1 ? CrossingKind::a2 : CrossingKind::f1;
}

}  // namespace

std::vector<CrossingRecord> classify_crossings(const SystemParams& p, const SingleModeCoupling& c,
                                               int n_max, const TimeWindow& window) {
  p.validate();
  c.validate();
  if (n_max < 0) throw ConfigError("boson cutoff n_max must be non-negative");
  if (!(c.omega_mode > 0.0)) {
    throw ConfigError("crossing classification needs coupling.omega_mode > 0 (degenerate ladders)");
  }
  if (!(window.lo <= window.hi)) throw ConfigError("crossing window must satisfy lo <= hi");

  const double e_max = n_max * c.omega_mode;
  const double t_reach = std::max(std::abs(window.lo), std::abs(window.hi));
  const int n_hi = static_cast<int>(std::ceil((e_max + p.v * t_reach) / c.omega_mode)) + 1;

  struct Point {
    double t, e;
  };
  std::vector<Point> points;
  for (Spin s1 : kSpins) {
    for (Spin s2 : kSpins) {
      if (slope(s1) <= slope(s2)) continue;
      const double dslope = (slope(s1) - slope(s2)) * p.v;
      for (int n1 = 0; n1 <= n_hi; ++n1) {
        for (int n2 = 0; n2 <= n_hi; ++n2) {
          const double t = (n2 - n1) * c.omega_mode / dslope;
          if (t < window.lo - kCoincidenceTol || t > window.hi + kCoincidenceTol) continue;
          const double e = slope(s1) * p.v * t + n1 * c.omega_mode;
          if (e > e_max + kCoincidenceTol) continue;
          points.push_back({t, e});
        }
      }
    }
  }
  std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
    return a.t < b.t || (a.t == b.t && a.e < b.e);
  });

  std::vector<CrossingRecord> out;
  for (const Point& pt : points) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const CrossingRecord& r) {
      return std::abs(r.time - pt.t) <= kCoincidenceTol && std::abs(r.energy - pt.e) <= kCoincidenceTol;
    });
    if (seen) continue;
    CrossingRecord rec;
    rec.time = pt.t;
    rec.energy = pt.e;
    rec.levels = members_at(pt.t, pt.e, p, c);
    if (rec.levels.size() < 2) continue;
    rec.kind = classify(rec.levels);
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const CrossingRecord& a, const CrossingRecord& b) {
    if (std::abs(a.time - b.time) > kCoincidenceTol) return a.time < b.time;
    return a.energy < b.energy;
  });
  return out;
}

namespace {

double group_spacing(const SystemParams& p, const SingleModeCoupling& c, int n_max, double t, double e,
                     std::size_t group) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h_single_mode_truncated(t, p, c, n_max),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed in gap search");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const Eigen::Index n = ev.size();
  Eigen::Index nearest = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(ev[i] - e) < std::abs(ev[nearest] - e)) nearest = i;
  }
  Eigen::Index lo = nearest, hi = nearest;
  while (static_cast<std::size_t>(hi - lo + 1) < group && (lo > 0 || hi < n - 1)) {
    if (lo == 0) {
      ++hi;
    } else if (hi == n - 1) {
      --lo;
    } else if (std::abs(ev[lo - 1] - e) <= std::abs(ev[hi + 1] - e)) {
      --lo;
    } else {
      ++hi;
    }
  }
  double spacing = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = lo; i < hi; ++i) spacing = std::min(spacing, ev[i + 1] - ev[i]);
  return spacing;
}

}  // namespace

GapMeasurement anticrossing_gap(const SystemParams& p, const SingleModeCoupling& c, int n_max,
                                const CrossingRecord& record, double half_width) {
  if (record.levels.size() < 2) throw ConfigError("gap measurement needs at least two levels");
  if (!(half_width > 0.0)) throw ConfigError("gap search half-width must be positive");
  const std::size_t group = record.levels.size();
  auto f = [&](double t) { return group_spacing(p, c, n_max, t, record.energy, group); };

  constexpr int kSamples = 400;
  const double step = 2.0 * half_width / kSamples;
  double best_t = record.time;
  double best = f(best_t);
  for (int i = 0; i <= kSamples; ++i) {
    const double t = record.time - half_width + i * step;
    const double g = f(t);
    if (g < best) {
      best = g;
      best_t = t;
    }
  }
  // Golden-section refinement inside the bracketing cells.
  double a = best_t - step, b = best_t + step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double tm = 0.5 * (a + b);
  const double fm = f(tm);
  if (fm < best) return {fm, tm};
  return {best, best_t};
}

std::string diagram_csv(const EnergyDiagram& diagram) {
  std::string out = "t";
  for (Eigen::Index j = 0; j < diagram.levels.cols(); ++j) out += ",E" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t i = 0; i < diagram.times.size(); ++i) {
    append_number(out, diagram.times[i]);
    for (Eigen::Index j = 0; j < diagram.levels.cols(); ++j) {
      out += ',';
      append_number(out, diagram.levels(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  return out;
}

std::string crossings_csv(const std::vector<CrossingRecord>& records) {
  std::string out = "t,E,kind,levels\n";
  for (const CrossingRecord& r : records) {
    append_number(out, r.time);
    out += ',';
    append_number(out, r.energy);
    out += ',';
    out += to_string(r.kind);
    out += ',';
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      if (i) out += ';';
      out += symbol(r.levels[i].spin);
      out += ':';
      out += std::to_string(r.levels[i].bosons);
    }
    out += '\n';
  }
  return out;
}

}  // namespace bowtie
