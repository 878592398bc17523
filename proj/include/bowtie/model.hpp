#pragma once
// Three-level bow-tie Hamiltonians, instantaneous spectra and the diabatic crossing taxonomy.
//
// Units: hbar = 1 and every frequency/time is measured in the unit frequency omega, so the
// numbers stored here are already dimensionless (v in omega^2, delta in omega, t in 1/omega).

#include <Eigen/Dense>
#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bowtie {

struct SystemParams {
  double v = 1.0;
  double delta = 0.1;
  double unit_freq = 1.0;

  void validate() const;
};

enum class Spin { plus = 0, zero = 1, minus = 2 };

inline constexpr std::array<Spin, 3> kSpins{Spin::plus, Spin::zero, Spin::minus};

constexpr int index_of(Spin s) { return static_cast<int>(s); }
// Diabatic slope in units of v.
constexpr int slope(Spin s) { return 1 - static_cast<int>(s); }

std::string_view to_string(Spin s);
char symbol(Spin s);
Spin parse_spin(std::string_view text);

struct SingleModeCoupling {
  double lambda = 0.1;
  double omega_mode = 10.0;

  void validate() const;
};

// Uniform grid t0, t0 + dt, ..., t1.  (t1 - t0) / dt is rounded to the nearest step count.
struct TimeGrid {
  double t0 = -30.0;
  double t1 = 30.0;
  double dt = 1e-3;

  void validate() const;
  long steps() const;
  double time(long i) const { return t0 + static_cast<double>(i) * dt; }
};

struct SpinOperators {
  Eigen::Matrix3d sz;
  Eigen::Matrix3d sx;
};

// Sx carries unit off-diagonals so that Delta * Sx reproduces the bare bow-tie matrix.
SpinOperators spin1_operators();

Eigen::Matrix3d h_system(double t, const SystemParams& p);

// Basis index 3 * n + s over |s> (x) |n>, n = 0..n_max.
Eigen::MatrixXd h_single_mode_truncated(double t, const SystemParams& p, const SingleModeCoupling& c,
                                        int n_max);

struct EnergyDiagram {
  std::vector<double> times;
  // One row per grid time, ascending eigenvalues.
  Eigen::MatrixXd levels;
};

EnergyDiagram energy_diagram(const SystemParams& p, const SingleModeCoupling& c, int n_max,
                             const TimeGrid& grid);

enum class CrossingKind { f1, f2, a1, a2, a3 };

std::string_view to_string(CrossingKind k);
constexpr bool is_allowed(CrossingKind k) {
  return k == CrossingKind::a1 || k == CrossingKind::a2 || k == CrossingKind::a3;
}

struct DiabaticLevel {
  Spin spin;
  int bosons;

  friend bool operator==(const DiabaticLevel&, const DiabaticLevel&) = default;
};

struct CrossingRecord {
  double time = 0.0;
  double energy = 0.0;
  CrossingKind kind = CrossingKind::a3;
  std::vector<DiabaticLevel> levels;  // ordered plus, zero, minus
};

struct TimeWindow {
  double lo = -30.0;
  double hi = 30.0;
};

// Diabatic energy sigma * v * t + n * Omega.
double diabatic_energy(const DiabaticLevel& level, double t, const SystemParams& p,
                       const SingleModeCoupling& c);

// Crossings of the diabatic ladder inside the time window whose energy lies at or below
// n_max * Omega, sorted by (time, energy).  Group membership is decided on the full ladder
// (bounded below by the vacuum only), so records do not change when n_max grows.
std::vector<CrossingRecord> classify_crossings(const SystemParams& p, const SingleModeCoupling& c,
                                               int n_max, const TimeWindow& window);

// Minimal spacing between the adiabatic levels that emerge from a crossing group, searched over
// |t - record.time| <= half_width.  The group's levels are the record.levels.size() eigenvalues
// closest to the crossing energy.
struct GapMeasurement {
  double gap = 0.0;
  double time = 0.0;
};
GapMeasurement anticrossing_gap(const SystemParams& p, const SingleModeCoupling& c, int n_max,
                                const CrossingRecord& record, double half_width);

std::string diagram_csv(const EnergyDiagram& diagram);
std::string crossings_csv(const std::vector<CrossingRecord>& records);

}  // namespace bowtie
