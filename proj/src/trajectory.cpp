#include "bowtie/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"

namespace bowtie {

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,P_plus,P_zero,P_minus,norm_err";
  const std::size_t k_count = traj.mode_occupations.empty() ? 0 : traj.mode_occupations.front().size();
  for (std::size_t k = 0; k < k_count; ++k) out += ",n_occ_" + std::to_string(k + 1);
  out += '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    append_number(out, traj.times[i]);
    for (double x : {traj.populations[i].plus, traj.populations[i].zero, traj.populations[i].minus,
                     traj.norm_error[i]}) {
      out += ',';
      append_number(out, x);
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      out += ',';
      append_number(out, traj.mode_occupations[i][k]);
    }
    out += '\n';
  }
  return out;
}

namespace {

void check_aligned(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw NumericalError("trajectories have different sample counts");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i]))) {
      throw NumericalError("trajectories are sampled at different times");
    }
  }
}

}  // namespace

double max_population_deviation(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (Spin s : kSpins) worst = std::max(worst, max_population_deviation(a, b, s));
  return worst;
}

double max_population_deviation(const Trajectory& a, const Trajectory& b, Spin spin, double t_limit) {
  check_aligned(a, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.times[i] > t_limit) break;
    worst = std::max(worst, std::abs(a.populations[i][spin] - b.populations[i][spin]));
  }
  return worst;
}

double tail_average(const Trajectory& traj, Spin spin, double fraction) {
  if (traj.size() == 0) throw NumericalError("empty trajectory");
  const double t_end = traj.times.back();
  const double t_start = t_end - fraction * (t_end - traj.times.front());
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] >= t_start) {
      sum += traj.populations[i][spin];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace bowtie
