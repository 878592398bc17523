#pragma once

#include <string>
#include <vector>

#include "bowtie/state.hpp"

namespace bowtie {

struct TrajectoryDiagnostics {
  long steps = 0;
  double max_norm_error = 0.0;
  double final_norm_error = 0.0;
  double max_condition = 0.0;
  long ill_conditioned_solves = 0;
  long regularization_escalations = 0;
  long refined_steps = 0;  // steps (at any level) that were split in two
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Populations> populations;
  std::vector<double> norm_error;  // |<D|D> - 1|
  // Empty unless occupations were requested; otherwise one K-vector per recorded time.
  std::vector<std::vector<double>> mode_occupations;
  TrajectoryDiagnostics diagnostics;

  std::size_t size() const { return times.size(); }
};

// Header t,P_plus,P_zero,P_minus,norm_err[,n_occ_1..n_occ_K]; 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);

// Max over recorded samples of |a - b| for every population column; times must coincide.
double max_population_deviation(const Trajectory& a, const Trajectory& b);
// Same, restricted to one spin and to samples with t <= t_limit.
double max_population_deviation(const Trajectory& a, const Trajectory& b, Spin spin,
                                double t_limit = 1e300);

// Average of the requested population over the final `fraction` of the recorded window.
double tail_average(const Trajectory& traj, Spin spin, double fraction = 0.1);

}  // namespace bowtie
