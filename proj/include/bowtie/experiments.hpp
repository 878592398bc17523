#pragma once
// Batch drivers behind the command-line tool.  Each cmd_* writes its CSV files and a
// `manifest.txt` (resolved parameters as config text plus result.* lines) into the output
// directory; the manifest can be fed back as a config.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bowtie/config.hpp"
#include "bowtie/oracle.hpp"
#include "bowtie/trajectory.hpp"

namespace bowtie {

inline constexpr const char* kVersion = "0.1.0";

// --workers value, else BOWTIE_WORKERS, else 1.
int resolve_workers(std::optional<int> flag);

// Runs fn(i) for i in [0, n) on up to `workers` threads.  Exceptions are captured per index.
std::vector<std::string> parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct RunResult {
  Trajectory trajectory;
  MultiD2State final_state;
};
RunResult execute_run(const RunConfig& c);

struct SweepPoint {
  double value = 0.0;
  std::optional<Trajectory> trajectory;
  std::string error;
};
std::vector<SweepPoint> run_sweep(const SweepSpec& spec, int workers);
// Long format param_value,t,P_plus,P_zero,P_minus; failed points are skipped.
std::string sweep_csv(const std::vector<SweepPoint>& points);

struct ConvergeReport {
  std::vector<std::string> labels;
  std::vector<Trajectory> trajectories;
  struct Pair {
    std::size_t a = 0, b = 0;
    double max_dev = 0.0;
    Populations per_spin;  // max |difference| per population
  };
  std::vector<Pair> pairs;
};
ConvergeReport run_converge(const ConvergeSpec& spec, int workers);
// label_a,label_b,max_dev,max_dev_plus,max_dev_zero,max_dev_minus
std::string converge_csv(const ConvergeReport& report);

struct DiagramResult {
  EnergyDiagram diagram;
  std::vector<CrossingRecord> crossings;
  std::vector<GapMeasurement> gaps;  // one per allowed record, in record order
};
DiagramResult run_diagram(const RunConfig& c, const DiagramSpec& d);
// t,E,kind,gap,t_min for every anti-crossing
std::string gaps_csv(const DiagramResult& r);

// Oracle trajectory on the config's time grid, sampled at the same times as the engine would be.
Trajectory run_fock_oracle(const RunConfig& c, const OracleSpec& o);
// spin,P_plus,P_zero,P_minus,plateau_variation for the three initial states
std::string asymptotics_csv(const SystemParams& p, const OracleSpec& o);

void cmd_run(const RunConfig& c, const std::filesystem::path& out);
// Returns the number of failed points (the others are still written).
std::size_t cmd_sweep(const SweepSpec& spec, const std::filesystem::path& out, int workers);
void cmd_diagram(const RunConfig& c, const DiagramSpec& d, const std::filesystem::path& out);
void cmd_converge(const ConvergeSpec& spec, const std::filesystem::path& out, int workers);
void cmd_oracle(const RunConfig& c, const OracleSpec& o, const std::filesystem::path& out);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bowtie
