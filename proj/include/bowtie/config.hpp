#pragma once
// Flat key = value configuration with dotted sections and '#' comments, e.g.
//
//   model.delta = 0.1
//   coupling.type = bath     # none | single | bath
//   bath.alpha = 0.004
//
// Every parser error is a ConfigError that names the offending key (and line, when known).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bowtie/bath.hpp"
#include "bowtie/dynamics.hpp"
#include "bowtie/model.hpp"

namespace bowtie {

class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "config");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::pair<std::string, int>>& entries() const { return entries_; }

  std::optional<std::string> text(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  std::optional<long long> integer(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::vector<std::string>> list(const std::string& key) const;
  std::optional<std::vector<double>> numbers(const std::string& key) const;

  // Rejects keys that are neither in `known` nor under one of the ignored prefixes.
  void check_known(const std::vector<std::string>& known, const std::vector<std::string>& ignored_prefixes) const;

 private:
  std::string where(const std::string& key) const;
  std::string origin_;
  std::map<std::string, std::pair<std::string, int>> entries_;  // value, line
};

enum class CouplingKind { none, single, bath };
std::string_view to_string(CouplingKind k);

struct RunConfig {
  SystemParams model;
  CouplingKind coupling = CouplingKind::single;
  SingleModeCoupling single;
  BathParams bath;
  int multiplicity = 8;
  double noise = 1e-2;
  std::uint64_t seed = 7;
  TimeGrid grid;
  int record_every = 100;
  // Per-step norm change above which a step is split (see PropagationOptions); 0 = fixed step.
  double norm_tolerance = 1e-10;
  Spin init = Spin::plus;
  std::string init_state_file;  // optional snapshot that replaces the generated initial state
  bool record_occupations = false;
  SolverOptions solver;

  void validate() const;
  ModelAssembly assembly() const;
  MultiD2State initial_state() const;
  PropagationOptions propagation() const;
};

// Coupling-dependent defaults (M = 4 and window [-10, 50] for a bath) apply when the key is absent.
RunConfig parse_run_config(const KeyValues& kv);
// Resolved parameters in the same key = value form; parse_run_config(to_text(c)) == c.
std::string to_text(const RunConfig& c);

struct SweepSpec {
  std::string parameter;  // lambda | delta | omega_mode | alpha | s
  std::vector<double> values;
  RunConfig base;

  void validate() const;
  RunConfig at(double value) const;
};
SweepSpec parse_sweep_spec(const KeyValues& kv);

// Scan values are integers for multiplicity / n_modes, frequencies for omega_max and
// "scheme:N" tokens (e.g. density:40) for scheme.
struct ConvergeSpec {
  std::string scan;  // multiplicity | n_modes | omega_max | scheme
  std::vector<std::string> values;
  RunConfig base;

  void validate() const;
  RunConfig at(std::size_t i) const;
};
ConvergeSpec parse_converge_spec(const KeyValues& kv);

struct DiagramSpec {
  int n_max = 4;
  TimeWindow window;
  double sample_dt = 0.01;
  // Half-width of the search window used for each anti-crossing gap.
  double gap_half_width = 2.0;
};
DiagramSpec parse_diagram_spec(const KeyValues& kv, const RunConfig& base);

enum class OracleKind { fock, bare };
struct OracleSpec {
  OracleKind kind = OracleKind::fock;
  int n_max = 20;
  double dt = 1e-4;
  double horizon = 200.0;
};
OracleSpec parse_oracle_spec(const KeyValues& kv);

}  // namespace bowtie
