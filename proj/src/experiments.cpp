#include "bowtie/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"
#include "bowtie/kernels.hpp"

namespace bowtie {

namespace {

std::string result_line(const std::string& key, const std::string& value) { return "result." + key + " = " + value + "\n"; }

std::string diagnostics_lines(const TrajectoryDiagnostics& d) {
  std::string out;
  out += result_line("steps", std::to_string(d.steps));
  out += result_line("max_norm_error", format_number(d.max_norm_error));
  out += result_line("final_norm_error", format_number(d.final_norm_error));
  out += result_line("max_condition", format_number(d.max_condition));
  out += result_line("ill_conditioned_solves", std::to_string(d.ill_conditioned_solves));
  out += result_line("regularization_escalations", std::to_string(d.regularization_escalations));
  out += result_line("refined_steps", std::to_string(d.refined_steps));
  return out;
}

std::string manifest_header(const std::string& command, bool oracle) {
  std::string out = "# bowtie manifest; feed back with --config to reproduce\n";
  out += result_line("command", command);
  out += result_line("version", kVersion);
  out += result_line("kernels", std::string(kernels::backend_name(kernels::active_backend())));
  out += result_line("oracle", oracle ? "true" : "false");
  return out;
}

void prepare(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
}

}  // namespace

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("write failed for '" + path.string() + "'");
}

int resolve_workers(std::optional<int> flag) {
  int w = 1;
  if (flag) {
    w = *flag;
  } else if (const char* env = std::getenv("BOWTIE_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0') throw ConfigError("BOWTIE_WORKERS must be an integer");
    w = static_cast<int>(v);
  }
  if (w < 1) throw ConfigError("worker count must be at least 1");
  return w;
}

std::vector<std::string> parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown failure";
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (count <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

RunResult execute_run(const RunConfig& c) {
  c.validate();
  RunResult r;
  r.trajectory = propagate(c.initial_state(), c.assembly(), c.propagation(), &r.final_state);
  return r;
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec, int workers) {
  spec.validate();
  std::vector<SweepPoint> points(spec.values.size());
  for (std::size_t i = 0; i < points.size(); ++i) points[i].value = spec.values[i];
  const auto errors = parallel_for(points.size(), workers, [&](std::size_t i) {
    points[i].trajectory = execute_run(spec.at(spec.values[i])).trajectory;
  });
  for (std::size_t i = 0; i < points.size(); ++i) points[i].error = errors[i];
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "param_value,t,P_plus,P_zero,P_minus\n";
  for (const auto& p : points) {
    if (!p.trajectory) continue;
    const Trajectory& tr = *p.trajectory;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      append_number(out, p.value);
      for (double x : {tr.times[i], tr.populations[i].plus, tr.populations[i].zero, tr.populations[i].minus}) {
        out += ',';
        append_number(out, x);
      }
      out += '\n';
    }
  }
  return out;
}

ConvergeReport run_converge(const ConvergeSpec& spec, int workers) {
  spec.validate();
  ConvergeReport report;
  report.labels = spec.values;
  report.trajectories.resize(spec.values.size());
  const auto errors = parallel_for(spec.values.size(), workers, [&](std::size_t i) {
    report.trajectories[i] = execute_run(spec.at(i)).trajectory;
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw NumericalError("converge point " + spec.scan + " = " + spec.values[i] + " failed: " + errors[i]);
    }
  }
  for (std::size_t a = 0; a < report.trajectories.size(); ++a) {
    for (std::size_t b = a + 1; b < report.trajectories.size(); ++b) {
      ConvergeReport::Pair p;
      p.a = a;
      p.b = b;
      const auto& ta = report.trajectories[a];
      const auto& tb = report.trajectories[b];
      p.per_spin = {max_population_deviation(ta, tb, Spin::plus), max_population_deviation(ta, tb, Spin::zero),
                    max_population_deviation(ta, tb, Spin::minus)};
      p.max_dev = std::max({p.per_spin.plus, p.per_spin.zero, p.per_spin.minus});
      report.pairs.push_back(p);
    }
  }
  return report;
}

std::string converge_csv(const ConvergeReport& report) {
  std::string out = "label_a,label_b,max_dev,max_dev_plus,max_dev_zero,max_dev_minus\n";
  for (const auto& p : report.pairs) {
    out += report.labels[p.a] + "," + report.labels[p.b];
    for (double x : {p.max_dev, p.per_spin.plus, p.per_spin.zero, p.per_spin.minus}) {
      out += ',';
      append_number(out, x);
    }
    out += '\n';
  }
  return out;
}

DiagramResult run_diagram(const RunConfig& c, const DiagramSpec& d) {
  if (c.coupling != CouplingKind::single) throw ConfigError("diagram needs coupling.type = single");
  DiagramResult r;
  r.diagram = energy_diagram(c.model, c.single, d.n_max, TimeGrid{d.window.lo, d.window.hi, d.sample_dt});
  r.crossings = classify_crossings(c.model, c.single, d.n_max, d.window);
  // The gap search needs the crossing's levels inside the truncated basis; one extra boson level
  // keeps the top-most groups from being clipped.
  for (const auto& rec : r.crossings) {
    if (is_allowed(rec.kind)) r.gaps.push_back(anticrossing_gap(c.model, c.single, d.n_max + 1, rec, d.gap_half_width));
  }
  return r;
}

std::string gaps_csv(const DiagramResult& r) {
  std::string out = "t,E,kind,gap,t_min\n";
  std::size_t g = 0;
  for (const auto& rec : r.crossings) {
    if (!is_allowed(rec.kind)) continue;
    append_number(out, rec.time);
    out += ',';
    append_number(out, rec.energy);
    out += ',';
    out += to_string(rec.kind);
    out += ',';
    append_number(out, r.gaps[g].gap);
    out += ',';
    append_number(out, r.gaps[g].time);
    out += '\n';
    ++g;
  }
  return out;
}

Trajectory run_fock_oracle(const RunConfig& c, const OracleSpec& o) {
  c.validate();
  if (c.coupling == CouplingKind::bath) throw ConfigError("the Fock oracle needs coupling.type = single or none");
  const double ratio = c.grid.dt * c.record_every / o.dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
    throw ConfigError("grid.dt * grid.record_every must be a whole multiple of oracle.dt");
  }
  FockOptions fo;
  fo.record_every = static_cast<int>(stride);
  fo.record_occupations = c.record_occupations && c.coupling == CouplingKind::single;
  const TimeGrid grid{c.grid.t0, c.grid.t1, o.dt};
  if (c.coupling == CouplingKind::none) return fock_propagate_modes(c.model, {}, {}, {}, c.init, grid, fo);
  return fock_propagate(c.model, c.single, o.n_max, c.init, grid, fo);
}

std::string asymptotics_csv(const SystemParams& p, const OracleSpec& o) {
  std::string out = "spin,P_plus,P_zero,P_minus,plateau_variation\n";
  for (Spin s : kSpins) {
    const AsymptoticResult r = bare_asymptotics(p, s, o.horizon, o.dt);
    out += to_string(s);
    for (double x : {r.final.plus, r.final.zero, r.final.minus, r.plateau_variation}) {
      out += ',';
      append_number(out, x);
    }
    out += '\n';
  }
  return out;
}

void cmd_run(const RunConfig& c, const std::filesystem::path& out) {
  prepare(out);
  std::string manifest = manifest_header("run", false) + to_text(c);
  if (c.coupling == CouplingKind::bath) write_file(out / "bath.csv", bath_csv(discretize(c.bath)));
  try {
    const RunResult r = execute_run(c);
    write_file(out / "trajectory.csv", trajectory_csv(r.trajectory));
    write_file(out / "final_state.txt", serialize(r.final_state));
    manifest += result_line("status", "ok") + diagnostics_lines(r.trajectory.diagnostics);
    write_file(out / "manifest.txt", manifest);
  } catch (const NumericalError& e) {
    manifest += result_line("status", "failed") + result_line("error", e.what());
    write_file(out / "manifest.txt", manifest);
    throw;
  }
}

std::size_t cmd_sweep(const SweepSpec& spec, const std::filesystem::path& out, int workers) {
  prepare(out);
  const auto points = run_sweep(spec, workers);
  write_file(out / "sweep.csv", sweep_csv(points));
  std::string manifest = manifest_header("sweep", false) + to_text(spec.base);
  manifest += "sweep.parameter = " + spec.parameter + "\n";
  std::string values;
  for (std::size_t i = 0; i < spec.values.size(); ++i) values += (i ? ", " : "") + format_number(spec.values[i]);
  manifest += "sweep.values = " + values + "\n";
  std::size_t failures = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string key = "point" + std::to_string(i);
    if (points[i].error.empty()) {
      manifest += result_line(key + ".status", "ok");
      manifest += result_line(key + ".max_norm_error", format_number(points[i].trajectory->diagnostics.max_norm_error));
    } else {
      ++failures;
      manifest += result_line(key + ".status", "failed");
      manifest += result_line(key + ".error", points[i].error);
    }
  }
  manifest += result_line("failures", std::to_string(failures));
  write_file(out / "manifest.txt", manifest);
  return failures;
}

void cmd_diagram(const RunConfig& c, const DiagramSpec& d, const std::filesystem::path& out) {
  prepare(out);
  const DiagramResult r = run_diagram(c, d);
  write_file(out / "diagram.csv", diagram_csv(r.diagram));
  write_file(out / "crossings.csv", crossings_csv(r.crossings));
  write_file(out / "gaps.csv", gaps_csv(r));
  std::string manifest = manifest_header("diagram", false) + to_text(c);
  manifest += "diagram.n_max = " + std::to_string(d.n_max) + "\n";
  manifest += "diagram.t0 = " + format_number(d.window.lo) + "\n";
  manifest += "diagram.t1 = " + format_number(d.window.hi) + "\n";
  manifest += "diagram.dt = " + format_number(d.sample_dt) + "\n";
  manifest += "diagram.gap_half_width = " + format_number(d.gap_half_width) + "\n";
  manifest += result_line("crossings", std::to_string(r.crossings.size()));
  write_file(out / "manifest.txt", manifest);
}

void cmd_converge(const ConvergeSpec& spec, const std::filesystem::path& out, int workers) {
  prepare(out);
  const ConvergeReport report = run_converge(spec, workers);
  write_file(out / "converge.csv", converge_csv(report));
  for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
    write_file(out / ("trajectory_" + std::to_string(i) + ".csv"), trajectory_csv(report.trajectories[i]));
  }
  std::string manifest = manifest_header("converge", false) + to_text(spec.base);
  manifest += "converge.scan = " + spec.scan + "\n";
  std::string values;
  for (std::size_t i = 0; i < spec.values.size(); ++i) values += (i ? ", " : "") + spec.values[i];
  manifest += "converge.values = " + values + "\n";
  for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
    manifest += result_line("trajectory_" + std::to_string(i), spec.values[i]);
  }
  write_file(out / "manifest.txt", manifest);
}

void cmd_oracle(const RunConfig& c, const OracleSpec& o, const std::filesystem::path& out) {
  prepare(out);
  std::string manifest = manifest_header("oracle", true) + to_text(c);
  manifest += std::string("oracle.kind = ") + (o.kind == OracleKind::fock ? "fock" : "bare") + "\n";
  manifest += "oracle.n_max = " + std::to_string(o.n_max) + "\n";
  manifest += "oracle.dt = " + format_number(o.dt) + "\n";
  manifest += "oracle.horizon = " + format_number(o.horizon) + "\n";
  if (o.kind == OracleKind::fock) {
    const Trajectory tr = run_fock_oracle(c, o);
    write_file(out / "trajectory.csv", trajectory_csv(tr));
    manifest += diagnostics_lines(tr.diagnostics);
  } else {
    write_file(out / "asymptotics.csv", asymptotics_csv(c.model, o));
  }
  write_file(out / "manifest.txt", manifest);
}

}  // namespace bowtie
