// End-to-end acceptance checks.  Runs every configuration once, then prints one PASS/FAIL line
// per criterion.  Exit status is 0 only when all criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bowtie/config.hpp"
#include "bowtie/experiments.hpp"
#include "bowtie/kernels.hpp"

using namespace bowtie;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string num(double x) {
  std::ostringstream o;
  o << x;
  return o.str();
}

// Config text for the single-mode runs; defaults give v = 1, M = 8, dt = 1e-3, window [-30, 30].
std::string single(double lambda, double delta, double omega, const char* spin, int m = 8) {
  return "model.delta = " + num(delta) + "\ncoupling.lambda = " + num(lambda) + "\ncoupling.omega_mode = " + num(omega) +
         "\ninit.spin = " + spin + "\nansatz.multiplicity = " + std::to_string(m) + "\n";
}

// Bath runs; defaults give omega_c = 10, window [-10, 50], M = 4, N = 40, dt = 1e-3.
struct Bath {
  double delta = 0.1, alpha = 0.002, s = 1.0, omega_max = 50.0;
  int n = 40, m = 4;
  const char* scheme = "density";

  std::string text() const {
    return "coupling.type = bath\nmodel.delta = " + num(delta) + "\nbath.alpha = " + num(alpha) + "\nbath.s = " + num(s) +
           "\nbath.omega_max = " + num(omega_max) + "\nbath.n_modes = " + std::to_string(n) +
           "\nbath.scheme = " + scheme + "\nansatz.multiplicity = " + std::to_string(m) + "\n";
  }
};

struct Outcome {
  std::optional<Trajectory> trajectory;
  std::string error;
  double seconds = 0.0;
};

class Runs {
 public:
  // Registers a configuration and returns its key; duplicates collapse onto one run.
  std::string add(const std::string& label, const std::string& text) {
    const std::string key = to_text(parse_run_config(KeyValues::parse(text, label)));
    if (!index_.count(key)) {
      index_[key] = order_.size();
      order_.push_back({label, key});
    }
    return key;
  }

  void execute(int workers, const std::optional<std::filesystem::path>& out) {
    outcomes_.resize(order_.size());
    std::mutex log;
    const auto started = std::chrono::steady_clock::now();
    parallel_for(order_.size(), workers, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      Outcome& o = outcomes_[i];
      try {
        o.trajectory = execute_run(parse_run_config(KeyValues::parse(order_[i].second, order_[i].first))).trajectory;
        if (out) write_file(*out / (order_[i].first + ".csv"), trajectory_csv(*o.trajectory));
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::lock_guard<std::mutex> lock(log);
      std::cerr << "  [" << fmt(total) << " s] " << order_[i].first << ": "
                << (o.error.empty() ? "max norm error " + fmt(o.trajectory->diagnostics.max_norm_error) : o.error)
                << " (" << fmt(o.seconds) << " s)\n";
    });
  }

  const Outcome& operator[](const std::string& key) const { return outcomes_.at(index_.at(key)); }
  std::size_t size() const { return order_.size(); }
  const std::string& label(const std::string& key) const { return order_.at(index_.at(key)).first; }
  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    for (const auto& [label, key] : order_) k.push_back(key);
    return k;
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, std::string>> order_;
  std::vector<Outcome> outcomes_;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Fetches trajectories or turns the first failure into a verdict.
struct Need {
  const Runs& runs;
  std::string missing;
  const Trajectory* operator()(const std::string& key) {
    const Outcome& o = runs[key];
    if (!o.trajectory) {
      if (missing.empty()) missing = runs.label(key) + " failed: " + o.error;
      return nullptr;
    }
    return &*o.trajectory;
  }
};

double max_dev_before(const Trajectory& a, const Trajectory& b, double t_limit) {
  double d = 0.0;
  for (Spin sp : kSpins) d = std::max(d, max_population_deviation(a, b, sp, t_limit));
  return d;
}

// Population sum against an independent double sum for <D|D>, checked at every recorded step.
double simplex_defect(const RunConfig& c, double* worst_bound) {
  const ModelAssembly model = c.assembly();
  MultiD2State s = c.initial_state();
  double worst = 0.0;
  const long steps = c.grid.steps();
  for (long i = 0; i <= steps; ++i) {
    if (i % c.record_every == 0 || i == steps) {
      const OverlapMatrix o = overlap_matrix(s);
      const Populations p = populations(s, o);
      cplx direct = 0.0;
      for (int a = 0; a < s.multiplicity(); ++a) {
        for (int b = 0; b < s.multiplicity(); ++b) direct += s.amplitudes.row(a).dot(s.amplitudes.row(b)) * o(a, b);
      }
      worst = std::max(worst, std::abs(p.sum() - direct.real()));
      for (Spin sp : kSpins) *worst_bound = std::max({*worst_bound, -p[sp], p[sp] - 1.0});
    }
    if (i < steps) s = rk4_step(s, c.grid.time(i), c.grid.dt, model, c.solver);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bowtie acceptance checks"};
  std::optional<int> workers_flag;
  std::optional<std::string> out_dir;
  app.add_option("--workers", workers_flag, "worker threads (default: BOWTIE_WORKERS or 1)");
  app.add_option("--out", out_dir, "write every trajectory as CSV into this directory");
  CLI11_PARSE(app, argc, argv);
  const int workers = resolve_workers(workers_flag);
  std::optional<std::filesystem::path> out;
  if (out_dir) {
    out = *out_dir;
    std::filesystem::create_directories(*out);
  }

  Runs runs;
  std::vector<std::string> figure_runs;  // the figure parameter sets, for the norm criterion
  auto figure = [&](const std::string& label, const std::string& text) {
    const std::string key = runs.add(label, text);
    if (std::find(figure_runs.begin(), figure_runs.end(), key) == figure_runs.end()) figure_runs.push_back(key);
    return key;
  };

  std::map<std::string, std::string> fig2;
  for (const char* spin : {"plus", "zero", "minus"}) fig2[spin] = figure(std::string("single_") + spin, single(0.1, 0.1, 10.0, spin));
  for (double lambda : {0.0, 0.1, 0.2, 0.3, 0.4}) figure("single_lambda" + num(lambda), single(lambda, 0.1, 10.0, "plus"));
  for (double delta : {0.0, 0.1, 0.2, 0.3, 0.4}) figure("single_delta" + num(delta), single(0.1, delta, 10.0, "plus"));
  for (double omega : {0.0, 2.0, 4.0, 6.0, 8.0, 10.0}) figure("single_omega" + num(omega), single(0.1, 0.1, omega, "zero"));
  const std::string m10 = runs.add("single_minus_m10", single(0.1, 0.1, 10.0, "minus", 10));

  for (double delta : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    Bath b;
    b.delta = delta;
    figure("bath_delta" + num(delta), b.text());
  }
  std::vector<std::string> by_alpha, by_s;
  for (double alpha : {0.002, 0.004, 0.006, 0.008, 0.01}) {
    Bath b;
    b.alpha = alpha;
    by_alpha.push_back(figure("bath_alpha" + num(alpha), b.text()));
  }
  for (double s : {0.5, 0.75, 1.0, 1.25, 1.5, 1.75}) {
    Bath b;
    b.s = s;
    by_s.push_back(figure("bath_s" + num(s), b.text()));
  }
  std::vector<std::string> by_n;
  for (int n : {40, 60, 80}) {
    Bath b;
    b.s = 0.5;
    b.n = n;
    by_n.push_back(runs.add("bath_s0.5_n" + std::to_string(n), b.text()));
  }
  Bath ohmic;
  const std::string density40 = runs.add("bath_ohmic", ohmic.text());
  Bath m3 = ohmic, m5 = ohmic, wm30 = ohmic, lin40 = ohmic, lin80 = ohmic;
  m3.m = 3;
  m5.m = 5;
  wm30.omega_max = 30.0;
  lin40.scheme = lin80.scheme = "linear";
  lin80.n = 80;
  const std::string k_m3 = runs.add("bath_m3", m3.text());
  const std::string k_m5 = runs.add("bath_m5", m5.text());
  const std::string k_wm30 = runs.add("bath_wm30", wm30.text());
  const std::string k_lin40 = runs.add("bath_linear40", lin40.text());
  const std::string k_lin80 = runs.add("bath_linear80", lin80.text());

  std::cerr << "kernels: " << kernels::backend_name(kernels::active_backend()) << ", workers: " << workers << ", "
            << runs.size() << " trajectories\n";
  runs.execute(workers, out);

  std::vector<std::pair<std::string, Verdict>> verdicts;
  auto judge = [&](const std::string& name, auto&& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    verdicts.emplace_back(name, v);
  };

  judge("norm-conservation", [&]() -> Verdict {
    double worst = 0.0;
    std::string where;
    int over = 0;
    std::string failed;
    for (const auto& key : figure_runs) {
      const Outcome& o = runs[key];
      if (!o.trajectory) {
        failed += " " + runs.label(key);
        continue;
      }
      const double e = o.trajectory->diagnostics.max_norm_error;
      if (e > 1e-6) ++over;
      if (e > worst) {
        worst = e;
        where = runs.label(key);
      }
    }
    std::string d = "max |<D|D>-1| = " + fmt(worst) + " (" + where + "), " + std::to_string(over) + " of " +
                    std::to_string(figure_runs.size()) + " runs above 1e-6";
    if (!failed.empty()) d += "; failed runs:" + failed;
    return {over == 0 && failed.empty(), d};
  });

  judge("simplex-identity", [&]() -> Verdict {
    double bound = -1.0;
    for (const auto& key : runs.keys()) {
      const Outcome& o = runs[key];
      if (!o.trajectory) continue;
      for (const Populations& p : o.trajectory->populations) {
        for (Spin sp : kSpins) bound = std::max({bound, -p[sp], p[sp] - 1.0});
      }
    }
    double defect = 0.0;
    for (const char* spin : {"plus", "zero", "minus"}) {
      defect = std::max(defect, simplex_defect(parse_run_config(KeyValues::parse(single(0.1, 0.1, 10.0, spin))), &bound));
    }
    Bath b;
    RunConfig bath = parse_run_config(KeyValues::parse(b.text()));
    bath.grid.t1 = 0.0;
    defect = std::max(defect, simplex_defect(bath, &bound));
    return {defect <= 1e-13 && bound <= 1e-8,
            "max |sum P - <D|D>| = " + fmt(defect) + ", worst excursion outside [0,1] = " + fmt(std::max(bound, 0.0))};
  });

  judge("oracle-equivalence", [&]() -> Verdict {
    Need need{runs};
    double worst = 0.0;
    std::string d;
    for (const char* spin : {"plus", "zero", "minus"}) {
      const Trajectory* engine = need(fig2[spin]);
      if (!engine) return {false, need.missing};
      RunConfig c = parse_run_config(KeyValues::parse(single(0.1, 0.1, 10.0, spin)));
      OracleSpec o;
      o.kind = OracleKind::fock;
      o.n_max = 20;
      o.dt = c.grid.dt / 10.0;
      const double dev = max_population_deviation(*engine, run_fock_oracle(c, o));
      worst = std::max(worst, dev);
      d += std::string(d.empty() ? "" : ", ") + spin + " " + fmt(dev);
    }
    return {worst <= 0.01, "max deviation vs Fock (n_max 20): " + d};
  });

  judge("multiplicity-single-mode", [&]() -> Verdict {
    Need need{runs};
    const Trajectory* a = need(fig2["minus"]);
    const Trajectory* b = need(m10);
    if (!a || !b) return {false, need.missing};
    const double dev = max_population_deviation(*a, *b, Spin::plus);
    return {dev <= 0.01, "max |P+(M=8) - P+(M=10)| = " + fmt(dev)};
  });

  judge("bare-symmetry", [&]() -> Verdict {
    RunConfig c = parse_run_config(KeyValues::parse(
        "coupling.type = none\nmodel.delta = 0.1\nansatz.multiplicity = 1\nansatz.noise = 0\ninit.spin = zero\n"
        "grid.record_every = 1\n"));
    const Trajectory tr = execute_run(c).trajectory;
    double worst = 0.0;
    for (const Populations& p : tr.populations) worst = std::max(worst, std::abs(p.plus - p.minus));
    return {worst <= 1e-8, "max |P+ - P-| = " + fmt(worst) + " over " + std::to_string(tr.size()) + " steps"};
  });

  judge("bath-mode-count", [&]() -> Verdict {
    Need need{runs};
    std::vector<const Trajectory*> t;
    for (const auto& k : by_n) t.push_back(need(k));
    if (!need.missing.empty()) return {false, need.missing};
    const double d1 = max_population_deviation(*t[0], *t[1]), d2 = max_population_deviation(*t[0], *t[2]),
                 d3 = max_population_deviation(*t[1], *t[2]);
    return {std::max({d1, d2, d3}) <= 0.02,
            "N 40/60 " + fmt(d1) + ", 40/80 " + fmt(d2) + ", 60/80 " + fmt(d3)};
  });

  judge("bath-multiplicity", [&]() -> Verdict {
    Need need{runs};
    const Trajectory* a = need(k_m3);
    const Trajectory* b = need(k_m5);
    if (!a || !b) return {false, need.missing};
    const double dev = max_population_deviation(*a, *b);
    return {dev <= 0.02, "M 3/5 max deviation " + fmt(dev)};
  });

  judge("horizon-rule", [&]() -> Verdict {
    Need need{runs};
    const Trajectory* a = need(k_wm30);
    const Trajectory* b = need(density40);
    if (!a || !b) return {false, need.missing};
    const double dev = max_dev_before(*a, *b, 30.0 - 1e-9);
    return {dev <= 0.02, "omega_max 30 vs 50, t < 30: max deviation " + fmt(dev)};
  });

  judge("discretization-benchmark", [&]() -> Verdict {
    Need need{runs};
    const Trajectory* d = need(density40);
    const Trajectory* l40 = need(k_lin40);
    const Trajectory* l80 = need(k_lin80);
    if (!d || !l40 || !l80) return {false, need.missing};
    const double close = max_population_deviation(*d, *l80), far = max_population_deviation(*d, *l40);
    return {close <= 0.02 && far > 0.02, "density 40 vs linear 80 " + fmt(close) + ", vs linear 40 " + fmt(far)};
  });

  auto monotone = [&](const std::vector<std::string>& keys, const std::vector<double>& xs, const std::string& name,
                      std::size_t first, std::size_t last) -> Verdict {
    Need need{runs};
    std::vector<double> tails;
    for (const auto& k : keys) {
      const Trajectory* t = need(k);
      if (!t) return {false, need.missing};
      tails.push_back(tail_average(*t, Spin::minus));
    }
    bool ok = true;
    std::string d = "P-(tail):";
    for (std::size_t i = first; i <= last; ++i) {
      d += " " + name + "=" + num(xs[i]) + ":" + fmt(tails[i]);
      if (i > first && !(tails[i] > tails[i - 1])) ok = false;
    }
    return {ok, d};
  };

  judge("alpha-trend", [&] { return monotone(by_alpha, {0.002, 0.004, 0.006, 0.008, 0.01}, "alpha", 0, 4); });

  judge("spectral-trend", [&]() -> Verdict {
    const std::vector<double> xs{0.5, 0.75, 1.0, 1.25, 1.5, 1.75};
    const Verdict sub = monotone(by_s, xs, "s", 0, 2), super = monotone(by_s, xs, "s", 2, 4);
    return {sub.pass && super.pass, sub.detail + " |" + super.detail.substr(super.detail.find(':') + 1)};
  });

  judge("crossing-taxonomy", [&]() -> Verdict {
    auto at = [](const CrossingRecord& r, double t, double e) {
      return std::abs(r.time - t) < 1e-9 && std::abs(r.energy - e) < 1e-9;
    };
    std::vector<double> gaps;
    int a3_origin = 0, a2_minus = 0, a2_plus = 0;
    for (double delta : {0.05, 0.1, 0.2}) {
      const RunConfig c = parse_run_config(KeyValues::parse(single(0.1, delta, 10.0, "plus")));
      const DiagramResult r = run_diagram(c, parse_diagram_spec(KeyValues::parse(""), c));
      std::size_t allowed = 0;
      for (const CrossingRecord& rec : r.crossings) {
        if (!is_allowed(rec.kind)) continue;
        const GapMeasurement& g = r.gaps.at(allowed++);
        if (rec.kind == CrossingKind::a3 && at(rec, 0.0, 0.0)) {
          gaps.push_back(g.gap);
          if (delta == 0.1) ++a3_origin;
        }
        if (delta == 0.1 && rec.kind == CrossingKind::a2 && at(rec, -10.0, 0.0)) ++a2_minus;
        if (delta == 0.1 && rec.kind == CrossingKind::a2 && at(rec, 10.0, 0.0)) ++a2_plus;
      }
    }
    if (gaps.size() != 3) return {false, "a3 gap at the origin not found for every delta"};
    const double r1 = gaps[1] / gaps[0], r2 = gaps[2] / gaps[1];
    const bool linear = std::abs(r1 / 2.0 - 1.0) <= 0.02 && std::abs(r2 / 2.0 - 1.0) <= 0.02;
    return {a3_origin == 1 && a2_minus >= 1 && a2_plus >= 1 && linear,
            "a3 at (0,0): " + std::to_string(a3_origin) + ", a2 at t=-10/+10: " + std::to_string(a2_minus) + "/" +
                std::to_string(a2_plus) + ", gap ratios " + fmt(r1) + ", " + fmt(r2)};
  });

  judge("rk4-order", [&]() -> Verdict {
    // Start-up transient of the noise branches removed first; then dt, dt/2, dt/4 on [-5, 5].
    RunConfig c = parse_run_config(KeyValues::parse(single(0.1, 0.1, 10.0, "plus")));
    const ModelAssembly model = c.assembly();
    PropagationOptions pre = c.propagation();
    pre.grid = {-30.0, -5.0, 1e-3};
    pre.record_every = 1 << 20;
    pre.step_norm_tolerance = 0.0;  // fixed-step throughout, as in the unit test
    MultiD2State start;
    propagate(c.initial_state(), model, pre, &start);
    std::vector<Trajectory> t;
    for (int h = 0; h < 3; ++h) {
      PropagationOptions o = c.propagation();
      o.grid = {-5.0, 5.0, 0.01 / (1 << h)};
      o.record_every = 10 << h;
      o.max_norm_error = 1.0;
      o.step_norm_tolerance = 0.0;
      t.push_back(propagate(start, model, o));
    }
    const double e1 = max_population_deviation(t[0], t[1]), e2 = max_population_deviation(t[1], t[2]);
    const double ratio = e1 / e2;
    return {ratio >= 12.0 && ratio <= 20.0,
            "differences " + fmt(e1) + " -> " + fmt(e2) + ", reduction factor " + fmt(ratio)};
  });

  int failed = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& [name, v] = verdicts[i];
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS " : "FAIL ") << i + 1 << " " << name << ": " << v.detail << "\n";
  }
  std::cout << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
