#include "bowtie/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bowtie/csv.hpp"
#include "bowtie/errors.hpp"

namespace bowtie {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(x)) return std::nullopt;
  return x;
}

const std::vector<std::string> kRunKeys = {
    "model.v",          "model.delta",       "model.unit_freq",    "coupling.type",
    "coupling.lambda",  "coupling.omega_mode", "bath.alpha",       "bath.s",
    "bath.omega_c",     "bath.omega_max",    "bath.n_modes",       "bath.scheme",
    "ansatz.multiplicity", "ansatz.noise",   "ansatz.seed",        "grid.t0",
    "grid.t1",          "grid.dt",           "grid.record_every",  "grid.norm_tolerance", "init.spin",
    "init.state_file",  "output.occupations", "solver.method",     "solver.regularization",
    "solver.max_regularization", "solver.residual_tolerance", "solver.mode_subspace"};

// Sections owned by the other commands and by manifests; ignored by the run parser.
const std::vector<std::string> kForeignPrefixes = {"sweep.", "converge.", "diagram.", "oracle.", "result."};

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (kv.entries_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.entries_[key] = {value, line_no};
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string KeyValues::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.second == 0) return "'" + key + "'";
  return "'" + key + "' (" + origin_ + ":" + std::to_string(it->second.second) + ")";
}

std::optional<std::string> KeyValues::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.first;
}

std::optional<double> KeyValues::number(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  const auto x = to_double(*t);
  if (!x) throw ConfigError(where(key) + " must be a finite number, got '" + *t + "'");
  return x;
}

std::optional<long long> KeyValues::integer(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  long long x = 0;
  const auto res = std::from_chars(t->data(), t->data() + t->size(), x);
  if (res.ec != std::errc{} || res.ptr != t->data() + t->size()) {
    throw ConfigError(where(key) + " must be an integer, got '" + *t + "'");
  }
  return x;
}

std::optional<bool> KeyValues::boolean(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  if (*t == "true" || *t == "1" || *t == "yes") return true;
  if (*t == "false" || *t == "0" || *t == "no") return false;
  throw ConfigError(where(key) + " must be true or false, got '" + *t + "'");
}

std::optional<std::vector<std::string>> KeyValues::list(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  return split_list(*t);
}

std::optional<std::vector<double>> KeyValues::numbers(const std::string& key) const {
  const auto items = list(key);
  if (!items) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : *items) {
    const auto x = to_double(item);
    if (!x) throw ConfigError(where(key) + " must list finite numbers, got '" + item + "'");
    out.push_back(*x);
  }
  return out;
}

void KeyValues::check_known(const std::vector<std::string>& known,
                            const std::vector<std::string>& ignored_prefixes) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    const bool ignored = std::any_of(ignored_prefixes.begin(), ignored_prefixes.end(),
                                     [&](const std::string& p) { return key.rfind(p, 0) == 0; });
    if (!ignored) throw ConfigError("unknown key " + where(key));
  }
}

std::string_view to_string(CouplingKind k) {
  switch (k) {
    case CouplingKind::none: return "none";
    case CouplingKind::single: return "single";
    case CouplingKind::bath: return "bath";
  }
  return "?";
}

void RunConfig::validate() const {
  model.validate();
  if (coupling == CouplingKind::single) single.validate();
  if (coupling == CouplingKind::bath) bath.validate();
  if (multiplicity < 1) throw ConfigError("ansatz.multiplicity must be at least 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("ansatz.noise must be non-negative");
  if (noise == 0.0 && multiplicity > 1 && init_state_file.empty()) {
    throw ConfigError("ansatz.noise = 0 requires ansatz.multiplicity = 1 (identical branches are singular)");
  }
  grid.validate();
  if (record_every < 1) throw ConfigError("grid.record_every must be at least 1");
  if (!(norm_tolerance >= 0.0) || !std::isfinite(norm_tolerance)) {
    throw ConfigError("grid.norm_tolerance must be non-negative");
  }
  if (!(solver.regularization > 0.0) || !(solver.max_regularization >= solver.regularization)) {
    throw ConfigError("solver.regularization must be positive and not above solver.max_regularization");
  }
  if (!(solver.residual_tolerance > 0.0)) throw ConfigError("solver.residual_tolerance must be positive");
}

ModelAssembly RunConfig::assembly() const {
  switch (coupling) {
    case CouplingKind::none: return ModelAssembly::bare(model);
    case CouplingKind::single: return ModelAssembly::single_mode(model, single);
    case CouplingKind::bath: return ModelAssembly::bath(model, discretize(bath));
  }
  throw ConfigError("coupling.type is not set");
}

MultiD2State RunConfig::initial_state() const {
  const int k = coupling == CouplingKind::none ? 0 : (coupling == CouplingKind::single ? 1 : bath.n_modes);
  if (!init_state_file.empty()) {
    std::ifstream in(init_state_file, std::ios::binary);
    if (!in) throw ConfigError("init.state_file: cannot read '" + init_state_file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    MultiD2State s = deserialize(buf.str());
    if (s.n_modes() != k) {
      throw ConfigError("init.state_file has " + std::to_string(s.n_modes()) + " modes, the coupling needs " +
                        std::to_string(k));
    }
    return s;
  }
  return init_state(init, multiplicity, k, noise, seed);
}

PropagationOptions RunConfig::propagation() const {
  PropagationOptions o;
  o.grid = grid;
  o.record_every = record_every;
  o.step_norm_tolerance = norm_tolerance;
  o.record_occupations = record_occupations;
  o.solver = solver;
  return o;
}

RunConfig parse_run_config(const KeyValues& kv) {
  kv.check_known(kRunKeys, kForeignPrefixes);
  RunConfig c;
  if (auto t = kv.text("coupling.type")) {
    if (*t == "none") c.coupling = CouplingKind::none;
    else if (*t == "single") c.coupling = CouplingKind::single;
    else if (*t == "bath") c.coupling = CouplingKind::bath;
    else throw ConfigError("coupling.type must be none, single or bath, got '" + *t + "'");
  }
  if (c.coupling == CouplingKind::bath) {
    c.multiplicity = 4;
    c.grid.t0 = -10.0;
    c.grid.t1 = 50.0;
  }
  if (c.coupling != CouplingKind::single && (kv.has("coupling.lambda") || kv.has("coupling.omega_mode"))) {
    throw ConfigError("coupling.lambda / coupling.omega_mode need coupling.type = single");
  }
  if (c.coupling != CouplingKind::bath) {
    for (const auto& [key, value] : kv.entries()) {
      if (key.rfind("bath.", 0) == 0) throw ConfigError("'" + key + "' needs coupling.type = bath");
    }
  }

  auto num = [&](const char* key, double& field) {
    if (auto x = kv.number(key)) field = *x;
  };
  auto count = [&](const char* key, int& field) {
    if (auto x = kv.integer(key)) {
      if (*x < -1000000000LL || *x > 1000000000LL) throw ConfigError(std::string(key) + " is out of range");
      field = static_cast<int>(*x);
    }
  };
  num("model.v", c.model.v);
  num("model.delta", c.model.delta);
  num("model.unit_freq", c.model.unit_freq);
  num("coupling.lambda", c.single.lambda);
  num("coupling.omega_mode", c.single.omega_mode);
  num("bath.alpha", c.bath.alpha);
  num("bath.s", c.bath.s);
  num("bath.omega_c", c.bath.omega_c);
  if (!kv.has("bath.omega_max")) c.bath.omega_max = 5.0 * c.bath.omega_c;
  num("bath.omega_max", c.bath.omega_max);
  count("bath.n_modes", c.bath.n_modes);
  if (auto t = kv.text("bath.scheme")) c.bath.scheme = parse_scheme(*t);
  count("ansatz.multiplicity", c.multiplicity);
  num("ansatz.noise", c.noise);
  if (auto x = kv.integer("ansatz.seed")) {
    if (*x < 0) throw ConfigError("ansatz.seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(*x);
  }
  num("grid.t0", c.grid.t0);
  num("grid.t1", c.grid.t1);
  num("grid.dt", c.grid.dt);
  count("grid.record_every", c.record_every);
  num("grid.norm_tolerance", c.norm_tolerance);
  if (auto t = kv.text("init.spin")) c.init = parse_spin(*t);
  if (auto t = kv.text("init.state_file")) c.init_state_file = *t;
  if (auto b = kv.boolean("output.occupations")) c.record_occupations = *b;
  if (auto t = kv.text("solver.method")) c.solver.solver = parse_eom_solver(*t);
  num("solver.regularization", c.solver.regularization);
  num("solver.max_regularization", c.solver.max_regularization);
  num("solver.residual_tolerance", c.solver.residual_tolerance);
  if (auto b = kv.boolean("solver.mode_subspace")) c.solver.mode_subspace = *b;
  c.validate();
  return c;
}

std::string to_text(const RunConfig& c) {
  std::string out;
  auto put = [&out](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  auto put_num = [&](const char* key, double x) { put(key, format_number(x)); };
  put_num("model.v", c.model.v);
  put_num("model.delta", c.model.delta);
  put_num("model.unit_freq", c.model.unit_freq);
  put("coupling.type", std::string(to_string(c.coupling)));
  if (c.coupling == CouplingKind::single) {
    put_num("coupling.lambda", c.single.lambda);
    put_num("coupling.omega_mode", c.single.omega_mode);
  }
  if (c.coupling == CouplingKind::bath) {
    put_num("bath.alpha", c.bath.alpha);
    put_num("bath.s", c.bath.s);
    put_num("bath.omega_c", c.bath.omega_c);
    put_num("bath.omega_max", c.bath.omega_max);
    put("bath.n_modes", std::to_string(c.bath.n_modes));
    put("bath.scheme", std::string(to_string(c.bath.scheme)));
  }
  put("ansatz.multiplicity", std::to_string(c.multiplicity));
  put_num("ansatz.noise", c.noise);
  put("ansatz.seed", std::to_string(c.seed));
  put_num("grid.t0", c.grid.t0);
  put_num("grid.t1", c.grid.t1);
  put_num("grid.dt", c.grid.dt);
  put("grid.record_every", std::to_string(c.record_every));
  put_num("grid.norm_tolerance", c.norm_tolerance);
  put("init.spin", std::string(to_string(c.init)));
  if (!c.init_state_file.empty()) put("init.state_file", c.init_state_file);
  put("output.occupations", c.record_occupations ? "true" : "false");
  put("solver.method", std::string(to_string(c.solver.solver)));
  put_num("solver.regularization", c.solver.regularization);
  put_num("solver.max_regularization", c.solver.max_regularization);
  put_num("solver.residual_tolerance", c.solver.residual_tolerance);
  put("solver.mode_subspace", c.solver.mode_subspace ? "true" : "false");
  return out;
}

void SweepSpec::validate() const {
  static const std::set<std::string> single_params{"lambda", "omega_mode"};
  static const std::set<std::string> bath_params{"alpha", "s"};
  if (values.empty()) throw ConfigError("sweep.values must not be empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("sweep.values must be finite");
  }
  if (parameter == "delta") return;
  if (single_params.count(parameter)) {
    if (base.coupling != CouplingKind::single) {
      throw ConfigError("sweep.parameter '" + parameter + "' needs coupling.type = single");
    }
    return;
  }
  if (bath_params.count(parameter)) {
    if (base.coupling != CouplingKind::bath) {
      throw ConfigError("sweep.parameter '" + parameter + "' needs coupling.type = bath");
    }
    return;
  }
  throw ConfigError("sweep.parameter must be one of lambda, delta, omega_mode, alpha, s; got '" + parameter + "'");
}

RunConfig SweepSpec::at(double value) const {
  RunConfig c = base;
  if (parameter == "lambda") c.single.lambda = value;
  else if (parameter == "delta") c.model.delta = value;
  else if (parameter == "omega_mode") c.single.omega_mode = value;
  else if (parameter == "alpha") c.bath.alpha = value;
  else if (parameter == "s") c.bath.s = value;
  c.validate();
  return c;
}

SweepSpec parse_sweep_spec(const KeyValues& kv) {
  SweepSpec spec;
  spec.base = parse_run_config(kv);
  const auto p = kv.text("sweep.parameter");
  if (!p) throw ConfigError("missing key 'sweep.parameter'");
  spec.parameter = *p;
  if (auto v = kv.numbers("sweep.values")) {
    if (kv.has("sweep.start") || kv.has("sweep.stop") || kv.has("sweep.step")) {
      throw ConfigError("give either sweep.values or sweep.start/stop/step, not both");
    }
    spec.values = *v;
  } else {
    const auto start = kv.number("sweep.start");
    const auto stop = kv.number("sweep.stop");
    const auto step = kv.number("sweep.step");
    if (!start || !stop || !step) throw ConfigError("sweep needs sweep.values or sweep.start, sweep.stop, sweep.step");
    if (!(*step > 0.0) || *stop < *start) throw ConfigError("sweep.step must be positive and sweep.stop >= sweep.start");
    const long n = std::lround(std::floor((*stop - *start) / *step + 1e-9));
    for (long i = 0; i <= n; ++i) spec.values.push_back(*start + static_cast<double>(i) * *step);
  }
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("sweep.", 0) == 0 && key != "sweep.parameter" && key != "sweep.values" && key != "sweep.start" &&
        key != "sweep.stop" && key != "sweep.step") {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  spec.validate();
  for (double v : spec.values) spec.at(v);  // every point must validate before anything runs
  return spec;
}

void ConvergeSpec::validate() const {
  if (values.size() < 2) throw ConfigError("converge.values needs at least two entries");
  if (scan == "n_modes" || scan == "omega_max" || scan == "scheme") {
    if (base.coupling != CouplingKind::bath) throw ConfigError("converge.scan '" + scan + "' needs coupling.type = bath");
  } else if (scan != "multiplicity") {
    throw ConfigError("converge.scan must be multiplicity, n_modes, omega_max or scheme; got '" + scan + "'");
  }
  for (std::size_t i = 0; i < values.size(); ++i) at(i);
}

RunConfig ConvergeSpec::at(std::size_t i) const {
  RunConfig c = base;
  const std::string& v = values.at(i);
  auto as_int = [&](const std::string& s) {
    int x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ConfigError("converge.values entry '" + v + "' is not an integer");
    }
    return x;
  };
  if (scan == "multiplicity") {
    c.multiplicity = as_int(v);
  } else if (scan == "n_modes") {
    c.bath.n_modes = as_int(v);
  } else if (scan == "omega_max") {
    const auto x = to_double(v);
    if (!x) throw ConfigError("converge.values entry '" + v + "' is not a number");
    c.bath.omega_max = *x;
  } else if (scan == "scheme") {
    const auto colon = v.find(':');
    if (colon == std::string::npos) throw ConfigError("converge.values entry '" + v + "' must read scheme:N");
    c.bath.scheme = parse_scheme(trim(std::string_view(v).substr(0, colon)));
    c.bath.n_modes = as_int(trim(std::string_view(v).substr(colon + 1)));
  }
  c.validate();
  return c;
}

ConvergeSpec parse_converge_spec(const KeyValues& kv) {
  ConvergeSpec spec;
  spec.base = parse_run_config(kv);
  const auto scan = kv.text("converge.scan");
  if (!scan) throw ConfigError("missing key 'converge.scan'");
  spec.scan = *scan;
  const auto values = kv.list("converge.values");
  if (!values) throw ConfigError("missing key 'converge.values'");
  spec.values = *values;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("converge.", 0) == 0 && key != "converge.scan" && key != "converge.values") {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

DiagramSpec parse_diagram_spec(const KeyValues& kv, const RunConfig& base) {
  if (base.coupling != CouplingKind::single) throw ConfigError("diagram needs coupling.type = single");
  DiagramSpec d;
  d.window = {base.grid.t0, base.grid.t1};
  if (auto x = kv.integer("diagram.n_max")) {
    if (*x < 0 || *x > 200) throw ConfigError("diagram.n_max must lie in [0, 200]");
    d.n_max = static_cast<int>(*x);
  }
  if (auto x = kv.number("diagram.t0")) d.window.lo = *x;
  if (auto x = kv.number("diagram.t1")) d.window.hi = *x;
  if (auto x = kv.number("diagram.dt")) d.sample_dt = *x;
  if (auto x = kv.number("diagram.gap_half_width")) d.gap_half_width = *x;
  if (!(d.window.lo < d.window.hi)) throw ConfigError("diagram.t0 must be below diagram.t1");
  if (!(d.sample_dt > 0.0)) throw ConfigError("diagram.dt must be positive");
  if (!(d.gap_half_width > 0.0)) throw ConfigError("diagram.gap_half_width must be positive");
  if (base.single.omega_mode <= 0.0) throw ConfigError("diagram needs coupling.omega_mode > 0");
  return d;
}

OracleSpec parse_oracle_spec(const KeyValues& kv) {
  OracleSpec o;
  if (auto t = kv.text("oracle.kind")) {
    if (*t == "fock") o.kind = OracleKind::fock;
    else if (*t == "bare") o.kind = OracleKind::bare;
    else throw ConfigError("oracle.kind must be fock or bare, got '" + *t + "'");
  }
  if (auto x = kv.integer("oracle.n_max")) {
    if (*x < 0 || *x > 400) throw ConfigError("oracle.n_max must lie in [0, 400]");
    o.n_max = static_cast<int>(*x);
  }
  if (auto x = kv.number("oracle.dt")) o.dt = *x;
  if (auto x = kv.number("oracle.horizon")) o.horizon = *x;
  if (!(o.dt > 0.0)) throw ConfigError("oracle.dt must be positive");
  if (!(o.horizon > 0.0)) throw ConfigError("oracle.horizon must be positive");
  return o;
}

}  // namespace bowtie
