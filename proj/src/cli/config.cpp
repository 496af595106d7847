// Plain-text experiment configs: `key = value` lines grouped under [section]
// headers, a subset of TOML. Keys before any header belong to [run].

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qhdlab/cli.hpp"

namespace qhdlab::cli {

ConfigError::ConfigError(const std::string& origin, int line, const std::string& what)
    : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
      line(line) {}

std::string to_string(Method m) {
  switch (m) {
    case Method::GradQhd: return "grad_qhd";
    case Method::Qhd: return "qhd";
    case Method::Nag: return "nag";
    case Method::Sgdm: return "sgdm";
    case Method::HamFlow: return "ham_flow";
  }
  return "?";
}

namespace {

enum class Type { Str, Real, Int, U64, Bool, RealList };

const char* type_name(Type t) {
  switch (t) {
    case Type::Str: return "a quoted string";
    case Type::Real: return "a number";
    case Type::Int: return "an integer";
    case Type::U64: return "a non-negative integer";
    case Type::Bool: return "true or false";
    case Type::RealList: return "a list of numbers";
  }
  return "?";
}

const std::map<std::string, Type>& schema() {
  static const std::map<std::string, Type> s = {
      {"run.name", Type::Str},
      {"run.objective", Type::Str},
      {"run.method", Type::Str},
      {"run.seed", Type::U64},
      {"run.delta", Type::Real},
      {"run.observe_every", Type::Int},
      {"run.output_dir", Type::Str},
      {"run.center_objective", Type::Bool},
      {"hamiltonian.alpha", Type::Real},
      {"hamiltonian.beta", Type::Real},
      {"hamiltonian.gamma", Type::Real},
      {"hamiltonian.t0", Type::Real},
      {"hamiltonian.h", Type::Real},
      {"hamiltonian.K", Type::Int},
      {"hamiltonian.grid_n", Type::Int},
      {"hamiltonian.lanczos_tol", Type::Real},
      {"hamiltonian.lyapunov", Type::Str},
      {"hamiltonian.max_log2_nodes", Type::Int},
      {"hamiltonian.write_density", Type::Bool},
      {"initial_state.kind", Type::Str},
      {"initial_state.center", Type::RealList},
      {"initial_state.sigma", Type::Real},
      {"classical.K", Type::Int},
      {"classical.n_runs", Type::Int},
      {"classical.s", Type::Real},
      {"classical.s0", Type::Real},
      {"classical.noise_std", Type::Real},
      {"classical.nag_y0", Type::Str},
      {"flow.T", Type::Real},
      {"flow.dt", Type::Real},
      {"flow.x0", Type::RealList},
      {"flow.p0", Type::RealList},
      {"flow.form", Type::Str},
      {"flow.residual_s", Type::Real},
  };
  return s;
}

struct Entry {
  int line = 0;
  std::string raw;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  if (s.empty()) return false;
  const char* begin = s.data() + (s[0] == '+' ? 1 : 0);
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && p == end;
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, Entry> entries)
      : origin_(std::move(origin)), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(origin_, line(key), what);
  }

  void require(const std::string& key, const std::string& why) const {
    if (!has(key)) throw ConfigError(origin_, 0, "missing required key '" + key + "' (" + why + ")");
  }

  std::string str(const std::string& key) const {
    const std::string& raw = entries_.at(key).raw;
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') mismatch(key);
    return raw.substr(1, raw.size() - 2);
  }
  double real(const std::string& key) const {
    double v = 0.0;
    if (!parse_real(entries_.at(key).raw, v)) mismatch(key);
    return v;
  }
  int integer(const std::string& key) const {
    int v = 0;
    if (!parse_int(entries_.at(key).raw, v)) mismatch(key);
    return v;
  }
  std::uint64_t u64(const std::string& key) const {
    std::uint64_t v = 0;
    if (!parse_int(entries_.at(key).raw, v)) mismatch(key);
    return v;
  }
  bool boolean(const std::string& key) const {
    const std::string& raw = entries_.at(key).raw;
    if (raw == "true") return true;
    if (raw == "false") return false;
    mismatch(key);
  }
  std::vector<double> list(const std::string& key) const {
    const std::string& raw = entries_.at(key).raw;
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') mismatch(key);
    std::vector<double> out;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      if (!parse_real(trim(item), v)) mismatch(key);
      out.push_back(v);
    }
    return out;
  }

  /// Reads `key` into `out` when present, otherwise records it as defaulted.
  template <class T, class Get>
  void optional(const std::string& key, T& out, Get get, std::vector<std::string>& defaulted) const {
    if (has(key))
      out = (this->*get)(key);
    else
      defaulted.push_back(key);
  }

 private:
  [[noreturn]] void mismatch(const std::string& key) const {
    fail(key, "type mismatch for '" + key + "': expected " + type_name(schema().at(key)) + ", got '" +
                  entries_.at(key).raw + "'");
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

std::map<std::string, Entry> tokenize(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  std::string section = "run";
  std::istringstream in(text);
  std::string raw_line;
  int lineno = 0;
  while (std::getline(in, raw_line)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin, lineno, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* known[] = {"run", "hamiltonian", "initial_state", "classical", "flow"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(origin, lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, lineno, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin, lineno, "empty key");
    if (value.empty()) throw ConfigError(origin, lineno, "missing value for '" + key + "'");
    const std::string dotted = section + "." + key;
    if (!schema().count(dotted)) throw ConfigError(origin, lineno, "unknown key '" + key + "' in [" + section + "]");
    if (entries.count(dotted))
      throw ConfigError(origin, lineno,
                        "duplicate key '" + key + "' (first set on line " + std::to_string(entries[dotted].line) + ")");
    entries[dotted] = {lineno, value};
  }
  return entries;
}

Method parse_method(const Reader& r) {
  const std::string m = r.str("run.method");
  if (m == "grad_qhd") return Method::GradQhd;
  if (m == "qhd") return Method::Qhd;
  if (m == "nag") return Method::Nag;
  if (m == "sgdm") return Method::Sgdm;
  if (m == "ham_flow") return Method::HamFlow;
  r.fail("run.method", "unknown method '" + m + "' (expected grad_qhd, qhd, nag, sgdm or ham_flow)");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Reader r(origin, tokenize(text, origin));
  ExperimentConfig c;
  auto& d = c.defaults_applied;

  r.require("run.objective", "objective name");
  r.require("run.method", "one of grad_qhd, qhd, nag, sgdm, ham_flow");
  c.objective = r.str("run.objective");
  ObjectiveSpec obj;
  try {
    obj = objectives::get(c.objective);
  } catch (const std::invalid_argument& e) {
    r.fail("run.objective", e.what());
  }
  c.method = parse_method(r);

  c.name = std::filesystem::path(origin).stem().string();
  if (c.name.empty()) c.name = "experiment";
  r.optional("run.name", c.name, &Reader::str, d);
  r.optional("run.seed", c.seed, &Reader::u64, d);
  r.optional("run.delta", c.delta, &Reader::real, d);
  if (!(c.delta > 0.0)) r.fail("run.delta", "delta must be positive");
  r.optional("run.observe_every", c.observe_every, &Reader::integer, d);
  if (c.observe_every < 1) r.fail("run.observe_every", "observe_every must be >= 1");
  c.output_dir = "runs/" + c.name;
  r.optional("run.output_dir", c.output_dir, &Reader::str, d);
  r.optional("run.center_objective", c.center_objective, &Reader::boolean, d);

  const bool quantum = c.method == Method::GradQhd || c.method == Method::Qhd;
  const bool classical = c.method == Method::Nag || c.method == Method::Sgdm;
  const bool flow = c.method == Method::HamFlow;

  if (quantum || flow) {
    r.optional("hamiltonian.alpha", c.params.alpha, &Reader::real, d);
    r.optional("hamiltonian.beta", c.params.beta, &Reader::real, d);
    r.optional("hamiltonian.gamma", c.params.gamma, &Reader::real, d);
    r.require("hamiltonian.t0", "initial evolution time");
    c.params.t0 = r.real("hamiltonian.t0");
  }
  if (c.method == Method::Qhd)
    for (const char* k : {"hamiltonian.alpha", "hamiltonian.beta", "hamiltonian.gamma"})
      if (r.has(k) && r.real(k) != 0.0) r.fail(k, std::string("method qhd requires ") + (k + 12) + " = 0");

  if (quantum) {
    r.require("hamiltonian.h", "time step");
    r.require("hamiltonian.K", "number of steps");
    c.params.h = r.real("hamiltonian.h");
    c.params.K = r.integer("hamiltonian.K");
    try {
      c.params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(origin, r.line("hamiltonian.h"), e.what());
    }
    r.optional("hamiltonian.grid_n", c.grid_n, &Reader::integer, d);
    if (c.grid_n < 8) r.fail("hamiltonian.grid_n", "grid_n must be >= 8");
    r.optional("hamiltonian.lanczos_tol", c.lanczos_tol, &Reader::real, d);
    if (!(c.lanczos_tol > 0.0)) r.fail("hamiltonian.lanczos_tol", "lanczos_tol must be positive");
    r.optional("hamiltonian.max_log2_nodes", c.max_log2_nodes, &Reader::integer, d);
    if (std::log2(static_cast<double>(c.grid_n)) * obj.dim > c.max_log2_nodes + 1e-12)
      r.fail("hamiltonian.grid_n", "grid_n^d exceeds 2^max_log2_nodes nodes");
    r.optional("hamiltonian.write_density", c.write_density, &Reader::boolean, d);
    std::string lyap = "none";
    r.optional("hamiltonian.lyapunov", lyap, &Reader::str, d);
    if (lyap == "E")
      c.lyapunov = evolution::LyapunovKind::E;
    else if (lyap == "F")
      c.lyapunov = evolution::LyapunovKind::F;
    else if (lyap != "none")
      r.fail("hamiltonian.lyapunov", "lyapunov must be \"none\", \"E\" or \"F\"");
    if (c.lyapunov != evolution::LyapunovKind::None && !c.center_objective)
      r.fail("hamiltonian.lyapunov", "Lyapunov tracking needs center_objective = true");

    r.optional("initial_state.kind", c.initial_state.kind, &Reader::str, d);
    if (c.initial_state.kind == "gaussian") {
      r.require("initial_state.center", "gaussian initial state");
      c.initial_state.center = r.list("initial_state.center");
      if (static_cast<int>(c.initial_state.center.size()) != obj.dim)
        r.fail("initial_state.center", "center must have " + std::to_string(obj.dim) + " entries");
      r.optional("initial_state.sigma", c.initial_state.sigma, &Reader::real, d);
      if (!(c.initial_state.sigma > 0.0)) r.fail("initial_state.sigma", "sigma must be positive");
    } else if (c.initial_state.kind != "uniform") {
      r.fail("initial_state.kind", "initial_state.kind must be \"uniform\" or \"gaussian\"");
    }
  }

  if (classical) {
    r.require("classical.K", "number of iterations");
    c.classical.K = r.integer("classical.K");
    if (c.classical.K < 1) r.fail("classical.K", "K must be >= 1");
    r.optional("classical.n_runs", c.classical.n_runs, &Reader::integer, d);
    if (c.classical.n_runs < 1) r.fail("classical.n_runs", "n_runs must be >= 1");
    if (c.method == Method::Nag) {
      r.optional("classical.s", c.classical.s, &Reader::real, d);
      if (!(c.classical.s > 0.0)) r.fail("classical.s", "s must be positive");
      std::string y0 = "x0";
      r.optional("classical.nag_y0", y0, &Reader::str, d);
      if (y0 != "x0" && y0 != "zero") r.fail("classical.nag_y0", "nag_y0 must be \"x0\" or \"zero\"");
      c.classical.nag_y0_zero = y0 == "zero";
    } else {
      r.optional("classical.s0", c.classical.s0, &Reader::real, d);
      if (!(c.classical.s0 > 0.0)) r.fail("classical.s0", "s0 must be positive");
      r.optional("classical.noise_std", c.classical.noise_std, &Reader::real, d);
      if (!(c.classical.noise_std >= 0.0)) r.fail("classical.noise_std", "noise_std must be >= 0");
    }
  }

  if (flow) {
    r.require("flow.T", "final time");
    r.require("flow.dt", "RK4 step");
    r.require("flow.x0", "initial position");
    c.flow.T = r.real("flow.T");
    c.flow.dt = r.real("flow.dt");
    c.flow.x0 = r.list("flow.x0");
    if (!(c.params.t0 > 0.0)) r.fail("hamiltonian.t0", "ham_flow needs t0 > 0");
    if (!(c.flow.T > c.params.t0)) r.fail("flow.T", "T must exceed t0");
    if (!(c.flow.dt > 0.0)) r.fail("flow.dt", "dt must be positive");
    if (static_cast<int>(c.flow.x0.size()) != obj.dim)
      r.fail("flow.x0", "x0 must have " + std::to_string(obj.dim) + " entries");
    c.flow.p0.assign(obj.dim, 0.0);
    r.optional("flow.p0", c.flow.p0, &Reader::list, d);
    if (static_cast<int>(c.flow.p0.size()) != obj.dim)
      r.fail("flow.p0", "p0 must have " + std::to_string(obj.dim) + " entries");
    std::string form = "printed";
    r.optional("flow.form", form, &Reader::str, d);
    if (form == "legendre")
      c.flow.form = FlowForm::Legendre;
    else if (form != "printed")
      r.fail("flow.form", "form must be \"printed\" or \"legendre\"");
    if (r.has("flow.residual_s")) {
      c.flow.residual_s = r.real("flow.residual_s");
      if (!(*c.flow.residual_s > 0.0)) r.fail("flow.residual_s", "residual_s must be positive");
    }
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

nlohmann::json ExperimentConfig::to_json() const {
  using nlohmann::json;
  json j;
  j["run"] = {{"name", name},         {"objective", objective},     {"method", to_string(method)},
              {"seed", seed},         {"delta", delta},             {"observe_every", observe_every},
              {"output_dir", output_dir}, {"center_objective", center_objective}};
  switch (method) {
    case Method::GradQhd:
    case Method::Qhd: {
      const char* lyap = lyapunov == evolution::LyapunovKind::E   ? "E"
                         : lyapunov == evolution::LyapunovKind::F ? "F"
                                                                  : "none";
      j["hamiltonian"] = {{"alpha", params.alpha},     {"beta", params.beta},
                          {"gamma", params.gamma},     {"t0", params.t0},
                          {"h", params.h},             {"K", params.K},
                          {"grid_n", grid_n},          {"lanczos_tol", lanczos_tol},
                          {"lyapunov", lyap},          {"max_log2_nodes", max_log2_nodes},
                          {"write_density", write_density}};
      j["initial_state"] = {{"kind", initial_state.kind}};
      if (initial_state.kind == "gaussian") {
        j["initial_state"]["center"] = initial_state.center;
        j["initial_state"]["sigma"] = initial_state.sigma;
      }
      break;
    }
    case Method::Nag:
      j["classical"] = {{"K", classical.K},
                        {"n_runs", classical.n_runs},
                        {"s", classical.s},
                        {"nag_y0", classical.nag_y0_zero ? "zero" : "x0"}};
      break;
    case Method::Sgdm:
      j["classical"] = {{"K", classical.K},
                        {"n_runs", classical.n_runs},
                        {"s0", classical.s0},
                        {"noise_std", classical.noise_std}};
      break;
    case Method::HamFlow:
      j["hamiltonian"] = {{"alpha", params.alpha}, {"beta", params.beta}, {"gamma", params.gamma}, {"t0", params.t0}};
      j["flow"] = {{"T", flow.T},
                   {"dt", flow.dt},
                   {"x0", flow.x0},
                   {"p0", flow.p0},
                   {"form", flow.form == FlowForm::Legendre ? "legendre" : "printed"}};
      if (flow.residual_s) j["flow"]["residual_s"] = *flow.residual_s;
      break;
  }
  return j;
}

}  // namespace qhdlab::cli
