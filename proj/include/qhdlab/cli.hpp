#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhdlab/classical_opt.hpp"
#include "qhdlab/evolution.hpp"
#include "qhdlab/metrics.hpp"

namespace qhdlab::cli {

/// A config problem tied to a line of the source file (line 0 = whole file).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, int line, const std::string& what);
  int line;
};

enum class Method { GradQhd, Qhd, Nag, Sgdm, HamFlow };

std::string to_string(Method m);

struct InitialStateConfig {
  std::string kind = "uniform";  // uniform | gaussian
  std::vector<double> center;
  double sigma = 1.0;
};

struct ClassicalSettings {
  int K = 0;
  int n_runs = 1000;
  double s = 0.01;
  double s0 = 0.01;
  double noise_std = 1.0;
  bool nag_y0_zero = false;
};

struct FlowSettings {
  double T = 0.0;
  double dt = 0.0;
  std::vector<double> x0;
  std::vector<double> p0;
  FlowForm form = FlowForm::Printed;
  std::optional<double> residual_s;
};

struct ExperimentConfig {
  std::string name;
  std::string objective;
  Method method = Method::GradQhd;
  std::uint64_t seed = 0;
  double delta = 1.0;
  int observe_every = 1;
  std::string output_dir;
  bool center_objective = false;

  HamiltonianParams params;
  int grid_n = 128;
  double lanczos_tol = 1e-10;
  evolution::LyapunovKind lyapunov = evolution::LyapunovKind::None;
  int max_log2_nodes = 24;
  bool write_density = true;

  InitialStateConfig initial_state;
  ClassicalSettings classical;
  FlowSettings flow;

  /// Dotted names of every optional key that took its default.
  std::vector<std::string> defaults_applied;

  nlohmann::json to_json() const;
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Exact CSV header of series.csv.
extern const char* const kSeriesHeader;

void write_series_csv(std::ostream& out, const MetricsSeries& series);
MetricsSeries read_series_csv(const std::filesystem::path& path);

struct RunSummary {
  std::filesystem::path output_dir;
  std::size_t rows = 0;
  nlohmann::json results;
};

/// Executes one experiment and writes series.csv, manifest.json and, for
/// quantum runs, final_density.csv (ham_flow writes trajectory.csv).
/// Files written before a failure are removed.
RunSummary cmd_run(const ExperimentConfig& cfg, std::ostream& log);

// ---------------------------------------------------------------------------
// Verification suites shared by `verify` and the acceptance tests.

struct SuiteLine {
  std::string name;
  double value = 0.0;
  std::string bound;  // human-readable acceptance bound
  bool pass = false;
};

struct SuiteResult {
  std::string suite;
  std::vector<SuiteLine> lines;
  bool all_pass() const;
};

SuiteResult verify_commutators();
SuiteResult verify_splitting();
SuiteResult verify_gradients();

struct LyapunovRun {
  evolution::LyapunovKind kind = evolution::LyapunovKind::E;
  int grid_n = 256;
  HamiltonianParams params;
  /// (t, value) including the initial time.
  std::vector<std::pair<double, double>> lyapunov;
  std::vector<std::pair<double, double>> exp_f;
  std::size_t violations = 0;
  double worst_increase = 0.0;
  std::size_t bound_breaches = 0;  // observations with exp_f > lyapunov / t^2
  double grad_condition_max = 0.0;           // only for kind F
};

/// Centered convex_quartic from a uniform state with alpha = 0.05, gamma = 0.2,
/// t0 = 1, h = 0.01, K = 500 (beta = 0.05 for F, 0 for E).
LyapunovRun lyapunov_run(evolution::LyapunovKind kind, int grid_n, double rel_tol = 1e-3);

SuiteResult verify_lyapunov();

/// Runs `suite` and prints its table; returns true when every line passes.
bool cmd_verify(const std::string& suite, std::ostream& out);

/// Renders E[f] - f_min and success probability panels as SVG.
void cmd_plot(const std::vector<std::filesystem::path>& series, const std::filesystem::path& out);

void list_objectives(std::ostream& out);

}  // namespace qhdlab::cli
