#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fftw3.h>

#include "qhdlab/analysis.hpp"
#include "qhdlab/cli.hpp"

#ifndef QHDLAB_VERSION
#define QHDLAB_VERSION "0.0.0"
#endif

namespace qhdlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kSeriesHeader = "k,t,exp_f,exp_gradnorm_sq,success_prob,norm_drift,lyapunov";

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Keeps every observe_every-th record plus the last one.
MetricsSeries thin(const MetricsSeries& s, int observe_every) {
  MetricsSeries out{{}, s.delta, s.f_min};
  for (std::size_t i = 0; i < s.records.size(); ++i)
    if (s.records[i].k % observe_every == 0 || i + 1 == s.records.size()) out.records.push_back(s.records[i]);
  return out;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json objective_json(const ObjectiveSpec& obj, bool centered) {
  json mins = json::array();
  for (const auto& m : obj.minimizers) mins.push_back(vec_json(m));
  return {{"name", obj.name},        {"dim", obj.dim},     {"box_lo", vec_json(obj.box.lo)},
          {"box_hi", vec_json(obj.box.hi)}, {"f_min", obj.f_min}, {"minimizers", mins},
          {"centered", centered}};
}

// Files created by a run, removed again if it fails.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_);
  }
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }
  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

WaveFunction initial_state(const ExperimentConfig& cfg, const GridPtr& grid) {
  if (cfg.initial_state.kind == "gaussian") {
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cfg.initial_state.center.data(),
                                                                static_cast<Eigen::Index>(cfg.initial_state.center.size()));
    return gaussian_state(grid, c, cfg.initial_state.sigma);
  }
  return uniform_state(grid);
}

json run_quantum(const ExperimentConfig& cfg, const ObjectiveSpec& obj, OutputGuard& out, std::ostream& log,
                 std::size_t& rows) {
  const GridPtr grid = make_grid(obj.box, cfg.grid_n);
  evolution::EvolveOptions opts;
  opts.delta = cfg.delta;
  opts.lyapunov = cfg.lyapunov;
  opts.lanczos.tol = cfg.lanczos_tol;
  log << "running " << to_string(cfg.method) << " on " << obj.name << " (N=" << cfg.grid_n << ", K=" << cfg.params.K
      << ")\n";
  const evolution::EvolveResult r = evolution::evolve(initial_state(cfg, grid), cfg.params, obj, cfg.observe_every, opts);

  auto series = out.open("series.csv");
  write_series_csv(series, r.series);
  rows = r.series.records.size();
  if (cfg.write_density) {
    auto dens = out.open("final_density.csv");
    for (int j = 0; j < grid->dim(); ++j) dens << "x" << j << ",";
    dens << "prob\n";
    for (Eigen::Index i = 0; i < grid->size(); ++i) {
      for (int j = 0; j < grid->dim(); ++j) dens << g17(grid->coordinate(j)[i]) << ",";
      dens << g17(std::norm(r.final_state.amp[i])) << "\n";
    }
  }
  const MetricRecord& last = r.series.records.back();
  return {{"final_exp_f", last.exp_f},
          {"final_success_prob", last.success_prob},
          {"max_norm_drift", r.max_norm_drift},
          {"max_lanczos_dim", r.max_lanczos_dim},
          {"max_lanczos_substeps", r.max_lanczos_substeps},
          {"renormalizations", r.renormalizations},
          {"grid_nodes", grid->size()}};
}

json run_classical(const ExperimentConfig& cfg, const ObjectiveSpec& obj, OutputGuard& out, std::ostream& log,
                   std::size_t& rows) {
  classical::EnsembleConfig ec;
  ec.optimizer = cfg.method == Method::Nag ? classical::Optimizer::Nag : classical::Optimizer::Sgdm;
  ec.nag = {cfg.classical.s, cfg.classical.K, 0, cfg.classical.nag_y0_zero};
  ec.sgdm = {cfg.classical.s0, cfg.classical.K, cfg.classical.noise_std, 0};
  ec.n_runs = cfg.classical.n_runs;
  ec.master_seed = cfg.seed;
  ec.delta = cfg.delta;
  log << "running " << to_string(cfg.method) << " on " << obj.name << " (" << ec.n_runs << " runs, K=" << cfg.classical.K
      << ")\n";
  const classical::EnsembleResult r = classical::ensemble(obj, ec);
  const MetricsSeries s = thin(r.series, cfg.observe_every);
  auto series = out.open("series.csv");
  write_series_csv(series, s);
  rows = s.records.size();
  if (r.failed_runs > 0) log << "warning: " << r.failed_runs << " runs failed and were excluded\n";
  return {{"final_exp_f", s.records.back().exp_f},
          {"final_success_prob", s.records.back().success_prob},
          {"n_runs", r.n_runs},
          {"failed_runs", r.failed_runs},
          {"workers", classical::worker_count(0)}};
}

json run_flow(const ExperimentConfig& cfg, const ObjectiveSpec& obj, OutputGuard& out, std::ostream& log,
              std::size_t& rows) {
  const FlowParams fp{cfg.params.alpha, cfg.params.beta, cfg.params.gamma, cfg.flow.form};
  ClassicalState s0;
  s0.X = Eigen::Map<const Eigen::VectorXd>(cfg.flow.x0.data(), obj.dim);
  s0.P = Eigen::Map<const Eigen::VectorXd>(cfg.flow.p0.data(), obj.dim);
  s0.t = cfg.params.t0;
  log << "integrating the classical flow on " << obj.name << " to T=" << cfg.flow.T << "\n";
  const FlowTrajectory traj = classical::ham_flow_rk4(obj, fp, s0, cfg.flow.T, cfg.flow.dt);
  std::vector<double> residual;
  if (cfg.flow.residual_s && traj.states.size() >= 3)
    residual = classical::highres_residual(traj, obj, *cfg.flow.residual_s, cfg.flow.form);

  MetricsSeries s{{}, cfg.delta, obj.f_min};
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const ClassicalState& st = traj.states[i];
    MetricRecord r;
    r.k = static_cast<int>(i);
    r.t = st.t;
    r.exp_f = obj.f(st.X);
    r.exp_gradnorm_sq = obj.grad(st.X).squaredNorm();
    r.success_prob = (r.exp_f - obj.f_min <= cfg.delta) ? 1.0 : 0.0;
    s.records.push_back(r);
  }
  const MetricsSeries thinned = thin(s, cfg.observe_every);
  auto series = out.open("series.csv");
  write_series_csv(series, thinned);
  rows = thinned.records.size();

  auto tr = out.open("trajectory.csv");
  tr << "step,t";
  for (int j = 0; j < obj.dim; ++j) tr << ",x" << j;
  for (int j = 0; j < obj.dim; ++j) tr << ",p" << j;
  tr << ",residual\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const ClassicalState& st = traj.states[i];
    tr << i << "," << g17(st.t);
    for (int j = 0; j < obj.dim; ++j) tr << "," << g17(st.X[j]);
    for (int j = 0; j < obj.dim; ++j) tr << "," << g17(st.P[j]);
    tr << ",";
    if (i >= 1 && i - 1 < residual.size()) tr << g17(residual[i - 1]);
    tr << "\n";
  }
  json res = {{"steps", traj.states.size() - 1}, {"dt_used", traj.dt}, {"diverged", traj.diverged},
              {"final_f", obj.f(traj.states.back().X)}};
  if (!residual.empty()) res["max_residual"] = *std::max_element(residual.begin(), residual.end());
  if (traj.diverged) log << "warning: integration stopped at a non-finite state\n";
  return res;
}

}  // namespace

void write_series_csv(std::ostream& out, const MetricsSeries& series) {
  out << kSeriesHeader << "\n";
  for (const auto& r : series.records) {
    out << r.k << "," << g17(r.t) << "," << g17(r.exp_f) << "," << g17(r.exp_gradnorm_sq) << ","
        << g17(r.success_prob) << "," << g17(r.norm_drift) << ",";
    if (r.lyapunov) out << g17(*r.lyapunov);
    out << "\n";
  }
}

MetricsSeries read_series_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader)
    throw std::runtime_error(path.string() + ": schema mismatch (expected header '" + kSeriesHeader + "')");
  MetricsSeries s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 columns");
    try {
      MetricRecord r;
      r.k = std::stoi(cells[0]);
      r.t = std::stod(cells[1]);
      r.exp_f = std::stod(cells[2]);
      r.exp_gradnorm_sq = std::stod(cells[3]);
      r.success_prob = std::stod(cells[4]);
      r.norm_drift = std::stod(cells[5]);
      if (!cells[6].empty()) r.lyapunov = std::stod(cells[6]);
      s.records.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return s;
}

RunSummary cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  ObjectiveSpec obj = objectives::get(cfg.objective);
  if (cfg.center_objective) obj = objectives::center(obj);

  OutputGuard out(cfg.output_dir);
  RunSummary summary;
  summary.output_dir = cfg.output_dir;
  switch (cfg.method) {
    case Method::GradQhd:
    case Method::Qhd: summary.results = run_quantum(cfg, obj, out, log, summary.rows); break;
    case Method::Nag:
    case Method::Sgdm: summary.results = run_classical(cfg, obj, out, log, summary.rows); break;
    case Method::HamFlow: summary.results = run_flow(cfg, obj, out, log, summary.rows); break;
  }

  json manifest;
  manifest["tool"] = "qhd_lab";
  manifest["versions"] = {{"qhd_lab", std::string(QHDLAB_VERSION)},
                          {"fftw", std::string(fftw_version)},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
  manifest["config"] = cfg.to_json();
  manifest["defaults_applied"] = cfg.defaults_applied;
  manifest["seeds"] = {{"master", cfg.seed}};
  if (cfg.method == Method::Nag || cfg.method == Method::Sgdm)
    manifest["seeds"]["run_seed_rule"] = "splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15)";
  manifest["objective"] = objective_json(obj, cfg.center_objective);
  manifest["results"] = summary.results;
  manifest["rows"] = summary.rows;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto mf = out.open("manifest.json");
  mf << manifest.dump(2) << "\n";
  mf.close();
  out.commit();
  log << "wrote " << summary.rows << " rows to " << (fs::path(cfg.output_dir) / "series.csv").string() << "\n";
  return summary;
}

}  // namespace qhdlab::cli
