#include "qhdlab/classical_opt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>

namespace qhdlab {

void SgdmConfig::validate() const {
  if (!(s0 > 0.0)) throw std::invalid_argument("sgdm: s0 must be positive");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("sgdm: noise_std must be non-negative");
  if (K < 1) throw std::invalid_argument("sgdm: K must be >= 1");
}

void NagConfig::validate() const {
  if (!(s > 0.0)) throw std::invalid_argument("nag: s must be positive");
  if (K < 1) throw std::invalid_argument("nag: K must be >= 1");
}

namespace classical {

namespace {

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void check_start(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, const char* who) {
  if (x0.size() != obj.dim) throw std::invalid_argument(std::string(who) + ": x0 has the wrong dimension");
  if (!obj.box.contains(x0)) throw std::invalid_argument(std::string(who) + ": x0 lies outside the objective box");
}

Eigen::VectorXd checked_grad(const ObjectiveSpec& obj, const Eigen::VectorXd& x, int k, const char* who) {
  Eigen::VectorXd g = obj.grad(x);
  if (!finite(g)) throw RunFailure(k, std::string(who) + ": non-finite gradient at iteration " + std::to_string(k));
  return g;
}

void record(RunRecord& rec, const ObjectiveSpec& obj, const Eigen::VectorXd& x, int k, const char* who) {
  const double f = obj.f(x);
  if (!finite(x) || !std::isfinite(f))
    throw RunFailure(k, std::string(who) + ": non-finite iterate at iteration " + std::to_string(k));
  rec.iterates.push_back(x);
  rec.f_values.push_back(f);
}

}  // namespace

double sgdm_momentum(int k, int K) { return 0.5 + 0.4 * k / K; }

double sgdm_step(double s0, int k) { return s0 / k; }

RunRecord sgdm_run(const ObjectiveSpec& obj, const SgdmConfig& cfg, const Eigen::VectorXd& x0) {
  cfg.validate();
  check_start(obj, x0, "sgdm");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  RunRecord rec;
  rec.seed = cfg.seed;
  rec.iterates.reserve(cfg.K + 1);
  rec.f_values.reserve(cfg.K + 1);
  record(rec, obj, x0, 0, "sgdm");

  Eigen::VectorXd x = x0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(obj.dim);
  for (int k = 1; k <= cfg.K; ++k) {
    Eigen::VectorXd g = checked_grad(obj, x, k, "sgdm");
    if (cfg.noise_std > 0.0)
      for (int j = 0; j < obj.dim; ++j) g[j] += cfg.noise_std * noise(rng);
    const double eta = sgdm_momentum(k, cfg.K);
    v = eta * v - (1.0 - eta) * sgdm_step(cfg.s0, k) * g;
    x += v;
    record(rec, obj, x, k, "sgdm");
  }
  return rec;
}

RunRecord nag_run(const ObjectiveSpec& obj, const NagConfig& cfg, const Eigen::VectorXd& x0) {
  cfg.validate();
  check_start(obj, x0, "nag");
  RunRecord rec;
  rec.seed = cfg.seed;
  rec.iterates.reserve(cfg.K + 1);
  rec.f_values.reserve(cfg.K + 1);
  record(rec, obj, x0, 0, "nag");

  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd y = cfg.y0_zero ? Eigen::VectorXd::Zero(obj.dim) : x0;
  for (int k = 1; k <= cfg.K; ++k) {
    const Eigen::VectorXd x = y - cfg.s * checked_grad(obj, y, k, "nag");
    y = x + (static_cast<double>(k - 1) / (k + 2)) * (x - x_prev);
    x_prev = x;
    record(rec, obj, x, k, "nag");
  }
  return rec;
}

std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t index) {
  // SplitMix64 finalizer over a Weyl sequence keyed by the master seed.
  std::uint64_t z = master_seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("QHD_LAB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("QHD_LAB_THREADS is not an integer: ") + env);
    }
  }
  return n;
}

EnsembleResult ensemble(const ObjectiveSpec& obj, const EnsembleConfig& cfg) {
  if (cfg.n_runs < 1) throw std::invalid_argument("ensemble: n_runs must be >= 1");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("ensemble: delta must be positive");
  const bool sgdm = cfg.optimizer == Optimizer::Sgdm;
  if (sgdm)
    cfg.sgdm.validate();
  else
    cfg.nag.validate();
  const int K = sgdm ? cfg.sgdm.K : cfg.nag.K;

  // Per-run f and |grad f|^2 for k = 1..K; empty when the run failed.
  struct Trace {
    std::vector<double> f, g2;
  };
  std::vector<std::optional<Trace>> traces(cfg.n_runs);

  auto one_run = [&](int i) {
    const std::uint64_t seed = run_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(seed);
    Eigen::VectorXd x0(obj.dim);
    for (int j = 0; j < obj.dim; ++j)
      x0[j] = std::uniform_real_distribution<double>(obj.box.lo[j], obj.box.hi[j])(rng);
    try {
      RunRecord rec;
      if (sgdm) {
        SgdmConfig c = cfg.sgdm;
        c.seed = rng();
        rec = sgdm_run(obj, c, x0);
      } else {
        NagConfig c = cfg.nag;
        c.seed = seed;
        rec = nag_run(obj, c, x0);
      }
      Trace tr;
      tr.f.assign(rec.f_values.begin() + 1, rec.f_values.end());
      tr.g2.reserve(K);
      for (int k = 1; k <= K; ++k) {
        const double g2 = obj.grad(rec.iterates[k]).squaredNorm();
        if (!std::isfinite(g2)) throw RunFailure(k, "ensemble: non-finite gradient norm");
        tr.g2.push_back(g2);
      }
      traces[i] = std::move(tr);
    } catch (const RunFailure&) {
      traces[i].reset();
    }
  };

  const int workers = std::min(worker_count(cfg.threads), cfg.n_runs);
  if (workers <= 1) {
    for (int i = 0; i < cfg.n_runs; ++i) one_run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < cfg.n_runs; i = next++) one_run(i);
      });
    for (auto& th : pool) th.join();
  }

  EnsembleResult out;
  out.n_runs = cfg.n_runs;
  out.series.delta = cfg.delta;
  out.series.f_min = obj.f_min;
  int ok = 0;
  for (const auto& tr : traces) ok += tr.has_value() ? 1 : 0;
  out.failed_runs = cfg.n_runs - ok;
  if (ok == 0) throw std::runtime_error("ensemble: every run failed");

  // Accumulate in run-index order so the sums are schedule independent.
  std::vector<double> sf(K, 0.0), sg(K, 0.0), hits(K, 0.0);
  for (const auto& tr : traces) {
    if (!tr) continue;
    for (int k = 0; k < K; ++k) {
      sf[k] += tr->f[k];
      sg[k] += tr->g2[k];
      if (tr->f[k] - obj.f_min <= cfg.delta) hits[k] += 1.0;
    }
  }
  out.series.records.reserve(K);
  for (int k = 0; k < K; ++k) {
    MetricRecord r;
    r.k = k + 1;
    r.t = k + 1;
    r.exp_f = sf[k] / ok;
    r.exp_gradnorm_sq = sg[k] / ok;
    r.success_prob = hits[k] / ok;
    out.series.records.push_back(r);
  }
  return out;
}

namespace {

struct Deriv {
  Eigen::VectorXd dX, dP;
};

Deriv flow_rhs(const ObjectiveSpec& obj, const FlowParams& p, const Eigen::VectorXd& X, const Eigen::VectorXd& P,
               double t) {
  const Eigen::VectorXd g = obj.grad(X);
  const Eigen::MatrixXd H = obj.hess(X);
  const double t2 = t * t, t3 = t2 * t;
  Deriv d;
  d.dX = (p.prefactor() / t3) * P + p.alpha * g;
  d.dP = -H * (p.alpha * P + (p.alpha * p.alpha + p.beta) * t3 * g) - (t3 + p.gamma * t2) * g;
  return d;
}

}  // namespace

FlowTrajectory ham_flow_rk4(const ObjectiveSpec& obj, const FlowParams& params, const ClassicalState& state0, double T,
                            double dt) {
  if (!(state0.t > 0.0)) throw std::invalid_argument("ham_flow_rk4: initial time must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("ham_flow_rk4: dt must be positive");
  if (!(T > state0.t)) throw std::invalid_argument("ham_flow_rk4: T must exceed the initial time");
  if (state0.X.size() != obj.dim || state0.P.size() != obj.dim)
    throw std::invalid_argument("ham_flow_rk4: state dimension does not match the objective");
  if (!obj.hess) throw std::invalid_argument("ham_flow_rk4: objective has no Hessian");

  const long n = std::max(1L, static_cast<long>(std::ceil((T - state0.t) / dt - 1e-9)));
  const double h = (T - state0.t) / static_cast<double>(n);

  FlowTrajectory traj;
  traj.dt = h;
  traj.states.reserve(n + 1);
  traj.states.push_back(state0);
  Eigen::VectorXd X = state0.X, P = state0.P;
  for (long i = 0; i < n; ++i) {
    const double t = state0.t + static_cast<double>(i) * h;
    const Deriv k1 = flow_rhs(obj, params, X, P, t);
    const Deriv k2 = flow_rhs(obj, params, X + 0.5 * h * k1.dX, P + 0.5 * h * k1.dP, t + 0.5 * h);
    const Deriv k3 = flow_rhs(obj, params, X + 0.5 * h * k2.dX, P + 0.5 * h * k2.dP, t + 0.5 * h);
    const Deriv k4 = flow_rhs(obj, params, X + h * k3.dX, P + h * k3.dP, t + h);
    const Eigen::VectorXd Xn = X + (h / 6.0) * (k1.dX + 2.0 * k2.dX + 2.0 * k3.dX + k4.dX);
    const Eigen::VectorXd Pn = P + (h / 6.0) * (k1.dP + 2.0 * k2.dP + 2.0 * k3.dP + k4.dP);
    if (!finite(Xn) || !finite(Pn)) {
      traj.diverged = true;
      break;
    }
    X = Xn;
    P = Pn;
    traj.states.push_back({X, P, state0.t + static_cast<double>(i + 1) * h});
  }
  return traj;
}

std::vector<double> highres_residual(const FlowTrajectory& traj, const ObjectiveSpec& obj, double s, FlowForm form) {
  const auto& st = traj.states;
  if (st.size() < 3) throw std::invalid_argument("highres_residual: need at least 3 samples");
  if (!(s > 0.0)) throw std::invalid_argument("highres_residual: s must be positive");
  const double h = st[1].t - st[0].t;
  for (std::size_t i = 1; i < st.size(); ++i)
    if (std::abs((st[i].t - st[i - 1].t) - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw std::invalid_argument("highres_residual: samples are not evenly spaced");
  const double rs = std::sqrt(s);
  const double c = FlowParams{0, 0, 0, form}.prefactor();

  std::vector<double> out;
  out.reserve(st.size() - 2);
  for (std::size_t i = 1; i + 1 < st.size(); ++i) {
    const double t = st[i].t;
    const Eigen::VectorXd& X = st[i].X;
    const Eigen::VectorXd v = (st[i + 1].X - st[i - 1].X) / (2.0 * h);
    const Eigen::VectorXd a = (st[i + 1].X - 2.0 * X + st[i - 1].X) / (h * h);
    const Eigen::MatrixXd H = obj.hess(X);
    const Eigen::VectorXd r = a + (3.0 / t) * v + rs * (H * v) + (1.0 + 1.5 * rs / t) * obj.grad(X) -
                              (c * rs / (t * t * t)) * (H * st[i].P);
    out.push_back(r.norm());
  }
  return out;
}

}  // namespace classical
}  // namespace qhdlab
