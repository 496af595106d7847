#include "qhdlab/analysis.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace qhdlab::analysis {

namespace {

void require_normalized(const WaveFunction& wf, const char* what) {
  const double n2 = wf.norm_sq();
  if (std::abs(n2 - 1.0) > 1e-8)
    throw std::domain_error(std::string(what) + ": state is not normalized (norm^2 = " + std::to_string(n2) + ")");
}

void require_centered(const ObjectiveSpec& obj, const char* what) {
  if (obj.f_min != 0.0 || obj.minimizers.empty() || obj.minimizers.front().norm() > 1e-12)
    throw std::invalid_argument(std::string(what) + ": objective must be centered (x* = 0, f* = 0)");
}

// 1/2 sum_j |(t^-2 p_j + alpha t v_j + 2 x_j) psi|^2
double squared_operator_term(const WaveFunction& wf, const ObjectiveFields& fields, double alpha, double t) {
  const Grid& grid = *wf.grid;
  double total = 0.0;
  for (int j = 0; j < grid.dim(); ++j) {
    Eigen::VectorXcd p = wf.amp;
    apply_momentum(grid, p, j);
    const Eigen::ArrayXd mult = alpha * t * fields.grad[j].val + 2.0 * grid.coordinate(j);
    const Eigen::VectorXcd b = p / (t * t) + (mult * wf.amp.array()).matrix();
    total += 0.5 * b.squaredNorm();
  }
  return total;
}

double weighted(const WaveFunction& wf, const Eigen::ArrayXd& val) { return (val * wf.amp.array().abs2()).sum(); }

Eigen::ArrayXd radius_sq(const Grid& grid) {
  Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(grid.size());
  for (int j = 0; j < grid.dim(); ++j) r2 += grid.coordinate(j).square();
  return r2;
}

double kinetic_sum(const WaveFunction& wf) {
  double k = 0.0;
  for (int j = 0; j < wf.grid->dim(); ++j) k += partial_derivative(wf, j).norm_sq();
  return k;
}

}  // namespace

ObservableFields observable_fields(const ObjectiveSpec& obj, const ObjectiveFields& fields, double delta) {
  ObservableFields o{fields.f, fields.gradnorm_sq, {}, obj.f_min, delta};
  o.success_mask = ((fields.f.val - obj.f_min) <= delta).cast<double>();
  return o;
}

MetricRecord observables(const WaveFunction& wf, const ObservableFields& fields) {
  require_normalized(wf, "observables");
  require_same_grid(*wf.grid, *fields.f.grid, "observables");
  const Eigen::ArrayXd prob = wf.amp.array().abs2();
  MetricRecord r;
  r.exp_f = (fields.f.val * prob).sum();
  r.exp_gradnorm_sq = (fields.gradnorm_sq.val * prob).sum();
  r.success_prob = std::clamp((fields.success_mask * prob).sum(), 0.0, 1.0);
  r.norm_drift = std::abs(wf.norm_sq() - 1.0);
  return r;
}

MetricRecord observables(const WaveFunction& wf, const ObjectiveSpec& obj, double delta) {
  const ObjectiveFields fields = objectives::eval_fields(obj, wf.grid);
  return observables(wf, observable_fields(obj, fields, delta));
}

double failure_mass(const WaveFunction& wf, const ObservableFields& fields) {
  return ((1.0 - fields.success_mask) * wf.amp.array().abs2()).sum();
}

double lyapunov_E(const WaveFunction& wf, const ObjectiveFields& fields, const HamiltonianParams& params, double t) {
  require_normalized(wf, "lyapunov_E");
  if (!(t > 0.0)) throw std::invalid_argument("lyapunov_E: t must be positive");
  return squared_operator_term(wf, fields, params.alpha, t) + (t * t + params.omega() * t) * weighted(wf, fields.f.val);
}

double lyapunov_F(const WaveFunction& wf, const ObjectiveFields& fields, const HamiltonianParams& params, double t) {
  return lyapunov_E(wf, fields, params, t) + 0.5 * params.beta * t * t * weighted(wf, fields.gradnorm_sq.val);
}

double lyapunov_E(const WaveFunction& wf, const ObjectiveSpec& obj_centered, const HamiltonianParams& params,
                  double t) {
  require_centered(obj_centered, "lyapunov_E");
  return lyapunov_E(wf, objectives::eval_fields(obj_centered, wf.grid), params, t);
}

double lyapunov_F(const WaveFunction& wf, const ObjectiveSpec& obj_centered, const HamiltonianParams& params,
                  double t) {
  require_centered(obj_centered, "lyapunov_F");
  return lyapunov_F(wf, objectives::eval_fields(obj_centered, wf.grid), params, t);
}

BoundConstants bound_constants(const WaveFunction& wf0, const ObjectiveSpec& obj_centered,
                               const HamiltonianParams& params, double T0) {
  require_centered(obj_centered, "bound_constants");
  require_normalized(wf0, "bound_constants");
  if (!(T0 > 0.0)) throw std::invalid_argument("bound_constants: T0 must be positive");
  const ObjectiveFields fields = objectives::eval_fields(obj_centered, wf0.grid);
  const double grad = weighted(wf0, fields.gradnorm_sq.val);
  const double pos = 4.0 * weighted(wf0, radius_sq(*wf0.grid));
  const double fterm = (T0 * T0 + params.omega() * T0) * weighted(wf0, fields.f.val);
  BoundConstants c;
  c.K0 = kinetic_sum(wf0) / std::pow(T0, 4);
  c.D0 = grad + pos + fterm;
  c.D0prime = 2.0 * grad + pos + fterm;
  return c;
}

double lyapunov_E_expansion_bound(const WaveFunction& wf0, const ObjectiveSpec& obj_centered,
                                  const HamiltonianParams& params, double T0) {
  require_centered(obj_centered, "lyapunov_E_expansion_bound");
  require_normalized(wf0, "lyapunov_E_expansion_bound");
  const ObjectiveFields fields = objectives::eval_fields(obj_centered, wf0.grid);
  const double a = params.alpha;
  return kinetic_sum(wf0) / std::pow(T0, 4) + a * a * T0 * T0 * weighted(wf0, fields.gradnorm_sq.val) +
         4.0 * weighted(wf0, radius_sq(*wf0.grid)) + (T0 * T0 + params.omega() * T0) * weighted(wf0, fields.f.val);
}

std::vector<Violation> monotonicity_check(const std::vector<std::pair<double, double>>& series, double rel_tol) {
  if (series.size() < 2) throw std::invalid_argument("monotonicity_check: need at least two samples");
  std::vector<Violation> out;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double prev = series[i].second, next = series[i + 1].second;
    if (next > prev + std::abs(prev) * rel_tol + 1e-9)
      out.push_back({i + 1, (next - prev) / std::max(std::abs(prev), 1e-300)});
  }
  return out;
}

double rate_fit(const std::vector<std::pair<double, double>>& series, std::pair<double, double> t_window) {
  std::vector<double> lx, ly;
  for (const auto& [t, v] : series) {
    if (t < t_window.first || t > t_window.second) continue;
    if (!(v > 0.0) || !(t > 0.0)) throw std::invalid_argument("rate_fit: values and times must be positive");
    lx.push_back(std::log(t));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 5) throw std::invalid_argument("rate_fit: fewer than 5 samples in the window");
  const Eigen::Map<const Eigen::ArrayXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
  const Eigen::Map<const Eigen::ArrayXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x - mx).square().sum();
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: window spans a single time");
  return ((x - mx) * (y - my)).sum() / sxx;
}

double gradient_norm_condition(const ObjectiveSpec& obj, const GridPtr& grid) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid->size(); ++i) {
    const Eigen::VectorXd x = grid->node(i);
    const Eigen::VectorXd g = obj.grad(x);
    const Eigen::VectorXd grad_G = 2.0 * obj.hess(x) * g;
    worst = std::max(worst, g.squaredNorm() - grad_G.dot(x));
  }
  return worst;
}

}  // namespace qhdlab::analysis
