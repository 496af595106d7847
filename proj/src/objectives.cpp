#include "qhdlab/objectives.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace qhdlab::objectives {

namespace {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

VectorXd vec2(double x, double y) { return Vector2d(x, y); }

// -sin(x) sin(a x^2)^m and its first two derivatives.
struct MichalewiczTerm {
  double a;
  int m = 20;

  double value(double x) const { return -std::sin(x) * std::pow(std::sin(a * x * x), m); }

  double d1(double x) const {
    const double u = std::sin(x), du = std::cos(x);
    const double w = std::sin(a * x * x), dw = 2.0 * a * x * std::cos(a * x * x);
    return -(du * std::pow(w, m) + m * u * std::pow(w, m - 1) * dw);
  }

  double d2(double x) const {
    const double u = std::sin(x), du = std::cos(x), ddu = -std::sin(x);
    const double s = std::sin(a * x * x), c = std::cos(a * x * x);
    const double w = s, dw = 2.0 * a * x * c, ddw = 2.0 * a * c - 4.0 * a * a * x * x * s;
    return -(ddu * std::pow(w, m) + 2.0 * m * du * std::pow(w, m - 1) * dw +
             m * (m - 1) * u * std::pow(w, m - 2) * dw * dw + m * u * std::pow(w, m - 1) * ddw);
  }
};

// Builds a 2D objective from a separable pair g(x) + g(y) style description.
ObjectiveSpec separable(std::string name, BoxDomain box, std::function<double(double)> gx,
                        std::function<double(double)> dgx, std::function<double(double)> ddgx,
                        std::function<double(double)> gy, std::function<double(double)> dgy,
                        std::function<double(double)> ddgy) {
  ObjectiveSpec s;
  s.name = std::move(name);
  s.dim = 2;
  s.box = std::move(box);
  s.f = [=](const VectorXd& x) { return gx(x[0]) + gy(x[1]); };
  s.grad = [=](const VectorXd& x) { return vec2(dgx(x[0]), dgy(x[1])); };
  s.hess = [=](const VectorXd& x) {
    MatrixXd h = MatrixXd::Zero(2, 2);
    h(0, 0) = ddgx(x[0]);
    h(1, 1) = ddgy(x[1]);
    return h;
  };
  return s;
}

ObjectiveSpec make_convex_quartic() {
  ObjectiveSpec s;
  s.name = "convex_quartic";
  s.dim = 2;
  s.box = cube(2, -5.0, 5.0);
  s.f = [](const VectorXd& x) {
    const double u = x[0] + x[1], w = x[0] - x[1];
    return std::pow(u, 4) / 256.0 + std::pow(w, 4) / 128.0;
  };
  s.grad = [](const VectorXd& x) {
    const double u = x[0] + x[1], w = x[0] - x[1];
    const double a = u * u * u / 64.0, b = w * w * w / 32.0;
    return vec2(a + b, a - b);
  };
  s.hess = [](const VectorXd& x) {
    const double u = x[0] + x[1], w = x[0] - x[1];
    const double a = 3.0 * u * u / 64.0, b = 3.0 * w * w / 32.0;
    MatrixXd h(2, 2);
    h << a + b, a - b, a - b, a + b;
    return h;
  };
  s.minimizers = {vec2(0.0, 0.0)};
  s.convex = true;
  return s;
}

ObjectiveSpec make_styblinski_tang() {
  // The y-part uses -16 y^2; only that reading gives the reported minimum.
  auto g = [](double x) { return 0.2 * (x * x * x * x - 16.0 * x * x + 5.0 * x); };
  auto dg = [](double x) { return 0.2 * (4.0 * x * x * x - 32.0 * x + 5.0); };
  auto ddg = [](double x) { return 0.2 * (12.0 * x * x - 32.0); };
  auto s = separable("styblinski_tang", cube(2, -5.0, 5.0), g, dg, ddg, g, dg, ddg);
  s.minimizers = {vec2(-2.9, -2.9)};
  return s;
}

ObjectiveSpec make_michalewicz() {
  const MichalewiczTerm tx{1.0 / kPi}, ty{2.0 / kPi};
  auto s = separable(
      "michalewicz", cube(2, 0.0, kPi), [tx](double x) { return tx.value(x); },
      [tx](double x) { return tx.d1(x); }, [tx](double x) { return tx.d2(x); },
      [ty](double y) { return ty.value(y); }, [ty](double y) { return ty.d1(y); },
      [ty](double y) { return ty.d2(y); });
  s.minimizers = {vec2(2.20, 1.57)};
  return s;
}

ObjectiveSpec make_cube_wave() {
  auto g = [](double x) {
    const double c = std::cos(kPi * x);
    return c * c + 0.25 * x * x * x * x;
  };
  auto dg = [](double x) { return -kPi * std::sin(2.0 * kPi * x) + x * x * x; };
  auto ddg = [](double x) { return -2.0 * kPi * kPi * std::cos(2.0 * kPi * x) + 3.0 * x * x; };
  auto s = separable("cube_wave", cube(2, -2.0, 2.0), g, dg, ddg, g, dg, ddg);
  s.minimizers = {vec2(0.5, 0.5), vec2(-0.5, 0.5), vec2(0.5, -0.5), vec2(-0.5, -0.5)};
  return s;
}

ObjectiveSpec make_rastrigin() {
  auto g = [](double x) { return x * x - 10.0 * std::cos(2.0 * kPi * x) + 10.0; };
  auto dg = [](double x) { return 2.0 * x + 20.0 * kPi * std::sin(2.0 * kPi * x); };
  auto ddg = [](double x) { return 2.0 + 40.0 * kPi * kPi * std::cos(2.0 * kPi * x); };
  auto s = separable("rastrigin", cube(2, -3.0, 3.0), g, dg, ddg, g, dg, ddg);
  s.minimizers = {vec2(0.0, 0.0)};
  return s;
}

// Refines the rounded minimizers, fixes f_min, and checks the registry invariants.
ObjectiveSpec finalize(ObjectiveSpec s) {
  for (auto& m : s.minimizers) m = refine_minimizer(s, m);
  s.f_min = s.f(s.minimizers.front());
  for (const auto& m : s.minimizers) {
    if (!s.box.contains(m)) throw std::logic_error(s.name + ": minimizer outside the box");
    if (s.f(m) - s.f_min > 1e-9 * (1.0 + std::abs(s.f_min)))
      throw std::logic_error(s.name + ": listed minimizers disagree on f_min");
  }
  if (check_gradient(s, 100, 0x5eed).max_grad_deviation > 1e-6)
    throw std::logic_error(s.name + ": analytic gradient disagrees with finite differences");
  return s;
}

const std::map<std::string, ObjectiveSpec, std::less<>>& registry() {
  static const std::map<std::string, ObjectiveSpec, std::less<>> reg = [] {
    std::map<std::string, ObjectiveSpec, std::less<>> r;
    for (auto make : {make_convex_quartic, make_styblinski_tang, make_michalewicz, make_cube_wave, make_rastrigin}) {
      auto s = finalize(make());
      r.emplace(s.name, std::move(s));
    }
    return r;
  }();
  return reg;
}

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"convex_quartic", "styblinski_tang", "michalewicz", "cube_wave",
                                          "rastrigin"};
  return n;
}

ObjectiveSpec get(std::string_view name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
  return it->second;
}

ObjectiveSpec center(const ObjectiveSpec& obj, std::size_t which_min) {
  if (which_min >= obj.minimizers.size())
    throw std::out_of_range("center: minimizer index " + std::to_string(which_min) + " out of range");
  const VectorXd xs = obj.minimizers[which_min];
  const double fs = obj.f(xs);
  ObjectiveSpec c = obj;
  c.name = obj.name + "_centered";
  c.box = {obj.box.lo - xs, obj.box.hi - xs};
  c.f = [f = obj.f, xs, fs](const VectorXd& x) { return f(x + xs) - fs; };
  c.grad = [g = obj.grad, xs](const VectorXd& x) { return g(x + xs); };
  c.hess = [h = obj.hess, xs](const VectorXd& x) { return h(x + xs); };
  c.minimizers.clear();
  for (const auto& m : obj.minimizers) c.minimizers.push_back(m - xs);
  // Keep the chosen minimizer first so that minimizers.front() is the origin.
  std::swap(c.minimizers.front(), c.minimizers[which_min]);
  c.f_min = 0.0;
  return c;
}

ObjectiveFields eval_fields(const ObjectiveSpec& obj, const GridPtr& grid) {
  if (grid->dim() != obj.dim) throw std::invalid_argument("eval_fields: dimension mismatch");
  const BoxDomain& gb = grid->box();
  for (int j = 0; j < obj.dim; ++j) {
    const double tol = 1e-12 * (obj.box.hi[j] - obj.box.lo[j]);
    if (gb.lo[j] < obj.box.lo[j] - tol || gb.hi[j] > obj.box.hi[j] + tol)
      throw std::invalid_argument("eval_fields: grid box is not inside the objective box");
  }
  const Eigen::Index n = grid->size();
  ObjectiveFields out{{grid, Eigen::ArrayXd(n)}, {}, {grid, Eigen::ArrayXd::Zero(n)}};
  for (int j = 0; j < obj.dim; ++j) out.grad.push_back({grid, Eigen::ArrayXd(n)});
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd x = grid->node(i);
    out.f.val[i] = obj.f(x);
    const VectorXd g = obj.grad(x);
    for (int j = 0; j < obj.dim; ++j) out.grad[j].val[i] = g[j];
  }
  for (int j = 0; j < obj.dim; ++j) out.gradnorm_sq.val += out.grad[j].val.square();
  return out;
}

GradientReport check_gradient(const ObjectiveSpec& obj, int n_points, std::uint64_t seed) {
  if (n_points < 1) throw std::invalid_argument("check_gradient: n_points must be >= 1");
  GradientReport rep;
  rep.n_points = n_points;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const VectorXd width = obj.box.width();
  const VectorXd step = 1e-5 * width;
  for (int p = 0; p < n_points; ++p) {
    VectorXd x(obj.dim);
    for (int j = 0; j < obj.dim; ++j) x[j] = obj.box.lo[j] + 2.0 * step[j] + unit(rng) * (width[j] - 4.0 * step[j]);
    const VectorXd g = obj.grad(x);
    const MatrixXd h = obj.hess(x);
    VectorXd g_fd(obj.dim);
    MatrixXd h_fd(obj.dim, obj.dim);
    for (int j = 0; j < obj.dim; ++j) {
      VectorXd xp = x, xm = x;
      xp[j] += step[j];
      xm[j] -= step[j];
      g_fd[j] = (obj.f(xp) - obj.f(xm)) / (2.0 * step[j]);
      h_fd.col(j) = (obj.grad(xp) - obj.grad(xm)) / (2.0 * step[j]);
    }
    const double gdev = (g - g_fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    const double hdev = (h - h_fd).cwiseAbs().maxCoeff() / std::max(1.0, h.cwiseAbs().maxCoeff());
    rep.max_grad_deviation = std::max(rep.max_grad_deviation, gdev);
    rep.max_hess_deviation = std::max(rep.max_hess_deviation, hdev);
  }
  return rep;
}

VectorXd refine_minimizer(const ObjectiveSpec& obj, VectorXd x, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd g = obj.grad(x);
    if (g.norm() < 1e-15) break;
    const MatrixXd h = obj.hess(x);
    Eigen::LDLT<MatrixXd> ldlt(h);
    VectorXd dir = (ldlt.info() == Eigen::Success && ldlt.isPositive()) ? VectorXd(-ldlt.solve(g)) : VectorXd(-g);
    const double f0 = obj.f(x);
    double lambda = 1.0;
    VectorXd next = x + dir;
    while (lambda > 1e-12 && !(obj.f(next) <= f0)) {
      lambda *= 0.5;
      next = x + lambda * dir;
    }
    if ((next - x).norm() < 1e-16 * (1.0 + x.norm())) break;
    x = next;
  }
  return x;
}

}  // namespace qhdlab::objectives
