#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qhdlab/spectral_mesh.hpp"

namespace qhdlab {

/// A benchmark objective: evaluators, search box and the known optimum.
struct ObjectiveSpec {
  std::string name;
  int dim = 0;
  BoxDomain box;
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
  std::vector<Eigen::VectorXd> minimizers;
  double f_min = 0.0;
  bool convex = false;
};

/// Objective values sampled on every node of a grid.
struct ObjectiveFields {
  ScalarField f;
  std::vector<ScalarField> grad;
  ScalarField gradnorm_sq;
};

namespace objectives {

/// Registry names, in a stable order.
const std::vector<std::string>& names();

/// Built-in objective by name; throws std::invalid_argument for unknown names.
ObjectiveSpec get(std::string_view name);

/// Translated objective f(x + x*) - f(x*) with its minimizer at the origin.
ObjectiveSpec center(const ObjectiveSpec& obj, std::size_t which_min = 0);

/// Evaluates f, grad f and |grad f|^2 node-wise. The grid box must lie inside
/// the objective box.
ObjectiveFields eval_fields(const ObjectiveSpec& obj, const GridPtr& grid);

struct GradientReport {
  int n_points = 0;
  std::uint64_t seed = 0;
  double max_grad_deviation = 0.0;
  double max_hess_deviation = 0.0;
};

/// Compares analytic derivatives with central differences (step 1e-5 of the
/// box width) at uniformly drawn interior points. Deviations are
/// max-norm errors relative to max(1, max-norm of the analytic value).
GradientReport check_gradient(const ObjectiveSpec& obj, int n_points, std::uint64_t seed);

/// Damped Newton iteration on the analytic gradient and Hessian.
Eigen::VectorXd refine_minimizer(const ObjectiveSpec& obj, Eigen::VectorXd x, int max_iter = 100);

}  // namespace objectives
}  // namespace qhdlab
