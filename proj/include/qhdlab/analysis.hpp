#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qhdlab/metrics.hpp"
#include "qhdlab/objectives.hpp"
#include "qhdlab/spectral_mesh.hpp"

namespace qhdlab::analysis {

/// Node-wise data needed to score a quantum state against an objective.
struct ObservableFields {
  ScalarField f;
  ScalarField gradnorm_sq;
  Eigen::ArrayXd success_mask;  // 1 where f - f_min <= delta
  double f_min = 0.0;
  double delta = 1.0;
};

ObservableFields observable_fields(const ObjectiveSpec& obj, const ObjectiveFields& fields, double delta);

/// exp_f, exp_gradnorm_sq and success_prob of a normalized state.
MetricRecord observables(const WaveFunction& wf, const ObservableFields& fields);
MetricRecord observables(const WaveFunction& wf, const ObjectiveSpec& obj, double delta);

/// Probability mass on nodes with f - f_min > delta.
double failure_mass(const WaveFunction& wf, const ObservableFields& fields);

/// E(t) = 1/2 sum_j |(t^-2 p_j + alpha t v_j + 2 x_j) psi|^2 + (t^2 + omega t) <f>.
/// The objective must be centered (minimizer at the origin, f_min = 0).
double lyapunov_E(const WaveFunction& wf, const ObjectiveSpec& obj_centered, const HamiltonianParams& params,
                  double t);
/// F(t) = E(t) + (beta/2) t^2 <G>.
double lyapunov_F(const WaveFunction& wf, const ObjectiveSpec& obj_centered, const HamiltonianParams& params,
                  double t);

/// Precomputed-field variants used inside time loops.
double lyapunov_E(const WaveFunction& wf, const ObjectiveFields& fields, const HamiltonianParams& params, double t);
double lyapunov_F(const WaveFunction& wf, const ObjectiveFields& fields, const HamiltonianParams& params, double t);

struct BoundConstants {
  double K0 = 0.0;
  double D0 = 0.0;
  double D0prime = 0.0;
};

/// K0 = T0^-4 sum_j |p_j psi0|^2, D0 = E[G + 4|x|^2 + (T0^2 + omega T0) f],
/// D0' = E[2G + 4|x|^2 + (T0^2 + omega T0) f].
BoundConstants bound_constants(const WaveFunction& wf0, const ObjectiveSpec& obj_centered,
                               const HamiltonianParams& params, double T0);

/// <T0^-4 (-Laplacian) + alpha^2 T0^2 G + 4|x|^2> + (T0^2 + omega T0) <f>, the
/// expanded upper bound on E(T0).
double lyapunov_E_expansion_bound(const WaveFunction& wf0, const ObjectiveSpec& obj_centered,
                                  const HamiltonianParams& params, double T0);

struct Violation {
  std::size_t index = 0;
  double relative_increase = 0.0;
};

/// Flags every consecutive pair with v[k+1] > v[k] (1 + rel_tol) + 1e-9.
std::vector<Violation> monotonicity_check(const std::vector<std::pair<double, double>>& series, double rel_tol);

/// Least-squares slope of log(value) against log(t) over t_lo <= t <= t_hi.
double rate_fit(const std::vector<std::pair<double, double>>& series, std::pair<double, double> t_window);

enum class LyapunovWhich { E, F };

struct LyapunovReport {
  LyapunovWhich which = LyapunovWhich::E;
  std::vector<double> values;
  std::vector<Violation> violations;
  BoundConstants constants;
  double rel_tol = 1e-3;
};

/// Largest value of G(x) - grad G(x) . x over the grid nodes; the gradient-norm
/// Lyapunov argument needs it to be <= 0.
double gradient_norm_condition(const ObjectiveSpec& obj, const GridPtr& grid);

// ---------------------------------------------------------------------------
// Commutation relations on dense discretizations.

/// A smooth periodic test potential with its first two derivatives.
struct PeriodicFunction {
  std::string name = "sin";
  std::function<double(double)> f = [](double x) { return std::sin(x); };
  std::function<double(double)> df = [](double x) { return std::cos(x); };
  std::function<double(double)> d2f = [](double x) { return -std::sin(x); };
  double lo = 0.0;
  double hi = 2.0 * 3.14159265358979323846;
};

struct IdentityCheck {
  std::string name;
  /// "full" = operator identity on the band-limited subspace,
  /// "weak" = applied to interior-localized test vectors,
  /// "exact" = unrestricted full matrix.
  std::string regime;
  double residual = 0.0;
  double tolerance = 0.0;
  /// Unrestricted full-matrix residual, reported for the band-limited checks.
  std::optional<double> unrestricted_residual;
  bool pass() const { return residual <= tolerance; }
};

struct CommutatorReport {
  int n = 0;
  double alpha = 0.0;
  double t = 0.0;
  std::vector<IdentityCheck> checks;
  bool all_pass() const;
};

CommutatorReport commutator_verify(int n, const PeriodicFunction& f_choice, double alpha, double t);

}  // namespace qhdlab::analysis
