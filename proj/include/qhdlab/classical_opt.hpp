#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhdlab/metrics.hpp"
#include "qhdlab/objectives.hpp"

namespace qhdlab {

struct SgdmConfig {
  double s0 = 0.01;
  int K = 100;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct NagConfig {
  double s = 0.01;
  int K = 100;
  std::uint64_t seed = 0;
  /// Start the extrapolated sequence at y0 = 0 instead of y0 = x0.
  bool y0_zero = false;
  void validate() const;
};

/// Iterates x_0..x_K and f(x_0)..f(x_K) of one optimizer run.
struct RunRecord {
  std::vector<Eigen::VectorXd> iterates;
  std::vector<double> f_values;
  std::uint64_t seed = 0;
};

/// A run hit a non-finite value. `iteration` is the first bad k.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(int iteration, const std::string& what) : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

struct ClassicalState {
  Eigen::VectorXd X;
  Eigen::VectorXd P;
  double t = 0.0;
};

/// Prefactor of P in the position equation: 1/(2t^3) as printed, or the
/// 1/t^3 that the Legendre transform of the Lagrangian gives.
enum class FlowForm { Printed, Legendre };

struct FlowParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  FlowForm form = FlowForm::Printed;
  double prefactor() const { return form == FlowForm::Printed ? 0.5 : 1.0; }
};

struct FlowTrajectory {
  std::vector<ClassicalState> states;
  /// Set when integration stopped at a non-finite state; states ends with
  /// the last finite one.
  bool diverged = false;
  double dt = 0.0;
};

namespace classical {

/// eta_k = 0.5 + 0.4 k / K and s_k = s0 / k.
double sgdm_momentum(int k, int K);
double sgdm_step(double s0, int k);

/// v_k = eta_k v_{k-1} - (1 - eta_k) s_k g_k, x_k = x_{k-1} + v_k, v_0 = 0,
/// g_k = grad f(x_{k-1}) + N(0, noise_std^2 I) from a stream seeded by cfg.seed.
RunRecord sgdm_run(const ObjectiveSpec& obj, const SgdmConfig& cfg, const Eigen::VectorXd& x0);

/// x_k = y_{k-1} - s grad f(y_{k-1}), y_k = x_k + (k-1)/(k+2) (x_k - x_{k-1}).
RunRecord nag_run(const ObjectiveSpec& obj, const NagConfig& cfg, const Eigen::VectorXd& x0);

/// Seed of run `index` in an ensemble; depends only on its arguments.
std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t index);

enum class Optimizer { Sgdm, Nag };

struct EnsembleConfig {
  Optimizer optimizer = Optimizer::Nag;
  SgdmConfig sgdm{};
  NagConfig nag{};
  int n_runs = 1000;
  std::uint64_t master_seed = 0;
  double delta = 1.0;
  /// Worker count; 0 means the hardware concurrency. QHD_LAB_THREADS caps either.
  int threads = 0;
};

struct EnsembleResult {
  /// Sample means over the surviving runs for k = 1..K (t = k).
  MetricsSeries series;
  int n_runs = 0;
  int failed_runs = 0;
};

/// Runs n_runs independent optimizations from uniform draws in obj.box.
/// Results do not depend on the number of workers or their scheduling.
EnsembleResult ensemble(const ObjectiveSpec& obj, const EnsembleConfig& cfg);

/// `requested` workers (hardware concurrency when 0), capped by QHD_LAB_THREADS.
int worker_count(int requested);

/// Classical RK4 on X' = c P / t^3 + alpha grad f,
/// P' = -H (alpha P + (alpha^2 + beta) t^3 grad f) - (t^3 + gamma t^2) grad f,
/// from state0.t to T. dt is shrunk so that a whole number of steps lands on T.
FlowTrajectory ham_flow_rk4(const ObjectiveSpec& obj, const FlowParams& params, const ClassicalState& state0, double T,
                            double dt);

/// Residual norm of X'' + (3/t) X' + sqrt(s) H X' + (1 + 3 sqrt(s)/(2t)) grad f - c sqrt(s) t^-3 H P
/// at every interior sample, with X' and X'' from central differences.
/// c is the position-equation prefactor of `form`.
std::vector<double> highres_residual(const FlowTrajectory& traj, const ObjectiveSpec& obj, double s,
                                     FlowForm form = FlowForm::Legendre);

}  // namespace classical
}  // namespace qhdlab
