#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qhdlab/metrics.hpp"
#include "qhdlab/objectives.hpp"
#include "qhdlab/spectral_mesh.hpp"

namespace qhdlab {

/// Raised when a propagator cannot meet its accuracy target.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepReport {
  int k = 0;
  double t_k = 0.0;
  double norm_drift = 0.0;
  int lanczos_dim = 0;
  int lanczos_substeps = 0;
  bool renormalized = false;
  std::int64_t wall_ns = 0;
};

struct LanczosOptions {
  double tol = 1e-10;
  int max_dim = 48;
  /// Upper bound on the number of equal sub-intervals the exponential may be
  /// split into when one Krylov space of max_dim does not reach tol.
  int max_substeps = 64;
};

struct LanczosResult {
  WaveFunction wf;
  int dim_used = 0;
  int substeps = 1;
  bool renormalized = false;
};

namespace evolution {

/// Applies M = 1/2 sum_j (p_j v_j + v_j p_j) to raw amplitudes.
Eigen::VectorXcd apply_mixed_operator(const Grid& grid, const std::vector<ScalarField>& grad,
                                      const Eigen::VectorXcd& psi);

/// exp(-i h_eff M) wf by Hermitian Lanczos with full reorthogonalization.
/// Throws ConvergenceError if neither one Krylov space nor max_substeps
/// sub-intervals reach the residual tolerance.
LanczosResult mixed_step_lanczos(const WaveFunction& wf, double h_eff, const std::vector<ScalarField>& grad_fields,
                                 const LanczosOptions& opts = {});

/// One product-formula step exp(-ihH1) exp(-ihH2) exp(-ihH3) at time t_k:
/// potential phase first, then the mixed term, then the kinetic phase.
std::pair<WaveFunction, StepReport> step(const WaveFunction& wf, const HamiltonianParams& params,
                                         const ObjectiveFields& fields, double t_k, const LanczosOptions& opts = {});

/// Exact inverse of step(): the three factors in reverse order with -h.
WaveFunction step_adjoint(const WaveFunction& wf, const HamiltonianParams& params, const ObjectiveFields& fields,
                          double t_k, const LanczosOptions& opts = {});

enum class LyapunovKind { None, E, F };

struct EvolveOptions {
  double delta = 1.0;
  LyapunovKind lyapunov = LyapunovKind::None;
  LanczosOptions lanczos{};
};

struct EvolveResult {
  WaveFunction final_state;
  MetricsSeries series;
  double max_norm_drift = 0.0;
  int max_lanczos_dim = 0;
  int max_lanczos_substeps = 0;
  int renormalizations = 0;
  std::int64_t wall_ns = 0;
};

/// Runs k = 1..K with t_k = t0 + k h and records observables every
/// observe_every steps and at k = K. Lyapunov values need a centered objective.
EvolveResult evolve(const WaveFunction& wf0, const HamiltonianParams& params, const ObjectiveSpec& obj,
                    int observe_every, const EvolveOptions& opts = {});

/// Dense N x N Hamiltonian of a 1D grid:
/// L/(2t^3) + (alpha/2)(PV + VP) + ((alpha^2+beta)/2) t^3 diag(G) + (t^3 + gamma t^2) diag(f),
/// with L the spectral Laplacian multiplier and P the spectral momentum.
Eigen::MatrixXcd dense_hamiltonian(const Grid& grid, const ObjectiveSpec& obj, const HamiltonianParams& params,
                                   double t);

/// Unitary DFT matrix and spectral operators of a 1D grid.
Eigen::MatrixXcd dft_matrix(int n);
Eigen::MatrixXcd dense_momentum(const Grid& grid);
Eigen::MatrixXcd dense_laplacian_multiplier(const Grid& grid);

/// exp(-i h H) v for Hermitian H via its eigendecomposition.
Eigen::VectorXcd hermitian_expm_apply(const Eigen::MatrixXcd& H, double h, const Eigen::VectorXcd& v);

/// exp(-i h H(t)) wf with the dense Hamiltonian above.
WaveFunction reference_step_dense(const WaveFunction& wf, const ObjectiveSpec& obj, const HamiltonianParams& params,
                                  double t, double h);

}  // namespace evolution
}  // namespace qhdlab
