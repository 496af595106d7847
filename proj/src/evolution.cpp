#include "qhdlab/evolution.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "qhdlab/analysis.hpp"

namespace qhdlab {

void HamiltonianParams::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size h must be positive");
  if (K < 1) throw std::invalid_argument("iteration count K must be >= 1");
  if (!(t0 >= 0.0)) throw std::invalid_argument("initial time t0 must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
    throw std::invalid_argument("alpha, beta, gamma must be finite");
}

namespace evolution {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr Complex kI{0.0, 1.0};

struct KrylovAttempt {
  bool converged = false;
  VectorXcd result;
  int dim = 0;
};

// exp(-i h M) psi in one Krylov space, or a failure flag.
KrylovAttempt krylov_expm(const Grid& grid, const std::vector<ScalarField>& grad, const VectorXcd& psi, double h,
                          const LanczosOptions& opts) {
  const double beta0 = psi.norm();
  if (beta0 == 0.0 || h == 0.0) return {true, psi, 0};

  // Orthonormal Krylov basis, one column per vector.
  MatrixXcd V(psi.size(), opts.max_dim + 1);
  V.col(0) = psi / beta0;
  std::vector<double> diag, offdiag;

  for (int j = 0; j < opts.max_dim; ++j) {
    VectorXcd w = apply_mixed_operator(grid, grad, V.col(j));
    const double a = V.col(j).dot(w).real();
    diag.push_back(a);
    // Two passes of block Gram-Schmidt keep the basis orthogonal to rounding.
    for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
    const double b = w.norm();

    const int m = j + 1;
    MatrixXd T = MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = diag[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = offdiag[i];
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
    const VectorXcd phase = (-kI * h * es.eigenvalues().cast<Complex>()).array().exp();
    const VectorXcd y = es.eigenvectors().cast<Complex>() *
                        (phase.array() * es.eigenvectors().row(0).transpose().cast<Complex>().array()).matrix();

    const double scale = std::abs(a) + (j > 0 ? offdiag[j - 1] : 0.0);
    const bool invariant = b <= 1e-14 * std::max(scale, 1e-300);
    if (b * std::abs(y[m - 1]) <= opts.tol || invariant) return {true, beta0 * (V.leftCols(m) * y), m};
    offdiag.push_back(b);
    V.col(j + 1) = w / b;
  }
  return {false, {}, opts.max_dim};
}

// Applies exp(-i h M) as `pieces` equal sub-intervals; false if any fails.
bool krylov_pieces(const Grid& grid, const std::vector<ScalarField>& grad, VectorXcd& psi, double h, int pieces,
                   const LanczosOptions& opts, int& dim_used) {
  VectorXcd work = psi;
  int dim = 0;
  for (int p = 0; p < pieces; ++p) {
    KrylovAttempt att = krylov_expm(grid, grad, work, h / pieces, opts);
    if (!att.converged) return false;
    dim = std::max(dim, att.dim);
    work = std::move(att.result);
  }
  psi = std::move(work);
  dim_used = dim;
  return true;
}

void check_normalized(const WaveFunction& wf, const char* what) {
  const double n2 = wf.norm_sq();
  if (std::abs(n2 - 1.0) > 1e-8)
    throw std::domain_error(std::string(what) + ": state is not normalized (norm^2 = " + std::to_string(n2) + ")");
}

void potential_phase(VectorXcd& amp, const HamiltonianParams& p, const ObjectiveFields& fields, double t, double h) {
  const double t3 = t * t * t;
  const double c_grad = 0.5 * (p.alpha * p.alpha + p.beta) * t3;
  const double c_f = t3 + p.gamma * t * t;
  const Eigen::ArrayXd& f = fields.f.val;
  const Eigen::ArrayXd& g = fields.gradnorm_sq.val;
  for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] *= std::polar(1.0, -h * (c_grad * g[i] + c_f * f[i]));
}

void kinetic_phase(const Grid& grid, VectorXcd& amp, double t, double h) {
  const double c = h / (2.0 * t * t * t);
  const Eigen::ArrayXd& k2 = grid.wavenumber_sq();
  grid.forward(amp);
  for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] *= std::polar(1.0, -c * k2[i]);
  grid.inverse(amp);
}

}  // namespace

VectorXcd apply_mixed_operator(const Grid& grid, const std::vector<ScalarField>& grad, const VectorXcd& psi) {
  VectorXcd out = VectorXcd::Zero(psi.size());
  for (int j = 0; j < static_cast<int>(grad.size()); ++j) {
    const Eigen::ArrayXd& v = grad[j].val;
    VectorXcd vpsi = (v * psi.array()).matrix();
    apply_momentum(grid, vpsi, j);
    VectorXcd ppsi = psi;
    apply_momentum(grid, ppsi, j);
    out += 0.5 * (vpsi + (v * ppsi.array()).matrix());
  }
  return out;
}

LanczosResult mixed_step_lanczos(const WaveFunction& wf, double h_eff, const std::vector<ScalarField>& grad_fields,
                                 const LanczosOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("mixed_step_lanczos: tol must be positive");
  if (static_cast<int>(grad_fields.size()) != wf.grid->dim())
    throw std::invalid_argument("mixed_step_lanczos: need one gradient field per axis");
  for (const auto& g : grad_fields) require_same_grid(*wf.grid, *g.grid, "mixed_step_lanczos");

  LanczosResult res{wf, 0, 1, false};
  if (h_eff == 0.0) return res;

  int pieces = 1;
  while (!krylov_pieces(*wf.grid, grad_fields, res.wf.amp, h_eff, pieces, opts, res.dim_used)) {
    pieces *= 2;
    if (pieces > opts.max_substeps)
      throw ConvergenceError("mixed step: Krylov dimension " + std::to_string(opts.max_dim) +
                             " with " + std::to_string(opts.max_substeps) +
                             " sub-intervals does not reach tol; step size is too large for the gradient field");
  }
  res.substeps = pieces;

  const double before = wf.norm_sq();
  const double after = res.wf.norm_sq();
  if (std::abs(after - before) > 1e-12) {
    res.wf.amp *= std::sqrt(before / after);
    res.renormalized = true;
  }
  return res;
}

std::pair<WaveFunction, StepReport> step(const WaveFunction& wf, const HamiltonianParams& params,
                                         const ObjectiveFields& fields, double t_k, const LanczosOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!(t_k > 0.0)) throw std::invalid_argument("step: t_k must be positive (kinetic term scales as 1/t^3)");
  check_normalized(wf, "step");
  require_same_grid(*wf.grid, *fields.f.grid, "step");

  StepReport rep;
  rep.t_k = t_k;
  WaveFunction out = wf;
  potential_phase(out.amp, params, fields, t_k, params.h);
  if (params.alpha != 0.0) {
    LanczosResult mixed = mixed_step_lanczos(out, params.h * params.alpha, fields.grad, opts);
    out = std::move(mixed.wf);
    rep.lanczos_dim = mixed.dim_used;
    rep.lanczos_substeps = mixed.substeps;
    rep.renormalized = mixed.renormalized;
  }
  kinetic_phase(*out.grid, out.amp, t_k, params.h);
  rep.norm_drift = std::abs(out.norm_sq() - 1.0);
  rep.wall_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return {std::move(out), rep};
}

WaveFunction step_adjoint(const WaveFunction& wf, const HamiltonianParams& params, const ObjectiveFields& fields,
                          double t_k, const LanczosOptions& opts) {
  if (!(t_k > 0.0)) throw std::invalid_argument("step_adjoint: t_k must be positive");
  WaveFunction out = wf;
  kinetic_phase(*out.grid, out.amp, t_k, -params.h);
  if (params.alpha != 0.0) out = mixed_step_lanczos(out, -params.h * params.alpha, fields.grad, opts).wf;
  potential_phase(out.amp, params, fields, t_k, -params.h);
  return out;
}

EvolveResult evolve(const WaveFunction& wf0, const HamiltonianParams& params, const ObjectiveSpec& obj,
                    int observe_every, const EvolveOptions& opts) {
  params.validate();
  if (observe_every < 1) throw std::invalid_argument("evolve: observe_every must be >= 1");
  if (!(wf0.grid->box() == obj.box)) throw std::invalid_argument("evolve: grid box must equal the objective box");
  check_normalized(wf0, "evolve");

  const auto start = std::chrono::steady_clock::now();
  const ObjectiveFields fields = objectives::eval_fields(obj, wf0.grid);
  const analysis::ObservableFields obs = analysis::observable_fields(obj, fields, opts.delta);
  if (opts.lyapunov != LyapunovKind::None && (obj.f_min != 0.0 || obj.minimizers.empty() ||
                                              obj.minimizers.front().norm() > 1e-12))
    throw std::invalid_argument("evolve: Lyapunov tracking needs a centered objective");

  EvolveResult res{wf0, {}, 0.0, 0, 0, 0, 0};
  res.series.delta = opts.delta;
  res.series.f_min = obj.f_min;
  for (int k = 1; k <= params.K; ++k) {
    const double t = params.time_at(k);
    auto [next, rep] = step(res.final_state, params, fields, t, opts.lanczos);
    res.final_state = std::move(next);
    res.max_norm_drift = std::max(res.max_norm_drift, rep.norm_drift);
    res.max_lanczos_dim = std::max(res.max_lanczos_dim, rep.lanczos_dim);
    res.max_lanczos_substeps = std::max(res.max_lanczos_substeps, rep.lanczos_substeps);
    res.renormalizations += rep.renormalized ? 1 : 0;
    if (k % observe_every == 0 || k == params.K) {
      MetricRecord rec = analysis::observables(res.final_state, obs);
      rec.k = k;
      rec.t = t;
      rec.norm_drift = rep.norm_drift;
      if (opts.lyapunov == LyapunovKind::E) rec.lyapunov = analysis::lyapunov_E(res.final_state, fields, params, t);
      if (opts.lyapunov == LyapunovKind::F) rec.lyapunov = analysis::lyapunov_F(res.final_state, fields, params, t);
      res.series.records.push_back(rec);
    }
  }
  res.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return res;
}

MatrixXcd dft_matrix(int n) {
  MatrixXcd F(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const long jk = (static_cast<long>(j) * k) % n;
      F(j, k) = std::polar(s, -2.0 * std::numbers::pi * static_cast<double>(jk) / n);
    }
  return F;
}

namespace {

void require_dense_grid(const Grid& grid) {
  if (grid.dim() != 1) throw std::invalid_argument("dense operators are only built for 1D grids");
  if (grid.n_per_dim() > 256) throw std::invalid_argument("dense operators are limited to N <= 256");
}

}  // namespace

MatrixXcd dense_momentum(const Grid& grid) {
  require_dense_grid(grid);
  const MatrixXcd F = dft_matrix(grid.n_per_dim());
  return F.adjoint() * grid.derivative_wavenumbers(0).matrix().cast<Complex>().asDiagonal() * F;
}

MatrixXcd dense_laplacian_multiplier(const Grid& grid) {
  require_dense_grid(grid);
  const MatrixXcd F = dft_matrix(grid.n_per_dim());
  return F.adjoint() * grid.axis_wavenumbers(0).square().matrix().cast<Complex>().asDiagonal() * F;
}

MatrixXcd dense_hamiltonian(const Grid& grid, const ObjectiveSpec& obj, const HamiltonianParams& params, double t) {
  require_dense_grid(grid);
  if (obj.dim != 1) throw std::invalid_argument("dense_hamiltonian: objective must be one-dimensional");
  if (!(t > 0.0)) throw std::invalid_argument("dense_hamiltonian: t must be positive");
  const int n = grid.n_per_dim();
  VectorXd f(n), v(n);
  for (int i = 0; i < n; ++i) {
    const VectorXd x = grid.node(i);
    f[i] = obj.f(x);
    v[i] = obj.grad(x)[0];
  }
  const double t3 = t * t * t;
  const MatrixXcd P = dense_momentum(grid);
  const MatrixXcd V = v.cast<Complex>().asDiagonal();
  const VectorXd potential =
      0.5 * (params.alpha * params.alpha + params.beta) * t3 * v.array().square().matrix() +
      (t3 + params.gamma * t * t) * f;
  MatrixXcd H = dense_laplacian_multiplier(grid) / (2.0 * t3);
  H += 0.5 * params.alpha * (P * V + V * P);
  H.diagonal() += potential.cast<Complex>();
  return H;
}

VectorXcd hermitian_expm_apply(const MatrixXcd& H, double h, const VectorXcd& v) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
  const VectorXcd phase = (-kI * h * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * v));
}

WaveFunction reference_step_dense(const WaveFunction& wf, const ObjectiveSpec& obj, const HamiltonianParams& params,
                                  double t, double h) {
  const MatrixXcd H = dense_hamiltonian(*wf.grid, obj, params, t);
  return {wf.grid, hermitian_expm_apply(H, h, wf.amp)};
}

}  // namespace evolution
}  // namespace qhdlab
