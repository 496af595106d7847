#include "qhdlab/spectral_mesh.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qhdlab {

namespace {

// The FFTW planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Eigen::VectorXcd& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

}  // namespace

namespace detail {

struct FftPlans {
  fftw_plan full_fwd = nullptr;
  fftw_plan full_bwd = nullptr;
  std::vector<fftw_plan> axis_fwd;
  std::vector<fftw_plan> axis_bwd;

  FftPlans(int dim, int n, Eigen::Index size) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    // FFTW_ESTIMATE keeps the chosen algorithm, and so every rounding bit,
    // independent of machine load.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    auto* buf = fftw_alloc_complex(static_cast<size_t>(size));
    std::vector<int> dims(static_cast<size_t>(dim), n);
    full_fwd = fftw_plan_dft(dim, dims.data(), buf, buf, FFTW_FORWARD, flags);
    full_bwd = fftw_plan_dft(dim, dims.data(), buf, buf, FFTW_BACKWARD, flags);
    for (int axis = 0; axis < dim; ++axis) {
      int inner = 1;
      for (int j = axis + 1; j < dim; ++j) inner *= n;
      int outer = 1;
      for (int j = 0; j < axis; ++j) outer *= n;
      fftw_iodim transform{n, inner, inner};
      std::vector<fftw_iodim> loops;
      if (outer > 1) loops.push_back({outer, n * inner, n * inner});
      if (inner > 1) loops.push_back({inner, 1, 1});
      axis_fwd.push_back(fftw_plan_guru_dft(1, &transform, static_cast<int>(loops.size()), loops.data(), buf,
                                            buf, FFTW_FORWARD, flags));
      axis_bwd.push_back(fftw_plan_guru_dft(1, &transform, static_cast<int>(loops.size()), loops.data(), buf,
                                            buf, FFTW_BACKWARD, flags));
    }
    fftw_free(buf);
    if (!full_fwd || !full_bwd) throw std::runtime_error("FFTW failed to create a plan");
  }

  ~FftPlans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(full_fwd);
    fftw_destroy_plan(full_bwd);
    for (auto p : axis_fwd) fftw_destroy_plan(p);
    for (auto p : axis_bwd) fftw_destroy_plan(p);
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

}  // namespace detail

bool BoxDomain::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) return false;
  return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
}

void BoxDomain::validate() const {
  if (lo.size() < 1) throw std::invalid_argument("box must have dimension >= 1");
  if (lo.size() != hi.size()) throw std::invalid_argument("box corners differ in dimension");
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || !(hi[j] > lo[j]))
      throw std::invalid_argument("degenerate box on axis " + std::to_string(j));
  }
}

bool operator==(const BoxDomain& a, const BoxDomain& b) {
  return a.lo.size() == b.lo.size() && a.lo == b.lo && a.hi == b.hi;
}

BoxDomain cube(int dim, double lo, double hi) {
  return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

Grid::Grid(BoxDomain box, int n_per_dim) : box_(std::move(box)), n_(n_per_dim) {
  box_.validate();
  if (n_ < 8) throw std::invalid_argument("grid needs at least 8 points per axis, got " + std::to_string(n_));
  if (n_ % 2) throw std::invalid_argument("grid needs an even number of points per axis, got " + std::to_string(n_));
  const int d = box_.dim();
  size_ = 1;
  for (int j = 0; j < d; ++j) size_ *= n_;

  for (int axis = 0; axis < d; ++axis) {
    const double width = box_.hi[axis] - box_.lo[axis];
    Eigen::ArrayXd k(n_);
    for (int i = 0; i < n_; ++i) {
      const int m = (i < (n_ + 1) / 2) ? i : i - n_;
      k[i] = 2.0 * std::numbers::pi / width * m;
    }
    Eigen::ArrayXd kd = k;
    if (n_ % 2 == 0) kd[n_ / 2] = 0.0;
    k_axis_.push_back(k);
    k_deriv_.push_back(kd);
  }

  coords_.assign(static_cast<size_t>(d), Eigen::ArrayXd(size_));
  k_sq_ = Eigen::ArrayXd::Zero(size_);
  for (Eigen::Index flat = 0; flat < size_; ++flat) {
    for (int axis = 0; axis < d; ++axis) {
      const Eigen::Index i = axis_index(flat, axis);
      coords_[axis][flat] = box_.lo[axis] + static_cast<double>(i) * spacing(axis);
      k_sq_[flat] += k_axis_[axis][i] * k_axis_[axis][i];
    }
  }
  plans_ = std::make_shared<detail::FftPlans>(d, n_, size_);
}

Eigen::Index Grid::stride(int axis) const {
  Eigen::Index s = 1;
  for (int j = axis + 1; j < dim(); ++j) s *= n_;
  return s;
}

Eigen::Index Grid::axis_index(Eigen::Index flat, int axis) const { return (flat / stride(axis)) % n_; }

double Grid::spacing(int axis) const { return (box_.hi[axis] - box_.lo[axis]) / n_; }

double Grid::cell_volume() const {
  double v = 1.0;
  for (int j = 0; j < dim(); ++j) v *= spacing(j);
  return v;
}

const Eigen::ArrayXd& Grid::coordinate(int axis) const { return coords_.at(static_cast<size_t>(axis)); }

Eigen::ArrayXd Grid::axis_nodes(int axis) const {
  return box_.lo[axis] + Eigen::ArrayXd::LinSpaced(n_, 0.0, n_ - 1.0) * spacing(axis);
}

const Eigen::ArrayXd& Grid::axis_wavenumbers(int axis) const { return k_axis_.at(static_cast<size_t>(axis)); }

const Eigen::ArrayXd& Grid::derivative_wavenumbers(int axis) const {
  return k_deriv_.at(static_cast<size_t>(axis));
}

Eigen::VectorXd Grid::node(Eigen::Index flat) const {
  Eigen::VectorXd x(dim());
  for (int j = 0; j < dim(); ++j) x[j] = coords_[j][flat];
  return x;
}

Eigen::VectorXd Grid::wavevector(Eigen::Index flat) const {
  Eigen::VectorXd k(dim());
  for (int j = 0; j < dim(); ++j) k[j] = k_axis_[j][axis_index(flat, j)];
  return k;
}

bool Grid::same_mesh(const Grid& other) const { return this == &other || (n_ == other.n_ && box_ == other.box_); }

void Grid::forward(Eigen::VectorXcd& data) const {
  fftw_execute_dft(plans_->full_fwd, as_fftw(data), as_fftw(data));
}

void Grid::inverse(Eigen::VectorXcd& data) const {
  fftw_execute_dft(plans_->full_bwd, as_fftw(data), as_fftw(data));
  data /= static_cast<double>(size_);
}

void Grid::forward_axis(Eigen::VectorXcd& data, int axis) const {
  fftw_execute_dft(plans_->axis_fwd.at(static_cast<size_t>(axis)), as_fftw(data), as_fftw(data));
}

void Grid::inverse_axis(Eigen::VectorXcd& data, int axis) const {
  fftw_execute_dft(plans_->axis_bwd.at(static_cast<size_t>(axis)), as_fftw(data), as_fftw(data));
  data /= static_cast<double>(n_);
}

GridPtr make_grid(const BoxDomain& box, int n_per_dim) { return std::make_shared<const Grid>(box, n_per_dim); }

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_mesh(b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

ScalarField make_field(const GridPtr& grid, const std::function<double(const Eigen::VectorXd&)>& fn) {
  ScalarField out{grid, Eigen::ArrayXd(grid->size())};
  for (Eigen::Index i = 0; i < grid->size(); ++i) out.val[i] = fn(grid->node(i));
  return out;
}

ScalarField coordinate_field(const GridPtr& grid, int axis) { return {grid, grid->coordinate(axis)}; }

WaveFunction uniform_state(const GridPtr& grid) {
  const double a = 1.0 / std::sqrt(static_cast<double>(grid->size()));
  return {grid, Eigen::VectorXcd::Constant(grid->size(), Complex(a, 0.0))};
}

WaveFunction gaussian_state(const GridPtr& grid, const Eigen::VectorXd& center, double sigma) {
  if (center.size() != grid->dim()) throw std::invalid_argument("gaussian_state: center dimension mismatch");
  if (!grid->box().contains(center)) throw std::invalid_argument("gaussian_state: center outside the box");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_state: sigma must be positive");
  for (int j = 0; j < grid->dim(); ++j) {
    if (sigma < 4.0 * grid->spacing(j))
      throw std::invalid_argument("gaussian_state: sigma spans fewer than 4 grid cells (undersampled)");
  }
  WaveFunction wf{grid, Eigen::VectorXcd(grid->size())};
  for (Eigen::Index i = 0; i < grid->size(); ++i) {
    const double r2 = (grid->node(i) - center).squaredNorm();
    wf.amp[i] = std::exp(-r2 / (4.0 * sigma * sigma));
  }
  wf.amp /= wf.amp.norm();
  return wf;
}

WaveFunction apply_diagonal_phase(WaveFunction wf, const ScalarField& field, double theta) {
  require_same_grid(*wf.grid, *field.grid, "apply_diagonal_phase");
  if (theta == 0.0) return wf;
  for (Eigen::Index i = 0; i < wf.amp.size(); ++i) wf.amp[i] *= std::polar(1.0, -theta * field.val[i]);
  return wf;
}

WaveFunction apply_fourier_phase(WaveFunction wf, const Eigen::ArrayXd& spectral_multiplier, double theta) {
  if (spectral_multiplier.size() != wf.grid->size())
    throw std::invalid_argument("apply_fourier_phase: multiplier size does not match the grid");
  wf.grid->forward(wf.amp);
  for (Eigen::Index i = 0; i < wf.amp.size(); ++i) wf.amp[i] *= std::polar(1.0, -theta * spectral_multiplier[i]);
  wf.grid->inverse(wf.amp);
  return wf;
}

WaveFunction apply_fourier_phase(WaveFunction wf,
                                 const std::function<double(const Eigen::VectorXd&)>& multiplier,
                                 double theta) {
  const Grid& g = *wf.grid;
  Eigen::ArrayXd m(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    m[i] = multiplier(g.wavevector(i));
    if (!std::isfinite(m[i])) throw std::invalid_argument("apply_fourier_phase: multiplier is not finite");
  }
  return apply_fourier_phase(std::move(wf), m, theta);
}

void apply_momentum(const Grid& grid, Eigen::VectorXcd& amp, int axis) {
  if (axis < 0 || axis >= grid.dim()) throw std::out_of_range("momentum axis out of range");
  grid.forward_axis(amp, axis);
  const Eigen::ArrayXd& k = grid.derivative_wavenumbers(axis);
  const Eigen::Index stride = grid.stride(axis);
  const Eigen::Index n = grid.n_per_dim();
  for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] *= k[(i / stride) % n];
  grid.inverse_axis(amp, axis);
}

WaveFunction partial_derivative(const WaveFunction& wf, int axis) {
  WaveFunction out = wf;
  apply_momentum(*out.grid, out.amp, axis);
  return out;
}

double expectation(const WaveFunction& wf, const ScalarField& field) {
  require_same_grid(*wf.grid, *field.grid, "expectation");
  const double n2 = wf.norm_sq();
  if (std::abs(n2 - 1.0) > 1e-8)
    throw std::domain_error("expectation: state is not normalized (norm^2 = " + std::to_string(n2) + ")");
  return (field.val * wf.amp.array().abs2()).sum();
}

}  // namespace qhdlab
