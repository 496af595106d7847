#pragma once

#include <complex>
#include <functional>
#include <memory>

#include <Eigen/Dense>

namespace qhdlab {

using Complex = std::complex<double>;

/// Axis-aligned search box [lo, hi] in d dimensions.
struct BoxDomain {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd width() const { return hi - lo; }
  bool contains(const Eigen::VectorXd& x) const;
  /// Throws std::invalid_argument unless d >= 1 and hi > lo on every axis.
  void validate() const;
};

bool operator==(const BoxDomain& a, const BoxDomain& b);

/// Square box [lo, hi]^d.
BoxDomain cube(int dim, double lo, double hi);

namespace detail {
struct FftPlans;
}

/// Regular periodic mesh with N nodes per axis.
///
/// Nodes are stored in C order (last axis fastest). Node (i_1..i_d) sits at
/// x_j = lo_j + i_j (hi_j - lo_j) / N. Wavenumbers follow the FFT layout
/// {0, 1, ..., N/2 - 1, -N/2, ..., -1} scaled by 2 pi / (hi - lo); the
/// unpaired Nyquist mode of an even N is assigned to -N/2 and dropped from
/// first derivatives.
class Grid {
 public:
  Grid(BoxDomain box, int n_per_dim);

  const BoxDomain& box() const { return box_; }
  int dim() const { return box_.dim(); }
  int n_per_dim() const { return n_; }
  Eigen::Index size() const { return size_; }
  Eigen::Index stride(int axis) const;
  double spacing(int axis) const;
  /// prod(hi - lo) / N^d. Only used to turn node masses into densities.
  double cell_volume() const;

  /// Coordinate of every node along `axis` (length size()).
  const Eigen::ArrayXd& coordinate(int axis) const;
  /// The N node positions along one axis.
  Eigen::ArrayXd axis_nodes(int axis) const;
  /// The N wavenumbers along one axis, FFT order, Nyquist at -N/2.
  const Eigen::ArrayXd& axis_wavenumbers(int axis) const;
  /// As axis_wavenumbers but with the Nyquist entry set to zero.
  const Eigen::ArrayXd& derivative_wavenumbers(int axis) const;
  /// |k|^2 for every spectral node (length size()), Nyquist included.
  const Eigen::ArrayXd& wavenumber_sq() const { return k_sq_; }

  Eigen::VectorXd node(Eigen::Index flat) const;
  Eigen::VectorXd wavevector(Eigen::Index flat) const;
  bool same_mesh(const Grid& other) const;

  // In-place transforms. Forward is unnormalized; inverse divides by the
  // transform length, so inverse(forward(x)) == x.
  void forward(Eigen::VectorXcd& data) const;
  void inverse(Eigen::VectorXcd& data) const;
  void forward_axis(Eigen::VectorXcd& data, int axis) const;
  void inverse_axis(Eigen::VectorXcd& data, int axis) const;

 private:
  Eigen::Index axis_index(Eigen::Index flat, int axis) const;

  BoxDomain box_;
  int n_;
  Eigen::Index size_;
  std::vector<Eigen::ArrayXd> coords_;
  std::vector<Eigen::ArrayXd> k_axis_;
  std::vector<Eigen::ArrayXd> k_deriv_;
  Eigen::ArrayXd k_sq_;
  std::shared_ptr<detail::FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Rejects N < 8 and degenerate boxes.
GridPtr make_grid(const BoxDomain& box, int n_per_dim);

/// Complex amplitudes on a grid. |amp_i|^2 is the probability mass of node i.
struct WaveFunction {
  GridPtr grid;
  Eigen::VectorXcd amp;

  double norm_sq() const { return amp.squaredNorm(); }
};

/// One real value per node.
struct ScalarField {
  GridPtr grid;
  Eigen::ArrayXd val;
};

ScalarField make_field(const GridPtr& grid, const std::function<double(const Eigen::VectorXd&)>& fn);
ScalarField coordinate_field(const GridPtr& grid, int axis);

WaveFunction uniform_state(const GridPtr& grid);
/// Amplitudes proportional to exp(-|x - center|^2 / (4 sigma^2)), so the
/// probability density has standard deviation sigma per axis.
WaveFunction gaussian_state(const GridPtr& grid, const Eigen::VectorXd& center, double sigma);

/// amp_i <- amp_i * exp(-i theta val_i)
WaveFunction apply_diagonal_phase(WaveFunction wf, const ScalarField& field, double theta);

/// Multiplies the spectrum by exp(-i theta m(k)).
WaveFunction apply_fourier_phase(WaveFunction wf,
                                 const std::function<double(const Eigen::VectorXd&)>& multiplier,
                                 double theta);
/// Same, with the multiplier already tabulated on the spectral mesh.
WaveFunction apply_fourier_phase(WaveFunction wf, const Eigen::ArrayXd& spectral_multiplier, double theta);

/// Momentum component -i d/dx_axis, computed spectrally.
WaveFunction partial_derivative(const WaveFunction& wf, int axis);

/// In-place -i d/dx_axis on raw amplitudes.
void apply_momentum(const Grid& grid, Eigen::VectorXcd& amp, int axis);

/// sum_i val_i |amp_i|^2. The state must be normalized to 1e-8.
double expectation(const WaveFunction& wf, const ScalarField& field);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace qhdlab
