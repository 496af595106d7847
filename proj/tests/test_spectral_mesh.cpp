#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qhdlab/objectives.hpp"
#include "qhdlab/spectral_mesh.hpp"

using namespace qhdlab;
using Eigen::VectorXd;
constexpr double kPi = std::numbers::pi;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }
VectorXd v1(double a) { return VectorXd::Constant(1, a); }

WaveFunction plane_wave(const GridPtr& g, int k) {
  WaveFunction wf{g, Eigen::VectorXcd(g->size())};
  const auto& x = g->coordinate(0);
  for (Eigen::Index i = 0; i < g->size(); ++i) wf.amp[i] = std::polar(1.0 / std::sqrt(double(g->size())), k * x[i]);
  return wf;
}

WaveFunction random_state(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  WaveFunction wf{g, Eigen::VectorXcd(g->size())};
  for (auto& a : wf.amp) a = {n(rng), n(rng)};
  wf.amp.normalize();
  return wf;
}

}  // namespace

TEST_CASE("mesh geometry") {
  const GridPtr g = make_grid(cube(2, -5, 5), 128);
  CHECK(g->size() == 16384);
  CHECK(g->spacing(0) == doctest::Approx(10.0 / 128).epsilon(1e-15));

  const GridPtr g1 = make_grid(cube(1, 0, 1), 8);
  const Eigen::ArrayXd nodes = g1->axis_nodes(0);
  for (int i = 0; i < 8; ++i) CHECK(nodes[i] == doctest::Approx(0.125 * i));

  // last axis runs fastest
  CHECK(g->node(1)[1] == doctest::Approx(-5 + 10.0 / 128));
  CHECK(g->node(1)[0] == doctest::Approx(-5));
  CHECK(g->node(128)[0] == doctest::Approx(-5 + 10.0 / 128));
}

TEST_CASE("wavenumber layout against a direct DFT") {
  const GridPtr g = make_grid(cube(1, 0, 2 * kPi), 16);
  const Eigen::ArrayXd& k = g->axis_wavenumbers(0);
  std::vector<int> seen;
  for (int i = 0; i < 16; ++i) {
    CHECK(k[i] == doctest::Approx(double(oracle::signed_bin(i, 16))));
    seen.push_back(int(std::lround(k[i])));
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 16; ++i) CHECK(seen[i] == i - 8);
  CHECK(g->derivative_wavenumbers(0)[8] == 0.0);

  const WaveFunction wf = plane_wave(g, 3);
  const Eigen::VectorXcd spec = oracle::direct_dft(wf.amp);
  Eigen::Index peak;
  spec.cwiseAbs().maxCoeff(&peak);
  CHECK(k[peak] == doctest::Approx(3.0));

  Eigen::VectorXcd fftw = wf.amp;
  g->forward(fftw);
  CHECK((fftw - spec).norm() <= 1e-12 * spec.norm());
  g->inverse(fftw);
  CHECK((fftw - wf.amp).norm() <= 1e-14);
}

TEST_CASE("uniform state") {
  const GridPtr g = make_grid(cube(2, -5, 5), 128);
  const WaveFunction u = uniform_state(g);
  CHECK(u.amp.real().minCoeff() == doctest::Approx(1.0 / 128).epsilon(1e-15));
  CHECK(u.amp.real().maxCoeff() == doctest::Approx(1.0 / 128).epsilon(1e-15));
  CHECK(u.amp.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(u.norm_sq() - 1.0) <= 1e-14);

  // E[x^2] = 3 per axis on [-3,3], the cosines integrate to zero over whole periods.
  const ObjectiveSpec r = objectives::get("rastrigin");
  const GridPtr gr = make_grid(r.box, 128);
  const double e = expectation(uniform_state(gr), make_field(gr, r.f));
  CHECK(std::abs(e - 26.0) <= 1e-3);
  const double quad = oracle::midpoint_2d([&](double x, double y) { return r.f(v2(x, y)); }, -3, 3, -3, 3, 1024) / 36.0;
  CHECK(std::abs(quad - 26.0) <= 1e-4);
}

TEST_CASE("gaussian state") {
  const GridPtr g = make_grid(cube(1, -5, 5), 128);
  const WaveFunction wf = gaussian_state(g, v1(0.0), 1.0);
  CHECK(std::abs(wf.norm_sq() - 1.0) <= 1e-12);
  // x = 0 is node 64, x = 1 lies 12.8 nodes further; compare through the formula at a node.
  const double x = g->coordinate(0)[77];
  const double ratio = wf.amp[77].real() / wf.amp[64].real();
  CHECK(ratio == doctest::Approx(std::exp(-x * x / 4.0)).epsilon(1e-12));
  const GridPtr g2 = make_grid(cube(1, -5, 5), 10);
  CHECK_THROWS_AS(gaussian_state(g2, v1(0.0), 1.0), std::invalid_argument);

  SUBCASE("<x> of a displaced state against quadrature") {
    const GridPtr gg = make_grid(cube(2, -8, 8), 128);
    const WaveFunction w = gaussian_state(gg, v2(1, -1), 1.0);
    auto dens = [](double x, double y) {
      return std::exp(-((x - 1) * (x - 1) + (y + 1) * (y + 1)) / 2.0) / (2.0 * kPi);
    };
    const double qx = oracle::midpoint_2d([&](double x, double y) { return x * dens(x, y); }, -8, 8, -8, 8, 512);
    const double qy = oracle::midpoint_2d([&](double x, double y) { return y * dens(x, y); }, -8, 8, -8, 8, 512);
    CHECK(std::abs(expectation(w, coordinate_field(gg, 0)) - qx) <= 1e-6);
    CHECK(std::abs(expectation(w, coordinate_field(gg, 1)) - qy) <= 1e-6);
    CHECK(std::abs(qx - 1.0) <= 1e-6);
  }
}

TEST_CASE("diagonal phase") {
  const ObjectiveSpec r = objectives::get("rastrigin");
  const GridPtr g = make_grid(r.box, 64);
  const WaveFunction wf = gaussian_state(g, v2(0.3, -0.2), 0.6);
  const ScalarField f = make_field(g, r.f);

  CHECK((apply_diagonal_phase(wf, f, 0.0).amp - wf.amp).norm() == 0.0);

  const WaveFunction rot = apply_diagonal_phase(wf, f, 0.005);
  CHECK((rot.amp.cwiseAbs() - wf.amp.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(std::abs(rot.norm_sq() - wf.norm_sq()) <= 1e-14);

  ScalarField c{g, Eigen::ArrayXd::Constant(g->size(), 2.5)};
  const WaveFunction glob = apply_diagonal_phase(wf, c, 0.3);
  CHECK((glob.amp - std::polar(1.0, -0.75) * wf.amp).norm() <= 1e-14);
  CHECK(expectation(glob, f) == doctest::Approx(expectation(wf, f)).epsilon(1e-14));

  const GridPtr other = make_grid(r.box, 32);
  CHECK_THROWS(apply_diagonal_phase(wf, make_field(other, r.f), 0.1));
}

TEST_CASE("fourier phase") {
  const GridPtr g = make_grid(cube(1, 0, 2 * kPi), 32);
  auto half_k2 = [](const VectorXd& k) { return 0.5 * k.squaredNorm(); };

  const WaveFunction pw = plane_wave(g, 5);
  const WaveFunction out = apply_fourier_phase(pw, half_k2, 0.1);
  CHECK((out.amp - std::polar(1.0, -0.1 * 12.5) * pw.amp).norm() <= 1e-13);

  const WaveFunction wf = gaussian_state(g, v1(kPi), 0.8);
  CHECK((apply_fourier_phase(wf, half_k2, 0.0).amp - wf.amp).norm() <= 1e-14);

  const Eigen::MatrixXcd U = oracle::expm_i(0.5 * oracle::laplacian_matrix(32, 2 * kPi), 0.1);
  CHECK((apply_fourier_phase(wf, half_k2, 0.1).amp - U * wf.amp).norm() <= 1e-10);

  // tabulated multiplier agrees with the functional one
  const Eigen::ArrayXd tab = 0.5 * g->wavenumber_sq();
  CHECK((apply_fourier_phase(wf, tab, 0.1).amp - apply_fourier_phase(wf, half_k2, 0.1).amp).norm() <= 1e-15);
}

TEST_CASE("partial derivative") {
  const GridPtr g = make_grid(cube(1, 0, 2 * kPi), 16);
  const WaveFunction pw = plane_wave(g, 3);
  CHECK((partial_derivative(pw, 0).amp - 3.0 * pw.amp).norm() <= 1e-13);
  CHECK(partial_derivative(uniform_state(g), 0).amp.norm() <= 1e-15);
  CHECK_THROWS_AS(partial_derivative(pw, 1), std::out_of_range);
  CHECK_THROWS_AS(partial_derivative(pw, -1), std::out_of_range);

  const GridPtr gg = make_grid(cube(1, -8, 8), 128);
  const WaveFunction gs = gaussian_state(gg, v1(0.0), 1.0);
  CHECK(std::abs(partial_derivative(gs, 0).amp.squaredNorm() - 0.25) <= 1e-6);

  // against the direct-DFT momentum matrix
  const GridPtr g32 = make_grid(cube(1, -5, 5), 32);
  const WaveFunction w = gaussian_state(g32, v1(0.5), 1.5);
  const Eigen::MatrixXcd P = oracle::momentum_matrix(32, 10.0);
  CHECK((partial_derivative(w, 0).amp - P * w.amp).norm() <= 1e-12);
}

TEST_CASE("expectation") {
  const GridPtr g = make_grid(cube(2, -1, 1), 16);
  const WaveFunction u = uniform_state(g);
  CHECK(expectation(u, ScalarField{g, Eigen::ArrayXd::Constant(g->size(), 4.25)}) == doctest::Approx(4.25));

  WaveFunction dirac{g, Eigen::VectorXcd::Zero(g->size())};
  dirac.amp[37] = 1.0;
  const ScalarField x = coordinate_field(g, 1);
  CHECK(expectation(dirac, x) == x.val[37]);

  WaveFunction bad = u;
  bad.amp *= 1.01;
  CHECK_THROWS_AS(expectation(bad, x), std::domain_error);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(make_grid(cube(1, 0, 1), 6), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(cube(2, 1, 1), 16), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(cube(1, 0, 1), 9), std::invalid_argument);
  CHECK_NOTHROW(make_grid(cube(1, 0, 1), 24));
}

// --- properties ---------------------------------------------------------

TEST_CASE("property: unitarity over 1000 phase applications") {
  const ObjectiveSpec st = objectives::get("styblinski_tang");
  const GridPtr g = make_grid(st.box, 32);
  const ScalarField f = make_field(g, st.f);
  const Eigen::ArrayXd kin = 0.5 * g->wavenumber_sq();
  WaveFunction wf = random_state(g, 7);
  for (int i = 0; i < 500; ++i) {
    wf = apply_diagonal_phase(std::move(wf), f, 0.01);
    wf = apply_fourier_phase(std::move(wf), kin, 0.01);
  }
  CHECK(std::abs(wf.norm_sq() - 1.0) <= 1e-12);
}

TEST_CASE("property: spectral exactness on trigonometric polynomials") {
  for (int n : {16, 24, 32, 64}) {
    const GridPtr g = make_grid(cube(2, 0, 2 * kPi), n);
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::tuple<int, int, double, double>> terms;
    for (int t = 0; t < 6; ++t) {
      std::uniform_int_distribution<int> kd(-(n / 2 - 1), n / 2 - 1);
      terms.emplace_back(kd(rng), kd(rng), u(rng), u(rng));
    }
    WaveFunction wf{g, Eigen::VectorXcd::Zero(g->size())}, dx = wf;
    for (Eigen::Index i = 0; i < g->size(); ++i) {
      const VectorXd x = g->node(i);
      for (auto [a, b, re, im] : terms) {
        const std::complex<double> e = std::complex<double>(re, im) * std::polar(1.0, a * x[0] + b * x[1]);
        wf.amp[i] += e;
        dx.amp[i] += double(a) * e;
      }
    }
    const WaveFunction got = partial_derivative(wf, 0);
    CHECK((got.amp - dx.amp).norm() <= 1e-12 * dx.amp.norm());
  }
}

TEST_CASE("property: Parseval") {
  for (int n : {16, 32, 48}) {
    const GridPtr g = make_grid(cube(2, -1, 1), n);
    const WaveFunction wf = random_state(g, n);
    Eigen::VectorXcd s = wf.amp;
    g->forward(s);
    CHECK(s.squaredNorm() / double(g->size()) == doctest::Approx(wf.norm_sq()).epsilon(1e-12));
  }
}

TEST_CASE("property: expectation is linear in the field") {
  const GridPtr g = make_grid(cube(2, -5, 5), 32);
  const WaveFunction wf = random_state(g, 3);
  const ScalarField F = make_field(g, objectives::get("styblinski_tang").f);
  const ScalarField G = make_field(g, objectives::get("convex_quartic").f);
  const double a = 1.7, b = -0.3;
  const ScalarField H{g, a * F.val + b * G.val};
  CHECK(expectation(wf, H) == doctest::Approx(a * expectation(wf, F) + b * expectation(wf, G)).epsilon(1e-13));
}
