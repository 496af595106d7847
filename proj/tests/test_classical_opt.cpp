#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "qhdlab/classical_opt.hpp"

using namespace qhdlab;
using Eigen::VectorXd;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }
VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

ObjectiveSpec half_sq(int d, double half_width = 5.0) {
  ObjectiveSpec o;
  o.name = "half_sq";
  o.dim = d;
  o.box = cube(d, -half_width, half_width);
  o.f = [](const VectorXd& x) { return 0.5 * x.squaredNorm(); };
  o.grad = [](const VectorXd& x) { return x; };
  o.hess = [d](const VectorXd&) { return Eigen::MatrixXd::Identity(d, d); };
  o.minimizers = {VectorXd::Zero(d)};
  o.convex = true;
  return o;
}

ObjectiveSpec flat(int d) {
  ObjectiveSpec o = half_sq(d);
  o.f = [](const VectorXd&) { return 0.0; };
  o.grad = [d](const VectorXd&) { return VectorXd::Zero(d); };
  o.hess = [d](const VectorXd&) { return Eigen::MatrixXd::Zero(d, d); };
  return o;
}

bool same_series(const MetricsSeries& a, const MetricsSeries& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    if (x.k != y.k || x.exp_f != y.exp_f || x.exp_gradnorm_sq != y.exp_gradnorm_sq || x.success_prob != y.success_prob)
      return false;
  }
  return true;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("sgdm schedule") {
  CHECK(classical::sgdm_momentum(1, 100) == doctest::Approx(0.504).epsilon(1e-15));
  CHECK(classical::sgdm_momentum(100, 100) == doctest::Approx(0.9).epsilon(1e-15));
  for (int K : {1, 7, 100}) {
    for (int k = 1; k <= K; ++k) {
      const double eta = classical::sgdm_momentum(k, K);
      CHECK(eta >= 0.5 + 0.4 / K - 1e-15);
      CHECK(eta <= 0.9 + 1e-15);
      CHECK(classical::sgdm_step(0.01, k) == 0.01 / k);
    }
  }
}

TEST_CASE("sgdm one step") {
  SgdmConfig cfg;
  cfg.noise_std = 0;
  const RunRecord r = classical::sgdm_run(half_sq(2), cfg, v2(1, 0));
  REQUIRE(r.iterates.size() == 101);
  CHECK(r.iterates[1][0] == doctest::Approx(1 - 0.00496).epsilon(1e-15));
  CHECK(r.iterates[1][1] == 0.0);
  CHECK(r.f_values[0] == 0.5);

  // noise-free runs do not depend on the seed
  SgdmConfig other = cfg;
  other.seed = 99;
  const RunRecord r2 = classical::sgdm_run(half_sq(2), other, v2(1, 0));
  for (std::size_t k = 0; k < r.iterates.size(); ++k) CHECK((r.iterates[k] - r2.iterates[k]).norm() == 0.0);
}

TEST_CASE("sgdm determinism and noise") {
  SgdmConfig cfg;
  cfg.seed = 5;
  const ObjectiveSpec st = objectives::get("styblinski_tang");
  const RunRecord a = classical::sgdm_run(st, cfg, v2(1, 2)), b = classical::sgdm_run(st, cfg, v2(1, 2));
  for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK((a.iterates[k] - b.iterates[k]).norm() == 0.0);
  cfg.seed = 6;
  const RunRecord c = classical::sgdm_run(st, cfg, v2(1, 2));
  CHECK((a.iterates.back() - c.iterates.back()).norm() > 0.0);

  cfg.s0 = 0;
  CHECK_THROWS_AS(classical::sgdm_run(st, cfg, v2(1, 2)), std::invalid_argument);
  cfg.s0 = 0.01;
  CHECK_THROWS_AS(classical::sgdm_run(st, cfg, v2(9, 2)), std::invalid_argument);
}

TEST_CASE("nag") {
  NagConfig cfg;
  cfg.K = 3;
  const RunRecord r = classical::nag_run(half_sq(1), cfg, v1(1.0));
  CHECK(r.iterates[1][0] == doctest::Approx(0.99).epsilon(1e-15));
  // y1 = x1, so x2 = 0.99 - 0.01 * 0.99
  CHECK(r.iterates[2][0] == doctest::Approx(0.99 * 0.99).epsilon(1e-15));

  cfg.K = 25;
  const ObjectiveSpec cq = objectives::get("convex_quartic");
  const RunRecord q = classical::nag_run(cq, cfg, v2(4, 4));
  CHECK(q.f_values.back() < q.f_values.front());

  const RunRecord fixed = classical::nag_run(half_sq(2), cfg, VectorXd::Zero(2));
  for (const auto& x : fixed.iterates) CHECK(x.norm() == 0.0);

  // literal y0 = 0: the first step is taken from the origin
  cfg.y0_zero = true;
  cfg.K = 1;
  const RunRecord z = classical::nag_run(half_sq(1), cfg, v1(1.0));
  CHECK(z.iterates[1][0] == 0.0);
}

TEST_CASE("run failure on divergence") {
  ObjectiveSpec blow = half_sq(1);
  blow.grad = [](const VectorXd& x) { return v1(x[0] > 0.5 ? std::numeric_limits<double>::infinity() : x[0]); };
  NagConfig cfg;
  cfg.K = 5;
  try {
    classical::nag_run(blow, cfg, v1(1.0));
    FAIL("expected RunFailure");
  } catch (const RunFailure& e) {
    CHECK(e.iteration == 1);
  }
}

TEST_CASE("ensemble") {
  const ObjectiveSpec st = objectives::get("styblinski_tang");
  classical::EnsembleConfig cfg;
  cfg.optimizer = classical::Optimizer::Nag;
  cfg.master_seed = 1;
  cfg.nag.K = 50;
  const auto a = classical::ensemble(st, cfg);
  REQUIRE(a.series.records.size() == 50);
  CHECK(a.n_runs == 1000);
  CHECK(a.failed_runs == 0);
  for (const auto& r : a.series.records) {
    CHECK(r.success_prob >= 0.0);
    CHECK(r.success_prob <= 1.0);
    CHECK(r.t == double(r.k));
  }
  CHECK(same_series(a.series, classical::ensemble(st, cfg).series));

  cfg.master_seed = 2;
  CHECK_FALSE(same_series(a.series, classical::ensemble(st, cfg).series));

  SUBCASE("independent of worker count") {
    classical::EnsembleConfig s;
    s.optimizer = classical::Optimizer::Sgdm;
    s.sgdm.K = 40;
    s.n_runs = 300;
    s.master_seed = 9;
    s.threads = 1;
    const auto one = classical::ensemble(st, s);
    s.threads = 4;
    CHECK(same_series(one.series, classical::ensemble(st, s).series));
  }

  SUBCASE("started at the minimizer") {
    const ObjectiveSpec pin = half_sq(2, 1e-9);
    classical::EnsembleConfig s;
    s.nag.K = 10;
    s.n_runs = 50;
    const auto e = classical::ensemble(pin, s);
    for (const auto& r : e.series.records) CHECK(r.success_prob == 1.0);
  }
}

TEST_CASE("run seeds") {
  CHECK(classical::run_seed(1, 0) == classical::run_seed(1, 0));
  CHECK(classical::run_seed(1, 0) != classical::run_seed(1, 1));
  CHECK(classical::run_seed(1, 0) != classical::run_seed(2, 0));
}

TEST_CASE("worker count honors QHD_LAB_THREADS") {
  setenv("QHD_LAB_THREADS", "3", 1);
  CHECK(classical::worker_count(0) <= 3);
  CHECK(classical::worker_count(2) == 2);
  CHECK(classical::worker_count(8) == 3);
  setenv("QHD_LAB_THREADS", "lots", 1);
  CHECK_THROWS_AS(classical::worker_count(0), std::invalid_argument);
  unsetenv("QHD_LAB_THREADS");
  CHECK(classical::worker_count(0) >= 1);
}

TEST_CASE("rk4 order on the quadratic") {
  const ObjectiveSpec q = half_sq(2);
  const FlowParams p{0.2, 0.02, 0.75, FlowForm::Printed};
  const ClassicalState s0{v2(1.0, -0.5), v2(0.3, 0.1), 1.0};
  auto end = [&](double dt) { return classical::ham_flow_rk4(q, p, s0, 5.0, dt).states.back(); };
  const ClassicalState ref = end(0.0125 / 4);
  auto err = [&](double dt) {
    const ClassicalState e = end(dt);
    return std::sqrt((e.X - ref.X).squaredNorm() + (e.P - ref.P).squaredNorm());
  };
  const double r1 = err(0.05) / err(0.025), r2 = err(0.025) / err(0.0125);
  MESSAGE("rk4 ratios " << r1 << " " << r2);
  CHECK(r1 == doctest::Approx(16).epsilon(0.1));
  CHECK(r2 == doctest::Approx(16).epsilon(0.1));
}

TEST_CASE("flow with a vanishing gradient") {
  const ClassicalState s0{v2(0.5, 0.5), v2(1.0, -2.0), 1.0};
  for (FlowForm form : {FlowForm::Printed, FlowForm::Legendre}) {
    const FlowParams p{0.3, 0.1, 1.0, form};
    const FlowTrajectory tr = classical::ham_flow_rk4(flat(2), p, s0, 3.0, 0.01);
    const ClassicalState& e = tr.states.back();
    CHECK((e.P - s0.P).norm() == 0.0);
    const double drift = p.prefactor() * (0.5 - 0.5 / 9.0);
    CHECK((e.X - (s0.X + drift * s0.P)).norm() <= 1e-8);
  }
}

TEST_CASE("high-resolution residual") {
  // beta / alpha = sqrt(s) and gamma - 3 alpha = 3 sqrt(s) / 2 with s = 0.01
  const ObjectiveSpec q = half_sq(2);
  const double s = 0.01;
  const ClassicalState s0{v2(3.0, -2.0), v2(0.0, 0.0), 1.0};
  auto worst = [&](const FlowParams& p, double dt) {
    return max_of(classical::highres_residual(classical::ham_flow_rk4(q, p, s0, 10.0, dt), q, s, FlowForm::Legendre));
  };
  const FlowParams matched{0.2, 0.02, 0.75, FlowForm::Legendre};
  const double m1 = worst(matched, 0.02), m2 = worst(matched, 0.01), m3 = worst(matched, 0.005);
  MESSAGE("matched residuals " << m1 << " " << m2 << " " << m3);
  CHECK(m1 / m2 == doctest::Approx(4).epsilon(0.15));
  CHECK(m2 / m3 == doctest::Approx(4).epsilon(0.15));

  const FlowParams unmatched{0.2, 0.1, 0.75, FlowForm::Legendre};
  const double u2 = worst(unmatched, 0.01), u3 = worst(unmatched, 0.005);
  MESSAGE("unmatched residuals " << u2 << " " << u3);
  CHECK(u3 > 0.5 * u2);
  CHECK(u3 > 100 * m3);

  // zero gradient: the residual is the differencing error of X'' + 3X'/t
  const ClassicalState z0{v2(0.5, 0.5), v2(1.0, -2.0), 1.0};
  const FlowParams any{0.3, 0.1, 1.0, FlowForm::Legendre};
  const double z1 = max_of(classical::highres_residual(classical::ham_flow_rk4(flat(2), any, z0, 3.0, 0.01), flat(2), s));
  const double z2 = max_of(classical::highres_residual(classical::ham_flow_rk4(flat(2), any, z0, 3.0, 0.005), flat(2), s));
  CHECK(z2 < z1);
  CHECK(z2 <= 1e-3);

  FlowTrajectory tiny;
  tiny.states = {s0, s0};
  CHECK_THROWS_AS(classical::highres_residual(tiny, q, s), std::invalid_argument);
  CHECK_THROWS_AS(classical::ham_flow_rk4(q, matched, {v2(0, 0), v2(0, 0), 0.0}, 1.0, 0.1), std::invalid_argument);
}
