#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qhdlab/analysis.hpp"
#include "qhdlab/evolution.hpp"

using namespace qhdlab;
using Eigen::VectorXd;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

ObjectiveSpec centered_quartic() { return objectives::center(objectives::get("convex_quartic")); }

ObjectiveSpec flat_centered() {
  ObjectiveSpec o = centered_quartic();
  o.f = [](const VectorXd&) { return 0.0; };
  o.grad = [](const VectorXd&) { return VectorXd::Zero(2); };
  o.hess = [](const VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); };
  return o;
}

// A state with momentum content: displaced Gaussian times a plane wave.
WaveFunction moving_gaussian(const GridPtr& g) {
  WaveFunction wf = gaussian_state(g, v2(0.7, -0.4), 0.9);
  for (Eigen::Index i = 0; i < g->size(); ++i) wf.amp[i] *= std::polar(1.0, 1.3 * g->node(i)[0] - 0.6 * g->node(i)[1]);
  return wf;
}

std::vector<std::pair<double, double>> series(std::initializer_list<double> v) {
  std::vector<std::pair<double, double>> s;
  double t = 1;
  for (double x : v) s.push_back({t++, x});
  return s;
}

}  // namespace

TEST_CASE("observables and success probability") {
  const ObjectiveSpec st = objectives::get("styblinski_tang");
  const GridPtr g = make_grid(st.box, 128);
  const WaveFunction u = uniform_state(g);
  const MetricRecord r = analysis::observables(u, st, 1.0);
  CHECK(r.success_prob >= 0.0);
  CHECK(r.success_prob <= 1.0);
  const ObjectiveFields fields = objectives::eval_fields(st, g);
  CHECK(r.exp_f == doctest::Approx(fields.f.val.mean()).epsilon(1e-13));
  CHECK(r.exp_gradnorm_sq == doctest::Approx(fields.gradnorm_sq.val.mean()).epsilon(1e-13));

  const auto of = analysis::observable_fields(st, fields, 1.0);
  CHECK(std::abs(r.success_prob + analysis::failure_mass(u, of) - 1.0) <= 1e-14);

  CHECK(analysis::observables(u, st, 1e9).success_prob == doctest::Approx(1.0).epsilon(1e-14));

  // all mass on the best node
  Eigen::Index best;
  fields.f.val.minCoeff(&best);
  WaveFunction dirac{g, Eigen::VectorXcd::Zero(g->size())};
  dirac.amp[best] = 1.0;
  CHECK(analysis::observables(dirac, st, 1.0).success_prob == 1.0);

  WaveFunction bad = u;
  bad.amp *= 2;
  CHECK_THROWS_AS(analysis::observables(bad, st, 1.0), std::domain_error);
}

// Node counting converges only at first order: at N = 128 convex_quartic sits
// 1.1e-3 above the area fraction, so the property is checked at N = 256.
TEST_CASE("uniform success probability against a 1024^2 indicator oracle") {
  for (const auto& name : objectives::names()) {
    CAPTURE(name);
    const ObjectiveSpec o = objectives::get(name);
    const GridPtr g = make_grid(o.box, 256);
    const double p = analysis::observables(uniform_state(g), o, 1.0).success_prob;
    const double ref = oracle::indicator_fraction([&](double x, double y) { return o.f(v2(x, y)) - o.f_min <= 1.0; },
                                                  o.box.lo[0], o.box.hi[0], o.box.lo[1], o.box.hi[1], 1024);
    MESSAGE(name << ": grid " << p << ", oracle " << ref);
    CHECK(std::abs(p - ref) <= 1e-3);
  }
}

TEST_CASE("lyapunov E and F") {
  // the node sum is a second-order rule here; N = 128 leaves 1.4e-4 relative
  const ObjectiveSpec cq = centered_quartic();
  const GridPtr g = make_grid(cq.box, 256);
  const HamiltonianParams p{0.05, 0.0, 0.2, 1.0, 0.01, 1};

  SUBCASE("uniform state against quadrature") {
    // p psi = 0, so E(t0) = 1/2 <|alpha t grad f + 2x|^2> + (t^2 + omega t) <f>
    const double t = 1.0, w = p.omega(), area = 100.0;
    const double lo = cq.box.lo[0], hi = cq.box.hi[0];
    const double sq = oracle::midpoint_2d(
        [&](double x, double y) { return (p.alpha * t * cq.grad(v2(x, y)) + 2.0 * v2(x, y)).squaredNorm(); }, lo, hi, lo,
        hi, 512);
    const double fq = oracle::midpoint_2d([&](double x, double y) { return cq.f(v2(x, y)); }, lo, hi, lo, hi, 512);
    const double ref = 0.5 * sq / area + (t * t + w * t) * fq / area;
    const double e = analysis::lyapunov_E(uniform_state(g), cq, p, t);
    MESSAGE("E(t0) " << e << " vs quadrature " << ref);
    CHECK(std::abs(e - ref) <= 1e-4 * ref);
  }

  SUBCASE("bounds") {
    const WaveFunction wf = moving_gaussian(g);
    for (double t : {0.5, 1.0, 3.0}) {
      const double e = analysis::lyapunov_E(wf, cq, p, t);
      const MetricRecord r = analysis::observables(wf, cq, 1.0);
      CHECK(t * t * r.exp_f <= e);
      HamiltonianParams pb = p;
      pb.beta = 0.05;
      const double f = analysis::lyapunov_F(wf, cq, pb, t);
      CHECK(f >= e);
      CHECK(r.exp_gradnorm_sq <= 2.0 * f / (pb.beta * t * t));
      CHECK(analysis::lyapunov_F(wf, cq, p, t) == analysis::lyapunov_E(wf, cq, p, t));
    }
    // alpha = 0 and f = 0: half a squared norm, positive
    const ObjectiveSpec fl = flat_centered();
    CHECK(analysis::lyapunov_E(gaussian_state(g, v2(0, 0), 1.0), fl, HamiltonianParams{}, 1.0) > 0.0);
  }
}

TEST_CASE("lyapunov rejects uncentered objectives") {
  const ObjectiveSpec st = objectives::get("styblinski_tang");
  const GridPtr g = make_grid(st.box, 32);
  CHECK_THROWS_AS(analysis::lyapunov_E(uniform_state(g), st, {0.05, 0, 0.2, 1, 0.01, 1}, 1.0), std::invalid_argument);
  const ObjectiveSpec cq = centered_quartic();
  CHECK_THROWS_AS(analysis::lyapunov_E(uniform_state(make_grid(cq.box, 32)), cq, {0.05, 0, 0.2, 1, 0.01, 1}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("bound constants") {
  const ObjectiveSpec cq = centered_quartic();
  const GridPtr g = make_grid(cq.box, 128);
  const HamiltonianParams p{0.05, 0.0, 0.2, 1.0, 0.01, 1};
  CHECK(analysis::bound_constants(uniform_state(g), cq, p, 1.0).K0 == doctest::Approx(0.0));

  const auto bc = analysis::bound_constants(gaussian_state(g, v2(0, 0), 1.0), cq, p, 1.0);
  CHECK(std::abs(bc.K0 - 0.5) <= 1e-4);

  const WaveFunction wf = moving_gaussian(g);
  const auto b2 = analysis::bound_constants(wf, cq, p, 1.0);
  CHECK(b2.D0prime - b2.D0 == doctest::Approx(analysis::observables(wf, cq, 1.0).exp_gradnorm_sq).epsilon(1e-12));

  // alpha T0 <= 1: E(T0) is below its expansion bound
  for (double T0 : {0.5, 1.0, 2.0}) {
    CHECK(analysis::lyapunov_E(wf, cq, p, T0) <= analysis::lyapunov_E_expansion_bound(wf, cq, p, T0));
    CHECK(analysis::lyapunov_E(uniform_state(g), cq, p, T0) <=
          analysis::lyapunov_E_expansion_bound(uniform_state(g), cq, p, T0));
  }
}

TEST_CASE("monotonicity_check") {
  CHECK(analysis::monotonicity_check(series({5, 4, 3, 2}), 1e-3).empty());
  CHECK(analysis::monotonicity_check(series({2, 2, 2}), 0).empty());
  const auto v = analysis::monotonicity_check(series({5, 4, 4.1, 3, 3.5}), 1e-3);
  // index names the later sample of the offending pair
  REQUIRE(v.size() == 2);
  CHECK(v[0].index == 2);
  CHECK(v[0].relative_increase == doctest::Approx(0.025));
  CHECK(v[1].index == 4);
  // rel_tol absorbs small increases, the absolute floor covers zeros
  CHECK(analysis::monotonicity_check(series({1.0, 1.0005}), 1e-3).empty());
  CHECK(analysis::monotonicity_check(series({0.0, 5e-10}), 1e-3).empty());
  CHECK_THROWS_AS(analysis::monotonicity_check(series({1.0}), 1e-3), std::invalid_argument);
}

TEST_CASE("rate_fit") {
  std::vector<std::pair<double, double>> s, c;
  for (double t = 1; t <= 10; t += 0.5) {
    s.push_back({t, 3.0 / (t * t)});
    c.push_back({t, 7.0});
  }
  CHECK(std::abs(analysis::rate_fit(s, {2, 5}) + 2.0) <= 1e-10);
  CHECK(std::abs(analysis::rate_fit(c, {1, 10})) <= 1e-12);
  CHECK_THROWS_AS(analysis::rate_fit(s, {20, 30}), std::invalid_argument);
  c[3].second = 0;
  CHECK_THROWS_AS(analysis::rate_fit(c, {1, 10}), std::invalid_argument);
}

TEST_CASE("gradient-norm condition") {
  const ObjectiveSpec cq = centered_quartic();
  CHECK(analysis::gradient_norm_condition(cq, make_grid(cq.box, 128)) <= 0.0);
  // Styblinski-Tang violates it away from the origin
  const ObjectiveSpec st = objectives::center(objectives::get("styblinski_tang"));
  CHECK(analysis::gradient_norm_condition(st, make_grid(st.box, 64)) > 0.0);
}

TEST_CASE("property: <f> <= E/t^2 and <G> <= 2F/(beta t^2) along a run") {
  const ObjectiveSpec cq = centered_quartic();
  const GridPtr g = make_grid(cq.box, 64);
  for (bool f_variant : {false, true}) {
    const HamiltonianParams p{0.05, f_variant ? 0.05 : 0.0, 0.2, 1.0, 0.01, 100};
    evolution::EvolveOptions opts;
    opts.lyapunov = f_variant ? evolution::LyapunovKind::F : evolution::LyapunovKind::E;
    const auto r = evolution::evolve(uniform_state(g), p, cq, 1, opts);
    for (const auto& rec : r.series.records) {
      const double t2 = rec.t * rec.t;
      CHECK(rec.exp_f <= *rec.lyapunov / t2 + 1e-9);
      if (f_variant) CHECK(rec.exp_gradnorm_sq <= 2.0 * *rec.lyapunov / (p.beta * t2) + 1e-9);
    }
  }
}

TEST_CASE("commutator relations") {
  const auto rep = analysis::commutator_verify(64, analysis::PeriodicFunction{}, 0.1, 1.0);
  CHECK(rep.all_pass());
  CHECK(rep.checks.size() >= 7);
  for (const auto& c : rep.checks) {
    CAPTURE(c.name);
    CHECK(c.pass());
    if (c.regime == "full") CHECK(c.tolerance <= 1e-8);
    if (c.regime == "weak") CHECK(c.tolerance <= 1e-6);
  }

  // alpha = 0 collapses relation 1 onto i[p^2, g] = {p, g'} with g = f
  const auto r0 = analysis::commutator_verify(64, analysis::PeriodicFunction{}, 0.0, 1.0);
  double rel1 = -1, c1 = -1;
  for (const auto& c : r0.checks) {
    if (c.name.rfind("rel1", 0) == 0) rel1 = c.residual;
    if (c.name.rfind("p2g", 0) == 0) c1 = c.residual;
  }
  REQUIRE(rel1 >= 0);
  REQUIRE(c1 >= 0);
  CHECK(std::abs(rel1 - c1) <= 1e-13);

  CHECK_THROWS_AS(analysis::commutator_verify(256, analysis::PeriodicFunction{}, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(analysis::commutator_verify(4, analysis::PeriodicFunction{}, 0.1, 1.0), std::invalid_argument);
}
