#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "horomix/errors.hpp"
#include "horomix/lattice.hpp"
#include "horomix/observables.hpp"
#include "test_support.hpp"

using namespace horomix;

namespace {

const std::shared_ptr<const Lattice>& bolza() {
  static const auto lattice = Lattice::bolza();
  return lattice;
}

const std::vector<BumpObservable>& default_bumps() {
  static const auto bumps = [] {
    std::vector<BumpObservable> out;
    for (const auto& spec : default_bump_specs()) out.push_back(BumpObservable::make(bolza(), spec));
    return out;
  }();
  return bumps;
}

Observable sum_of_defaults() {
  Observable f;
  for (const auto& b : default_bumps()) f = f.plus(Observable::from_bump(b));
  return f;
}

// Haar mean of a single unautomorphized bump at the identity: integrate
// ρ(||n(x)a(y)R(θ) - I||²/r²) dx dy/y² dθ over SL(2,R) on a midpoint grid,
// R(θ) the rotation by θ, and divide by vol(±Γ\SL(2,R)) = area · π.
double quadrature_mean_identity_bump(double r, int cells) {
  const double x0 = -0.7, x1 = 0.7, y0 = 0.45, y1 = 2.2, th0 = -1.3, th1 = 1.3;
  const double hx = (x1 - x0) / cells, hy = (y1 - y0) / cells, ht = (th1 - th0) / cells;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double x = x0 + (i + 0.5) * hx;
    for (int j = 0; j < cells; ++j) {
      const double y = y0 + (j + 0.5) * hy;
      for (int k = 0; k < cells; ++k) {
        const double th = th0 + (k + 0.5) * ht;
        const Mat2 g = HaarSampler::frame(x, y, th).matrix();
        const Mat2 e = g - GroupElement::identity().matrix();
        sum += bump_profile(frobenius_norm2(e) / (r * r)) / (y * y);
      }
    }
  }
  const double area = 4.0 * std::numbers::pi;
  return sum * hx * hy * ht / (area * std::numbers::pi);
}

}  // namespace

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == 1.0);
  CHECK(bump_profile(1.0) == 0.0);
  CHECK(bump_profile(2.0) == 0.0);
  CHECK(bump_profile(0.5) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("BumpObservable construction") {
  BumpSpec bad = default_bump_specs()[0];
  bad.radius = 0.0;
  CHECK_THROWS_AS(BumpObservable::make(bolza(), bad), InputError);
  for (const auto& b : default_bumps()) {
    CHECK(b.effective_ball_radius() >= b.spec().ball_radius);
    CHECK(b.translate_count() > 0);
    CHECK(b.sup_bound() >= 1.0);
  }
}

TEST_CASE("eval at the center is the amplitude; far away it is zero") {
  const auto& L = *bolza();
  BumpSpec spec = default_bump_specs()[0];
  spec.amplitude = 2.5;
  const auto f = BumpObservable::make(bolza(), spec);
  CHECK(f.eval(L.reduce(GroupElement::identity())) == doctest::Approx(2.5).epsilon(1e-14));
  // I·exp(2X) is at Frobenius distance > 1 from every translate of I within the domain
  CHECK(f.eval(L.reduce(exp_flow(LieDirection::X, 2.0))) == 0.0);
}

TEST_CASE("Gamma invariance") {
  const auto& L = *bolza();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Observable f = sum_of_defaults();
  HaarSampler sampler(bolza(), 5);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const QuotientPoint x = sampler.draw(i);
    const GroupElement moved = x.rep() * exp_flow(LieDirection::U, unit(rng));
    worst = std::max(worst, std::abs(f.eval(moved) - f.eval(L.reduce(moved))));
    worst = std::max(worst, std::abs(f.eval(-moved) - f.eval(moved)));
    const auto& gens = L.generators();
    const GroupElement gx = gens[i % gens.size()] * x.rep();
    worst = std::max(worst, std::abs(f.eval(L.reduce(gx)) - f.eval(x)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("analytic Lie derivatives match central differences") {
  const double h = 1e-5;
  HaarSampler sampler(bolza(), 17);
  const Observable f = sum_of_defaults();
  // include points on the supports so the check is not vacuous
  std::vector<GroupElement> points;
  for (const auto& spec : default_bump_specs()) {
    points.push_back(spec.center * exp_flow(LieDirection::X, 0.05) *
                     exp_flow(LieDirection::U, 0.07));
  }
  for (int i = 0; i < 1000; ++i) points.push_back(sampler.draw(i).rep());
  int nonzero = 0;
  double worst = 0.0;
  for (const auto& g : points) {
    for (LieDirection d : {LieDirection::U, LieDirection::X, LieDirection::V, LieDirection::Theta}) {
      const Mat2 m = algebra_matrix(d);
      const double analytic = f.jet(g, m, m).d_second;
      const double fd = (f.eval(g * exp_flow(d, h)) - f.eval(g * exp_flow(d, -h))) / (2.0 * h);
      if (analytic != 0.0) ++nonzero;
      worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(analytic)));
    }
  }
  CHECK(nonzero >= 12);
  CHECK(worst <= 1e-6);
}

TEST_CASE("mixed jet term matches a finite difference") {
  const Observable f = sum_of_defaults();
  const GroupElement g = default_bump_specs()[1].center * exp_flow(LieDirection::V, 0.04);
  const double h = 1e-4;
  for (LieDirection a : kSobolevDirections) {
    for (LieDirection b : kSobolevDirections) {
      const Jet j = f.jet(g, algebra_matrix(a), algebra_matrix(b));
      auto F = [&](double s, double t) { return f.eval(g * exp_flow(a, s) * exp_flow(b, t)); };
      const double fd = (F(h, h) - F(h, -h) - F(-h, h) + F(-h, -h)) / (4.0 * h * h);
      CHECK(j.d_mixed == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      CHECK(j.value == doctest::Approx(f.eval(g)));
    }
  }
}

TEST_CASE("Lie derivatives vanish at the bump maximum") {
  const auto& L = *bolza();
  const auto& f = default_bumps()[0];
  const QuotientPoint top = L.reduce(GroupElement::identity());
  for (LieDirection d : {LieDirection::U, LieDirection::X, LieDirection::V}) {
    CHECK(std::abs(lie_derivative(f, d, top)) <= 1e-12);
  }
  const QuotientPoint empty = L.reduce(exp_flow(LieDirection::X, 2.0));
  CHECK(lie_derivative(f, LieDirection::U, empty) == 0.0);
}

TEST_CASE("Haar mean of a bump matches grid quadrature") {
  const auto& f = default_bumps()[0];
  const double oracle = quadrature_mean_identity_bump(f.spec().radius, 90);
  HaarSampler sampler(bolza(), 2024);
  const EstimateResult mc = mc_mean(Observable::from_bump(f), 100'000, sampler);
  INFO("oracle " << oracle << " mc " << mc.value << " +- " << mc.stderr_);
  CHECK(oracle > 0.0);
  CHECK(std::abs(mc.value - oracle) <= 3.0 * mc.stderr_);
}

TEST_CASE("zero_mean") {
  HaarSampler sampler(bolza(), 31);
  HaarSampler fresh(bolza(), 32);
  CHECK_THROWS_AS(zero_mean(Observable::constant(1.0), 999, sampler), InputError);

  const Observable c = zero_mean(Observable::constant(3.0), 1000, sampler);
  CHECK(c.is_constant());
  CHECK(c.constant_term() == 0.0);

  const Observable f = sum_of_defaults();
  const Observable f0 = zero_mean(f, 50'000, sampler);
  const EstimateResult m = mc_mean(f0, 50'000, fresh);
  CHECK(std::abs(m.value) <= 3.0 * m.stderr_);

  // projection up to noise
  const Observable f00 = zero_mean(f0, 50'000, fresh);
  const double shift = f00.constant_term() - f0.constant_term();
  CHECK(std::abs(shift) <= 3.0 * m.stderr_);
}

TEST_CASE("make_tau") {
  HaarSampler sampler(bolza(), 41);
  const auto& bump = default_bumps()[1];

  const TimeChangeGenerator one = make_tau(bump, 0.0, 1000, sampler);
  CHECK(one.is_constant());
  for (int i = 0; i < 20; ++i) CHECK(one.eval(sampler.draw(i)) == 1.0);

  CHECK_THROWS_AS(make_tau(bump, 0.6, 1000, sampler), InputError);
  CHECK_THROWS_AS(make_tau(bump, std::nan(""), 1000, sampler), InputError);

  const TimeChangeGenerator tau = make_tau(bump, 0.3, 100'000, sampler);
  CHECK(tau.tau_min() > 0.0);
  CHECK(tau.tau_min() >= (1.0 - 0.3 * bump.sup_bound()) / tau.normalizer() - 1e-15);
  for (int i = 0; i < 2000; ++i) CHECK(tau.eval(sampler.draw(i)) >= tau.tau_min());

  HaarSampler fresh(bolza(), 4242);
  const EstimateResult m = mc_mean(tau.observable(), 100'000, fresh);
  CHECK(std::abs(m.value - 1.0) <= 3.0 * m.stderr_);

  const TimeChangeGenerator neg = make_tau(bump, -0.3, 10'000, sampler);
  CHECK(neg.tau_min() > 0.0);
}

TEST_CASE("constant_tau") {
  const TimeChangeGenerator t = constant_tau(bolza(), 2.0);
  CHECK(t.is_constant());
  CHECK(t.constant_value() == 2.0);
  CHECK_THROWS_AS(constant_tau(bolza(), 0.0), ModelError);
}

TEST_CASE("sample_mu_tau weights") {
  HaarSampler sampler(bolza(), 51);
  const TimeChangeGenerator tau = make_tau(default_bumps()[0], 0.4, 10'000, sampler);
  const auto pts = sample_mu_tau(5000, tau.observable(), sampler);
  REQUIRE(pts.size() == 5000);
  double total = 0.0;
  for (const auto& p : pts) {
    CHECK(p.weight > 0.0);
    total += p.weight;
  }
  CHECK(total / 5000.0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(sample_mu_tau(10, Observable::constant(-1.0), sampler), ModelError);
  CHECK_THROWS_AS(sample_mu_tau(0, tau.observable(), sampler), InputError);
}

TEST_CASE("sobolev proxy") {
  HaarSampler sampler(bolza(), 61);
  CHECK(sobolev_proxy(Observable::constant(0.0), 2, 100, sampler) == 0.0);
  CHECK(sobolev_proxy(Observable::constant(-2.5), 0, 100, sampler) == 2.5);
  CHECK(sobolev_proxy(Observable::constant(-2.5), 2, 100, sampler) == 2.5);
  CHECK_THROWS_AS(sobolev_proxy(Observable::constant(1.0), 3, 100, sampler), InputError);

  const Observable f = sum_of_defaults();
  CHECK(sobolev_proxy(f, 1, 5000, sampler) >= sobolev_proxy(f, 0, 5000, sampler));

  const Observable g = f.shifted(1.0);
  double previous = 0.0;
  for (double r : {1.0, 2.0, 4.0, 8.0}) {
    const double p = sobolev_proxy(ShiftedProduct(g, r), 2, 20'000, sampler);
    INFO("r = " << r << " proxy " << p);
    CHECK(p > previous);
    previous = p;
  }
}
