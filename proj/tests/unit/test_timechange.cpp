#include <doctest.h>

#include <cmath>
#include <random>

#include "horomix/errors.hpp"
#include "horomix/timechange.hpp"

using namespace horomix;

namespace {

const std::shared_ptr<const Lattice>& bolza() {
  static const auto lattice = Lattice::bolza();
  return lattice;
}

const HaarSampler& sampler() {
  static const HaarSampler s(bolza(), 99);
  return s;
}

const TimeChangeGenerator& default_tau() {
  static const TimeChangeGenerator tau = [] {
    const TauSpec spec;
    return make_tau(BumpObservable::make(bolza(), spec.bump), spec.c, 20'000, sampler());
  }();
  return tau;
}

// wide bump so that most orbit segments of length 50 cross its support
const TimeChangeGenerator& busy_tau() {
  static const TimeChangeGenerator tau = [] {
    const auto bump = BumpObservable::make(bolza(), {GroupElement::identity(), 0.9, 1.0, 4.0});
    return make_tau(bump, -0.45 / bump.sup_bound(), 20'000, sampler());
  }();
  return tau;
}

// Composite Simpson on [0, U] of τ(reduce(x·exp(sU))), evaluated from scratch.
double brute_clock(const TimeChangeGenerator& tau, const QuotientPoint& x, double U, int intervals) {
  const Lattice& L = *bolza();
  const double h = U / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * tau.eval(L.reduce(x.rep() * exp_flow(LieDirection::U, i * h)));
  }
  return sum * h / 3.0;
}

// Simpson on [0, T] of τ(h_t x) - τ(g_s h_t x).
double brute_deviation(const TimeChangeGenerator& tau, const QuotientPoint& x, double s, double T,
                       int intervals) {
  const Lattice& L = *bolza();
  const double h = T / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const GroupElement ht = x.rep() * exp_flow(LieDirection::U, i * h);
    sum += w * (tau.eval(L.reduce(ht)) - tau.eval(L.reduce(ht * exp_flow(LieDirection::X, s))));
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("constant time changes") {
  const FlowClock unit(TimeChangeGenerator::unit(bolza()));
  const FlowClock doubled(constant_tau(bolza(), 2.0));
  const auto& L = *bolza();
  for (int i = 0; i < 20; ++i) {
    const QuotientPoint x = sampler().draw(i);
    const double t = 3.7 * i - 20.0;
    CHECK(u_of(unit, x, t) == t);
    CHECK(u_of(doubled, x, t) == t / 2.0);
    CHECK(inverse_clock(unit, x, t) == t);
    CHECK(inverse_clock(doubled, x, t) == 2.0 * t);
  }
  const QuotientPoint x = sampler().draw(3);
  CHECK(max_abs_diff(flow_tau(unit, x, 0.0).rep(), x.rep()) == 0.0);
  CHECK(max_abs_diff(flow_tau(unit, x, 5.0).rep(),
                     L.reduce(x.rep() * exp_flow(LieDirection::U, 5.0)).rep()) <= 1e-12);
  CHECK(u_of(FlowClock(default_tau()), x, 0.0) == 0.0);
}

TEST_CASE("u_of solves the defining integral") {
  for (const auto* tau : {&default_tau(), &busy_tau()}) {
    const FlowClock clock(*tau);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> time(-50.0, 50.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const QuotientPoint x = sampler().draw(100 + i);
      const double t = time(rng);
      const double u = u_of(clock, x, t);
      worst = std::max(worst, std::abs(inverse_clock(clock, x, u) - t) / std::max(1.0, std::abs(t)));
    }
    CHECK(worst <= 10.0 * clock.tol);
  }
}

TEST_CASE("inverse_clock agrees with brute-force quadrature") {
  const FlowClock clock(busy_tau());
  int active = 0;
  for (int i = 0; i < 12; ++i) {
    const QuotientPoint x = sampler().draw(200 + i);
    const double U = 20.0;
    const double fast = inverse_clock(clock, x, U);
    const double slow = brute_clock(busy_tau(), x, U, 20'000);
    if (std::abs(fast - U * busy_tau().observable().constant_term()) > 1e-3) ++active;
    CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    CHECK(inverse_clock(clock, x, -U) ==
          doctest::Approx(brute_clock(busy_tau(), x, -U, 20'000)).epsilon(1e-9));
  }
  CHECK(active >= 6);
  CHECK(inverse_clock(clock, sampler().draw(0), 0.0) == 0.0);
}

TEST_CASE("u_of is strictly increasing") {
  const FlowClock clock(busy_tau());
  const QuotientPoint x = sampler().draw(300);
  double previous = -1e300;
  for (int k = -40; k <= 40; ++k) {
    const double u = u_of(clock, x, 0.5 * k);
    CHECK(u > previous);
    previous = u;
  }
}

TEST_CASE("cocycle additivity and the flow property") {
  const FlowClock clock(busy_tau());
  const auto& L = *bolza();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> time(0.0, 50.0);
  double worst_u = 0.0;
  double worst_flow = 0.0;
  for (int i = 0; i < 100; ++i) {
    const QuotientPoint x = sampler().draw(400 + i);
    const double t1 = time(rng);
    const double t2 = time(rng);
    const QuotientPoint y = flow_tau(clock, x, t1);
    worst_u = std::max(worst_u, std::abs(u_of(clock, x, t1 + t2) - u_of(clock, x, t1) -
                                         u_of(clock, y, t2)));
    worst_flow = std::max(worst_flow,
                          L.quotient_distance(flow_tau(clock, y, t2), flow_tau(clock, x, t1 + t2)));
  }
  CHECK(worst_u <= 10.0 * clock.tol);
  CHECK(worst_flow <= 1e-6);
}

TEST_CASE("walker can reverse") {
  const FlowClock clock(busy_tau());
  const QuotientPoint x = sampler().draw(500);
  OrbitWalker w(clock, x);
  w.advance_to_time(30.0);
  w.advance_to_time(-12.0);
  CHECK(w.time() == -12.0);
  CHECK(w.horocycle_time() == doctest::Approx(u_of(clock, x, -12.0)).epsilon(1e-9));
  w.advance_to_time(0.0);
  CHECK(std::abs(w.horocycle_time()) <= 1e-8);
  CHECK(bolza()->quotient_distance(w.point(), x) <= 1e-7);
}

TEST_CASE("shear discrepancy") {
  const FlowClock unit(TimeChangeGenerator::unit(bolza()));
  const FlowClock clock(busy_tau());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s_dist(0.01, 0.99);
  std::uniform_real_distribution<double> t_dist(1.0, 100.0);
  double worst_unit = 0.0, worst_s0 = 0.0, worst_residual = 0.0;
  for (int i = 0; i < 30; ++i) {
    const QuotientPoint x = sampler().draw(600 + i);
    const double s = s_dist(rng);
    const double T = t_dist(rng);
    worst_unit = std::max(worst_unit, std::abs(shear_discrepancy(unit, x, s, T)));
    worst_s0 = std::max(worst_s0, std::abs(shear_discrepancy(clock, x, 0.0, T)));
    worst_residual = std::max(worst_residual, shear_report(clock, x, s, T).residual);
  }
  CHECK(worst_unit <= 1e-6);
  CHECK(worst_s0 <= 1e-6);
  CHECK(worst_residual <= 1e-5);

  // A equals the deviation integral up to e^s u(g_s x, T)
  for (int i = 0; i < 6; ++i) {
    const QuotientPoint x = sampler().draw(700 + i);
    const double s = 0.3;
    const auto r = shear_report(clock, x, s, 15.0);
    const double upper = std::exp(s) * r.u;
    CHECK(r.discrepancy ==
          doctest::Approx(brute_deviation(busy_tau(), x, s, upper, 20'000)).epsilon(1e-6).scale(1.0));
  }

  CHECK_THROWS_AS(shear_discrepancy(clock, sampler().draw(0), 1.0, 10.0), InputError);
  CHECK_THROWS_AS(shear_discrepancy(clock, sampler().draw(0), 0.5, -1.0), InputError);
}

TEST_CASE("deviation integral") {
  const FlowClock unit(TimeChangeGenerator::unit(bolza()));
  const FlowClock clock(busy_tau());
  const QuotientPoint x = sampler().draw(800);
  CHECK(deviation_integral(unit, x, 0.4, 50.0) == 0.0);
  CHECK(std::abs(deviation_integral(clock, x, 0.0, 50.0)) <= 1e-9);
  for (int i = 0; i < 6; ++i) {
    const QuotientPoint y = sampler().draw(810 + i);
    CHECK(deviation_integral(clock, y, 0.2, 25.0) ==
          doctest::Approx(brute_deviation(busy_tau(), y, 0.2, 25.0, 20'000)).epsilon(1e-6).scale(1.0));
  }
  CHECK(deviation_reference(0.1, 100.0, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(deviation_integral(clock, x, 0.1, -2.0), InputError);
}

TEST_CASE("resource limits") {
  FlowClock clock(busy_tau());
  const QuotientPoint x = sampler().draw(900);
  CHECK_THROWS_AS(flow_tau(clock, x, 2e4), ResourceError);
  CHECK_THROWS_AS(u_of(clock, x, -1.5e4), ResourceError);
  CHECK_THROWS_AS(u_of(clock, x, std::nan("")), InputError);
  clock.max_steps = 10;
  CHECK_THROWS_AS(u_of(clock, x, 100.0), ResourceError);
  clock.max_steps = 1'000'000;
  clock.segment = 2.0;
  CHECK_THROWS_AS(u_of(clock, x, 1.0), ConfigError);
}

TEST_CASE("record_orbit matches pointwise evaluation") {
  const FlowClock clock(busy_tau());
  Observable f;
  for (const auto& spec : default_bump_specs()) {
    f = f.plus(Observable::from_bump(BumpObservable::make(bolza(), spec)));
  }
  const Observable g = Observable::from_bump(BumpObservable::make(bolza(), {exp_flow(LieDirection::X, 0.5), 1.0, 1.0, 4.0}));
  for (int i = 0; i < 5; ++i) {
    const QuotientPoint x = sampler().draw(950 + i);
    const auto rows = record_orbit(clock, x, {&f, &g}, 0.0, 0.37, 120);
    REQUIRE(rows.size() == 2);
    double worst = 0.0;
    double mass = 0.0;
    for (std::size_t j = 0; j < 120; ++j) {
      const QuotientPoint y = flow_tau(clock, x, 0.37 * j);
      worst = std::max(worst, std::abs(rows[0][j] - f.eval(y)));
      worst = std::max(worst, std::abs(rows[1][j] - g.eval(y)));
      mass += rows[1][j];
    }
    CHECK(mass > 0.0);
    CHECK(worst <= 1e-9);
  }
  CHECK(record_orbit(clock, sampler().draw(0), {&f}, 5.0, 1.0, 0)[0].empty());
  CHECK_THROWS_AS(record_orbit(clock, sampler().draw(0), {&f}, 0.0, -1.0, 3), InputError);
  CHECK_THROWS_AS(record_orbit(clock, sampler().draw(0), {&f}, 0.0, 100.0, 200), ResourceError);
}
