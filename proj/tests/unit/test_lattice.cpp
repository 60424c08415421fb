#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "horomix/errors.hpp"
#include "horomix/estimate.hpp"
#include "horomix/lattice.hpp"
#include "test_support.hpp"

using namespace horomix;

namespace {

const std::shared_ptr<const Lattice>& bolza() {
  static const auto lattice = Lattice::bolza();
  return lattice;
}

bool same_point(const QuotientPoint& p, const QuotientPoint& q, double tol) {
  return max_abs_diff(p.rep(), q.rep()) <= tol;
}

}  // namespace

TEST_CASE("Bolza generators") {
  const auto& L = *bolza();
  REQUIRE(L.generators().size() == 8);
  for (const auto& g : L.generators()) {
    CHECK(std::abs(g.det() - 1.0) <= 1e-12);
    CHECK(std::abs(std::abs(g.trace()) - (2.0 + 2.0 * std::numbers::sqrt2)) <= 1e-12);
  }
  CHECK(L.relation_residual() <= 1e-8);
  CHECK(L.circumradius() == doctest::Approx(std::acosh(3.0 + 2.0 * std::numbers::sqrt2)));
}

TEST_CASE("Lattice rejects elliptic generators") {
  std::vector<GroupElement> gens{exp_flow(LieDirection::Theta, 1.0), exp_flow(LieDirection::Theta, -1.0)};
  CHECK_THROWS_AS(Lattice(gens, {1.0, 5.0}), InputError);
}

TEST_CASE("reduce: fixed examples") {
  const auto& L = *bolza();
  CHECK(max_abs_diff(L.reduce(GroupElement::identity()).rep(), GroupElement::identity()) <= 1e-12);
  for (const auto& g : L.generators()) {
    CHECK(max_abs_diff(L.reduce(g).rep(), GroupElement::identity()) <= 1e-10);
  }
}

TEST_CASE("reduce: Γ-invariance, idempotence, displacement bound") {
  const auto& L = *bolza();
  const auto& ball6 = L.ball(6.0);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick(0, ball6.size() - 1);
  for (int k = 0; k < 100; ++k) {
    const GroupElement g = testing::random_element(rng, 10.0);
    const GroupElement& gamma = ball6[pick(rng)];
    const QuotientPoint a = L.reduce(g);
    const QuotientPoint b = L.reduce(gamma * g);
    CHECK(same_point(a, b, 1e-8));
    CHECK(same_point(L.reduce(a.rep()), a, 0.0));
    CHECK(displacement(a.rep()) <= L.circumradius() + 1e-9);
    CHECK(L.in_domain(a.rep()));
  }
}

TEST_CASE("ball enumeration") {
  const auto& L = *bolza();
  CHECK(L.ball(0.0).size() == 1);
  // smallest generator displacement is 2·acosh(1+√2) ≈ 3.06 > 0.1
  double min_disp = 1e9;
  for (const auto& g : L.generators()) min_disp = std::min(min_disp, displacement(g));
  CHECK(min_disp > 0.1);
  CHECK(min_disp == doctest::Approx(2.0 * std::acosh(1.0 + std::numbers::sqrt2)));
  CHECK(L.ball(0.1).size() == 1);

  std::size_t prev = 0;
  for (int r = 1; r <= 8; ++r) {
    const auto& b = L.ball(r);
    CHECK(b.size() >= prev);
    prev = b.size();
  }
  // subset and inverse closure
  const auto& small = L.ball(4.0);
  const auto& big = L.ball(6.5);
  const auto contains = [](const std::vector<GroupElement>& set, const GroupElement& g) {
    return std::any_of(set.begin(), set.end(),
                       [&](const GroupElement& h) { return max_abs_diff(g, h) <= 1e-8; });
  };
  for (const auto& g : small) {
    CHECK(contains(big, g));
    CHECK(contains(small, inv(g)));
    CHECK(displacement(g) <= 4.0 + 1e-9);
  }
  CHECK_THROWS_AS(L.ball(L.max_ball_radius() + 1.0), ResourceError);
  CHECK_THROWS_AS(L.ball(-1.0), InputError);
}

TEST_CASE("ball counts follow hyperbolic area growth") {
  // #{γ : d(γi,i) <= R} ~ area(disk R)/area(domain) = (cosh R - 1)/2
  const auto& L = *bolza();
  const double R = 8.0;
  const double expected = 0.5 * (std::cosh(R) - 1.0);
  const double got = static_cast<double>(L.ball(R).size());
  CHECK(got / expected == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("ball cache file round trip") {
  const auto& L = *bolza();
  const auto path = std::filesystem::temp_directory_path() / "horomix_ball_test.txt";
  save_ball(path, 3.0, L.ball(3.0));
  const auto loaded = load_ball(path);
  REQUIRE(loaded.size() == L.ball(3.0).size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(max_abs_diff(loaded[i], L.ball(3.0)[i]) == 0.0);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_ball(path), ConfigError);
}

TEST_CASE("quotient distance identifies translates") {
  const auto& L = *bolza();
  std::mt19937_64 rng(5);
  const GroupElement g = testing::random_element(rng, 3.0);
  const QuotientPoint p = L.reduce(g);
  const QuotientPoint q = L.reduce(L.generators()[2] * g);
  CHECK(L.quotient_distance(p, q) <= 1e-10);
  const QuotientPoint far = L.reduce(g * exp_flow(LieDirection::X, 0.3));
  CHECK(L.quotient_distance(p, far) > 1e-3);
}

TEST_CASE("Haar sampler: determinism and envelope") {
  HaarSampler a(bolza(), 99);
  HaarSampler b(bolza(), 99);
  HaarSampler c(bolza(), 100);
  for (std::uint64_t i = 0; i < 50; ++i) {
    CHECK(max_abs_diff(a.draw(i).rep(), b.draw(i).rep()) == 0.0);
  }
  CHECK(max_abs_diff(a.draw(0).rep(), c.draw(0).rep()) > 0.0);
  CHECK(a.expected_acceptance() > 0.05);
  HaarSampler::Envelope tight{0.5, 100.0, 0.5};
  CHECK_THROWS_AS(HaarSampler(bolza(), 1, tight), ConfigError);
  CHECK_THROWS_AS(sample_haar(0, a), InputError);
}

TEST_CASE("Haar sampler: constant mean and small-disk mass") {
  HaarSampler sampler(bolza(), 123);
  const std::size_t n = 100000;
  const auto pts = sample_haar(n, sampler);
  std::vector<double> ones(n, 1.0);
  std::vector<double> inside(n);
  for (std::size_t i = 0; i < n; ++i) {
    inside[i] = displacement(pts[i].rep()) <= 0.5 ? 1.0 : 0.0;
  }
  CHECK(batch_mean(ones, {}, 0).value == 1.0);
  const auto mass = batch_mean(inside, {}, 0);
  // Gauss–Bonnet: area 4π; disk area 2π(cosh 0.5 - 1)
  const double expected = 2.0 * std::numbers::pi * (std::cosh(0.5) - 1.0) / (4.0 * std::numbers::pi);
  CHECK(std::abs(mass.value - expected) <= 3.0 * mass.stderr_);
}

TEST_CASE("Haar measure is invariant under the geodesic flow") {
  const auto& L = *bolza();
  HaarSampler sampler(bolza(), 77);
  const std::size_t n = 100000;
  // Γ-invariant test function: distance from z to the orbit Γ·i, smoothed
  const auto f = [&](const GroupElement& g) {
    const QuotientPoint x = L.reduce(g);
    return std::exp(-displacement(x.rep())) * (1.0 + 0.5 * x.rep().a());
  };
  std::vector<double> before(n), after(n);
  const GroupElement gs = exp_flow(LieDirection::X, 1.0);
  parallel_for(n, [&](std::size_t i) {
    const QuotientPoint x = sampler.draw(i);
    before[i] = f(x.rep());
    after[i] = f(x.rep() * gs);
  });
  HaarSampler other(bolza(), 78);
  std::vector<double> fresh(n);
  parallel_for(n, [&](std::size_t i) { fresh[i] = f(other.draw(i).rep()); });
  const auto m0 = batch_mean(fresh, {}, 78);
  const auto m1 = batch_mean(after, {}, 77);
  const double se = std::hypot(m0.stderr_, m1.stderr_);
  CHECK(std::abs(m0.value - m1.value) <= 3.0 * se);
}
