#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "horomix/errors.hpp"
#include "horomix/sl2.hpp"
#include "test_support.hpp"

using namespace horomix;

TEST_CASE("exp_flow closed forms") {
  CHECK(max_abs_diff(exp_flow(LieDirection::U, 0.0), GroupElement::identity()) == 0.0);
  const GroupElement u1 = exp_flow(LieDirection::U, 1.0);
  CHECK(u1.a() == 1.0);
  CHECK(u1.b() == 1.0);
  CHECK(u1.c() == 0.0);
  CHECK(u1.d() == 1.0);
  const GroupElement x2 = exp_flow(LieDirection::X, 2.0);
  CHECK(x2.a() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(x2.d() == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(x2.b() == 0.0);
  CHECK(x2.c() == 0.0);
  const GroupElement v = exp_flow(LieDirection::V, -3.0);
  CHECK(v.c() == -3.0);
  const GroupElement th = exp_flow(LieDirection::Theta, 1.0);
  CHECK(th.a() == doctest::Approx(std::cos(0.5)));
  CHECK(th.b() == doctest::Approx(std::sin(0.5)));
  CHECK(th.c() == doctest::Approx(-std::sin(0.5)));
  for (auto dir : {LieDirection::U, LieDirection::X, LieDirection::V, LieDirection::Theta}) {
    CHECK(std::abs(exp_flow(dir, 0.731).det() - 1.0) < 1e-12);
  }
}

TEST_CASE("exp_flow rejects non-finite time") {
  CHECK_THROWS_AS(exp_flow(LieDirection::U, std::numeric_limits<double>::infinity()), InputError);
  CHECK_THROWS_AS(exp_flow(LieDirection::X, std::nan("")), InputError);
}

TEST_CASE("GroupElement::make validates the determinant") {
  CHECK_NOTHROW(GroupElement::make(2, 3, 1, 2));
  CHECK_THROWS_AS(GroupElement::make(1, 1, 1, 1), InputError);
  CHECK_THROWS_AS(GroupElement::make(1, std::nan(""), 0, 1), InputError);
}

TEST_CASE("mul and inv") {
  std::mt19937_64 rng(7);
  const GroupElement g = testing::random_element(rng);
  CHECK(max_abs_diff(mul(GroupElement::identity(), g), g) == 0.0);
  CHECK(max_abs_diff(mul(g, inv(g)), GroupElement::identity()) < 1e-12);
  CHECK(max_abs_diff(exp_flow(LieDirection::X, 1) * exp_flow(LieDirection::X, 2),
                     exp_flow(LieDirection::X, 3)) < 1e-14);

  CHECK(max_abs_diff(inv(GroupElement::identity()), GroupElement::identity()) == 0.0);
  CHECK(max_abs_diff(inv(exp_flow(LieDirection::U, 2.5)), exp_flow(LieDirection::U, -2.5)) == 0.0);
  const GroupElement h = inv(GroupElement::make(2, 3, 1, 2));
  CHECK(h.a() == 2.0);
  CHECK(h.b() == -3.0);
  CHECK(h.c() == -1.0);
  CHECK(h.d() == 2.0);
}

TEST_CASE("one-parameter group law") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(-5.0, 5.0);
  for (auto dir : {LieDirection::U, LieDirection::X, LieDirection::V, LieDirection::Theta}) {
    for (int k = 0; k < 200; ++k) {
      const double t1 = t(rng);
      const double t2 = t(rng);
      const double err = max_abs_diff(exp_flow(dir, t1) * exp_flow(dir, t2), exp_flow(dir, t1 + t2));
      CHECK(err <= 1e-10);
    }
  }
}

TEST_CASE("renormalization residual") {
  CHECK(renormalization_residual(0.0, 3.0) == 0.0);
  CHECK(renormalization_residual(7.0, 0.0) == 0.0);
  CHECK(renormalization_residual(1.0, 1.0) <= 1e-12);
  for (int t = -1000; t <= 1000; t += 50) {
    for (int s = -5; s <= 5; ++s) CHECK(renormalization_residual(t, s) <= 1e-10);
  }
}

TEST_CASE("determinant stays controlled over a million products") {
  // conjugated rotations keep the orbit bounded but not orthogonal
  const GroupElement c = exp_flow(LieDirection::X, 1.0) * exp_flow(LieDirection::U, 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 12.0);
  OrbitAccumulator acc(c);
  for (int k = 0; k < 1000000; ++k) {
    acc.right_multiply(c * exp_flow(LieDirection::Theta, angle(rng)) * inv(c));
  }
  CHECK(std::abs(acc.value().det() - 1.0) <= 1e-6);
}

TEST_CASE("displacement matches the upper-half-plane metric") {
  // exp(tX)·i = e^t i, so d = |t|
  CHECK(displacement(exp_flow(LieDirection::X, 1.7)) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(displacement(exp_flow(LieDirection::Theta, 2.0)) == doctest::Approx(0.0));
  CHECK(parse_lie_direction("Theta") == LieDirection::Theta);
  CHECK_THROWS_AS(parse_lie_direction("W"), InputError);
}
