#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "horomix/sl2.hpp"

namespace horomix::testing {

/// k(θ1)·a(t)·k(θ2) with ||g||_F^2 = 2 cosh t <= max_norm^2.
inline GroupElement random_element(std::mt19937_64& rng, double max_norm = 10.0) {
  std::uniform_real_distribution<double> angle(0.0, 4.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t_max = std::acosh(0.5 * max_norm * max_norm);
  const double t = t_max * unit(rng);
  return exp_flow(LieDirection::Theta, angle(rng)) * exp_flow(LieDirection::X, t) *
         exp_flow(LieDirection::Theta, angle(rng));
}

}  // namespace horomix::testing
