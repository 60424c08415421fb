#include "horomix/sl2.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "horomix/errors.hpp"

namespace horomix {

GroupElement GroupElement::make(double a, double b, double c, double d) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) {
    throw InputError("GroupElement: non-finite entry");
  }
  const Mat2 m{a, b, c, d};
  if (std::abs(m.det() - 1.0) > kDetTolerance) {
    throw InputError("GroupElement: determinant " + std::to_string(m.det()) + " is not 1");
  }
  return GroupElement(m);
}

std::string_view to_string(LieDirection dir) {
  switch (dir) {
    case LieDirection::U: return "U";
    case LieDirection::X: return "X";
    case LieDirection::V: return "V";
    case LieDirection::Theta: return "Theta";
  }
  return "?";
}

LieDirection parse_lie_direction(std::string_view name) {
  if (name == "U") return LieDirection::U;
  if (name == "X") return LieDirection::X;
  if (name == "V") return LieDirection::V;
  if (name == "Theta") return LieDirection::Theta;
  throw InputError("unknown Lie direction '" + std::string(name) + "'");
}

Mat2 algebra_matrix(LieDirection dir) {
  switch (dir) {
    case LieDirection::U: return {0, 1, 0, 0};
    case LieDirection::X: return {0.5, 0, 0, -0.5};
    case LieDirection::V: return {0, 0, 1, 0};
    case LieDirection::Theta: return {0, 0.5, -0.5, 0};
  }
  return {};
}

GroupElement exp_flow(LieDirection dir, double t) {
  if (!std::isfinite(t)) throw InputError("exp_flow: non-finite time");
  switch (dir) {
    case LieDirection::U: return GroupElement::unchecked({1, t, 0, 1});
    case LieDirection::X: {
      const double e = std::exp(0.5 * t);
      return GroupElement::unchecked({e, 0, 0, 1.0 / e});
    }
    case LieDirection::V: return GroupElement::unchecked({1, 0, t, 1});
    case LieDirection::Theta: {
      const double c = std::cos(0.5 * t);
      const double s = std::sin(0.5 * t);
      return GroupElement::unchecked({c, s, -s, c});
    }
  }
  return {};
}

GroupElement mul(const GroupElement& g, const GroupElement& h) {
  return GroupElement::unchecked(g.matrix() * h.matrix());
}

GroupElement inv(const GroupElement& g) {
  return GroupElement::unchecked({g.d(), -g.b(), -g.c(), g.a()});
}

GroupElement renormalized(const GroupElement& g) {
  const double det = g.det();
  if (det <= 0.0 || !std::isfinite(det)) {
    throw DiagnosticError("renormalized: determinant collapsed");
  }
  return GroupElement::unchecked(g.matrix() * (1.0 / std::sqrt(det)));
}

double renormalization_residual(double t, double s) {
  const GroupElement lhs = exp_flow(LieDirection::X, s) * exp_flow(LieDirection::U, t);
  const GroupElement rhs = exp_flow(LieDirection::U, std::exp(s) * t) * exp_flow(LieDirection::X, s);
  return frobenius_norm(lhs.matrix() - rhs.matrix());
}

double max_abs_diff(const GroupElement& g, const GroupElement& h) {
  const Mat2 d = g.matrix() - h.matrix();
  return std::max({std::abs(d.a), std::abs(d.b), std::abs(d.c), std::abs(d.d)});
}

double displacement(const GroupElement& g) {
  // ||g||_F^2 = 2 cosh d(g·i, i)
  return std::acosh(std::max(1.0, 0.5 * g.norm2()));
}

double hyperbolic_distance(const GroupElement& g, const GroupElement& h) {
  return displacement(inv(h) * g);
}

void OrbitAccumulator::right_multiply(const GroupElement& h) {
  g_ = g_ * h;
  if (++count_ % cadence_ == 0) g_ = renormalized(g_);
}

std::ostream& operator<<(std::ostream& os, const GroupElement& g) {
  return os << "[[" << g.a() << ", " << g.b() << "], [" << g.c() << ", " << g.d() << "]]";
}

}  // namespace horomix
