#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace horomix {

/// Plain 2x2 real matrix, row-major. Used for Lie-algebra elements and
/// differences of group elements; carries no determinant invariant.
struct Mat2 {
  double a = 0, b = 0, c = 0, d = 0;

  constexpr Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  constexpr Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  constexpr Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  constexpr Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }
};

/// Frobenius inner product <A, B> = tr(A^T B).
constexpr double frobenius_dot(const Mat2& x, const Mat2& y) {
  return x.a * y.a + x.b * y.b + x.c * y.c + x.d * y.d;
}
constexpr double frobenius_norm2(const Mat2& x) { return frobenius_dot(x, x); }
inline double frobenius_norm(const Mat2& x) { return std::sqrt(frobenius_norm2(x)); }

/// Element of SL(2,R). Construction through `make` validates det = 1;
/// products and inverses preserve it up to rounding.
class GroupElement {
 public:
  static constexpr double kDetTolerance = 1e-9;

  constexpr GroupElement() = default;

  /// Throws InputError when an entry is non-finite or |det - 1| > 1e-9.
  static GroupElement make(double a, double b, double c, double d);
  static GroupElement make(const Mat2& m) { return make(m.a, m.b, m.c, m.d); }

  /// No validation; for closed-form constructions whose determinant is 1
  /// by algebra.
  static constexpr GroupElement unchecked(const Mat2& m) { return GroupElement(m); }

  static constexpr GroupElement identity() { return GroupElement(); }

  constexpr double a() const { return m_.a; }
  constexpr double b() const { return m_.b; }
  constexpr double c() const { return m_.c; }
  constexpr double d() const { return m_.d; }
  constexpr const Mat2& matrix() const { return m_; }
  constexpr double det() const { return m_.det(); }
  constexpr double trace() const { return m_.trace(); }

  /// Squared Frobenius norm; equals 2 cosh d(g·i, i).
  constexpr double norm2() const { return frobenius_norm2(m_); }

  constexpr GroupElement operator-() const { return GroupElement(m_ * -1.0); }

 private:
  constexpr explicit GroupElement(const Mat2& m) : m_(m) {}
  Mat2 m_{1, 0, 0, 1};
};

enum class LieDirection : std::uint8_t { U, X, V, Theta };

std::string_view to_string(LieDirection dir);
LieDirection parse_lie_direction(std::string_view name);

/// Lie-algebra matrix of a direction: U = [[0,1],[0,0]], X = diag(1/2,-1/2),
/// V = [[0,0],[1,0]], Theta = [[0,1/2],[-1/2,0]].
Mat2 algebra_matrix(LieDirection dir);

inline constexpr std::array<LieDirection, 3> kSobolevDirections{LieDirection::U, LieDirection::X,
                                                                LieDirection::V};

/// exp(t·dir) in closed form. Throws InputError for non-finite t.
GroupElement exp_flow(LieDirection dir, double t);

GroupElement mul(const GroupElement& g, const GroupElement& h);
GroupElement inv(const GroupElement& g);

inline GroupElement operator*(const GroupElement& g, const GroupElement& h) { return mul(g, h); }

/// Rescale by 1/sqrt(det) to remove accumulated determinant drift.
GroupElement renormalized(const GroupElement& g);

/// Frobenius norm of exp(sX)exp(tU) - exp(e^s t U)exp(sX).
double renormalization_residual(double t, double s);

/// max |entry| difference.
double max_abs_diff(const GroupElement& g, const GroupElement& h);

/// Hyperbolic distance between g·i and i in the upper half plane.
double displacement(const GroupElement& g);

/// Hyperbolic distance between g·i and h·i.
double hyperbolic_distance(const GroupElement& g, const GroupElement& h);

/// Long products g <- g·h with a determinant rescale every `cadence`
/// multiplications.
class OrbitAccumulator {
 public:
  static constexpr int kDefaultCadence = 64;

  explicit OrbitAccumulator(GroupElement start = {}, int cadence = kDefaultCadence)
      : g_(start), cadence_(cadence) {}

  void right_multiply(const GroupElement& h);
  const GroupElement& value() const { return g_; }

 private:
  GroupElement g_;
  int cadence_;
  int count_ = 0;
};

std::ostream& operator<<(std::ostream& os, const GroupElement& g);

}  // namespace horomix
