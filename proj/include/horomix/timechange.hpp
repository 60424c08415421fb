#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "horomix/lattice.hpp"
#include "horomix/observables.hpp"

namespace horomix {

/// Cocycle-solver settings and the generator τ of the time change.
struct FlowClock {
  TimeChangeGenerator tau;
  double step_init = 0.01;           // initial RK4 step in τ-time
  double tol = 1e-8;                 // local error tolerance
  std::size_t max_steps = 50'000'000;
  double horizon = 1e4;              // largest |t| accepted by the public entry points
  double segment = 1.0;              // horocycle time between reductions

  explicit FlowClock(TimeChangeGenerator generator) : tau(std::move(generator)) {}

  const Lattice& lattice() const { return *tau.lattice_ptr(); }
};

/// Incremental solver for one orbit: follows x·exp(uU) while tracking both
/// the horocycle time u and the τ-time t = ∫_0^u τ(h_s x) ds.
///
/// The orbit is cut into horocycle segments of length `clock.segment`; each
/// segment starts at a Γ-reduced anchor and τ restricted to it is known in
/// closed form (a constant plus finitely many active bump terms).
class OrbitWalker {
 public:
  OrbitWalker(const FlowClock& clock, const QuotientPoint& start);

  /// Advance (or retreat) until the τ-time equals t. Returns the point.
  const QuotientPoint& advance_to_time(double t);

  /// Advance (or retreat) until the horocycle time equals u.
  const QuotientPoint& advance_to_horocycle(double u);

  double time() const { return t_; }
  double horocycle_time() const { return u_anchor_ + dir_ * v_; }
  const QuotientPoint& point() const;
  std::size_t steps() const { return steps_; }

  /// Current segment: reduced anchor, direction (±1), length, signed
  /// horocycle offset of the current point from the anchor, and a counter
  /// that changes whenever a new segment is entered.
  const QuotientPoint& segment_anchor() const { return anchor_; }
  double segment_direction() const { return dir_; }
  double segment_length() const { return length_; }
  double segment_offset() const { return dir_ * v_; }
  std::uint64_t segment_id() const { return segment_id_; }

 private:
  struct Term {
    double a, b;  // active window in the forward parameter v
    ActiveTerm term;
  };

  void count_step(std::size_t k = 1) const;
  void enter(const QuotientPoint& anchor, double dir);
  void load_segment(double dir);
  void next_segment();
  double tau_at(const std::vector<const Term*>& live, double v) const;
  double term_integral(const Term& s, double a, double b) const;
  double piece_integral(std::size_t k, double v) const;
  std::size_t piece_of(double v) const;
  double integral_to(double v) const;
  double solve(double target) const;

  const FlowClock* clock_;
  QuotientPoint anchor_;
  double u_anchor_ = 0.0;
  double t_anchor_ = 0.0;
  double dir_ = 1.0;
  double length_ = 0.0;
  double constant_ = 0.0;
  std::vector<Term> terms_;
  std::vector<double> cuts_;        // piece boundaries in v
  std::vector<double> cumulative_;  // clock integral up to each cut
  double segment_integral_ = 0.0;
  double v_ = 0.0;
  double t_ = 0.0;
  std::uint64_t segment_id_ = 0;
  bool loaded_ = false;
  mutable std::optional<QuotientPoint> point_;
  mutable std::size_t steps_ = 0;
};

/// u(x, t): the horocycle time at which the τ-clock reads t.
double u_of(const FlowClock& clock, const QuotientPoint& x, double t);

/// ∫_0^U τ(h_s x) ds.
double inverse_clock(const FlowClock& clock, const QuotientPoint& x, double horocycle_time);

/// h^τ_t(x) = h_{u(x,t)}(x). Throws ResourceError beyond the horizon.
QuotientPoint flow_tau(const FlowClock& clock, const QuotientPoint& x, double t);

/// g_s(x) = x·exp(sX), reduced.
QuotientPoint geodesic(const Lattice& lattice, const QuotientPoint& x, double s);

/// Values of observables along the τ-orbit of x at τ-times start + j·step,
/// j = 0..count-1. Row i holds fs[i].
std::vector<std::vector<double>> record_orbit(const FlowClock& clock, const QuotientPoint& x,
                                              const std::vector<const Observable*>& fs,
                                              double start, double step, std::size_t count);

struct ShearReport {
  double discrepancy = 0.0;  // A(x, s, T)
  double residual = 0.0;     // quotient distance between the two sides of the commutation
  double u = 0.0;            // u(g_s x, T)
};

/// A(x,s,T) defined by u(x, e^s T + A) = e^s u(g_s x, T), with the
/// commutation residual d(h^τ_T g_s x, g_s h^τ_{e^s T + A} x).
ShearReport shear_report(const FlowClock& clock, const QuotientPoint& x, double s, double T);
double shear_discrepancy(const FlowClock& clock, const QuotientPoint& x, double s, double T);

/// ∫_0^T (τ - τ∘g_s)(h_t x) dt.
double deviation_integral(const FlowClock& clock, const QuotientPoint& x, double s, double T);

/// Reference bound s·T^(1-β) reported next to deviations.
inline double deviation_reference(double s, double T, double beta) {
  return s * std::pow(T, 1.0 - beta);
}

}  // namespace horomix
