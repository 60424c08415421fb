#include "horomix/timechange.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "horomix/errors.hpp"

namespace horomix {

namespace {

constexpr double kQuadTol = 1e-13;   // absolute
constexpr int kQuadMinPanels = 8;
constexpr int kQuadMaxPanels = 1024;

// Composite 20-point Gauss-Legendre, doubling the panel count until two
// successive sums agree. The integrands are flat at the window edges, so
// this converges far faster than adaptive bisection.
template <class F>
double panel_quadrature(const F& f, double a, double b) {
  using rule = boost::math::quadrature::gauss<double, 20>;
  auto sum = [&](int n) {
    const double h = (b - a) / n;
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += rule::integrate(f, a + j * h, a + (j + 1) * h);
    return total;
  };
  double previous = sum(kQuadMinPanels);
  for (int n = 2 * kQuadMinPanels; n <= kQuadMaxPanels; n *= 2) {
    const double current = sum(n);
    if (std::abs(current - previous) <= kQuadTol) return current;
    previous = current;
  }
  return previous;
}

void check_time(const FlowClock& clock, double t, const char* who) {
  if (!std::isfinite(t)) throw InputError(std::string(who) + ": non-finite time");
  if (std::abs(t) > clock.horizon) {
    throw ResourceError(std::string(who) + ": |t| = " + std::to_string(std::abs(t)) +
                        " exceeds the horizon " + std::to_string(clock.horizon));
  }
}

}  // namespace

OrbitWalker::OrbitWalker(const FlowClock& clock, const QuotientPoint& start)
    : clock_(&clock), anchor_(start) {
  if (!(clock.segment > 0.0) || clock.segment > BumpObservable::kSegmentReach) {
    throw ConfigError("OrbitWalker: segment must lie in (0, " +
                      std::to_string(BumpObservable::kSegmentReach) + "]");
  }
  if (!(clock.tol > 0.0) || !(clock.step_init > 0.0)) {
    throw ConfigError("OrbitWalker: tol and step_init must be positive");
  }
}

void OrbitWalker::count_step(std::size_t k) const {
  steps_ += k;
  if (steps_ > clock_->max_steps) {
    throw ResourceError("OrbitWalker: step budget of " + std::to_string(clock_->max_steps) +
                        " exhausted");
  }
}

const QuotientPoint& OrbitWalker::point() const {
  if (!point_) {
    point_ = v_ == 0.0 ? anchor_
                       : clock_->lattice().reduce(anchor_.rep() *
                                                  exp_flow(LieDirection::U, dir_ * v_));
  }
  return *point_;
}

void OrbitWalker::enter(const QuotientPoint& anchor, double dir) {
  count_step();
  anchor_ = anchor;
  dir_ = dir;
  v_ = 0.0;
  length_ = clock_->segment;
  const HorocycleProfile profile =
      clock_->tau.observable().horocycle_profile(anchor_.rep(), dir_ * length_);
  constant_ = profile.constant;
  terms_.clear();
  for (const auto& t : profile.terms) {
    double a = dir_ * t.lo;
    double b = dir_ * t.hi;
    if (a > b) std::swap(a, b);
    a = std::max(a, 0.0);
    b = std::min(b, length_);
    if (a < b) terms_.push_back({a, b, t});
  }
  cuts_.assign({0.0, length_});
  for (const auto& t : terms_) {
    cuts_.push_back(t.a);
    cuts_.push_back(t.b);
  }
  std::sort(cuts_.begin(), cuts_.end());
  cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
  cumulative_.assign(1, 0.0);
  for (std::size_t k = 0; k + 1 < cuts_.size(); ++k) {
    cumulative_.push_back(cumulative_.back() + piece_integral(k, cuts_[k + 1]));
  }
  segment_integral_ = cumulative_.back();
  point_ = anchor_;
  ++segment_id_;
}

void OrbitWalker::load_segment(double dir) {
  const QuotientPoint here = point();
  u_anchor_ = horocycle_time();
  t_anchor_ = t_;
  enter(here, dir);
}

void OrbitWalker::next_segment() {
  const QuotientPoint next =
      clock_->lattice().reduce(anchor_.rep() * exp_flow(LieDirection::U, dir_ * length_));
  u_anchor_ += dir_ * length_;
  t_anchor_ += dir_ * segment_integral_;
  t_ = t_anchor_;
  enter(next, dir_);
}

double OrbitWalker::term_integral(const Term& s, double a, double b) const {
  a = std::max(a, s.a);
  b = std::min(b, s.b);
  if (!(a < b)) return 0.0;
  const double dir = dir_;
  return panel_quadrature([&s, dir](double v) { return s.term.value(dir * v); }, a, b);
}

double OrbitWalker::piece_integral(std::size_t k, double v) const {
  const double p0 = cuts_[k];
  double sum = constant_ * (v - p0);
  for (const auto& s : terms_) {
    if (s.a <= p0 && s.b >= cuts_[k + 1]) sum += term_integral(s, p0, v);
  }
  return sum;
}

std::size_t OrbitWalker::piece_of(double v) const {
  const auto it = std::upper_bound(cuts_.begin(), cuts_.end(), v);
  const std::size_t k = it == cuts_.begin() ? 0 : static_cast<std::size_t>(it - cuts_.begin()) - 1;
  return std::min(k, cuts_.size() - 2);
}

double OrbitWalker::integral_to(double v) const {
  const std::size_t k = piece_of(v);
  return cumulative_[k] + piece_integral(k, v);
}

double OrbitWalker::tau_at(const std::vector<const Term*>& live, double v) const {
  double tau = constant_;
  for (const Term* s : live) {
    if (v > s->a && v < s->b) tau += s->term.value(dir_ * v);
  }
  return tau;
}

double OrbitWalker::solve(double target) const {
  if (target >= segment_integral_) return length_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const std::size_t k = std::min(static_cast<std::size_t>(it - cumulative_.begin()) - 1,
                                 cuts_.size() - 2);
  const double p0 = cuts_[k];
  const double p1 = cuts_[k + 1];
  const double goal = target - cumulative_[k];
  std::vector<const Term*> live;
  for (const auto& s : terms_) {
    if (s.a <= p0 && s.b >= p1) live.push_back(&s);
  }
  if (live.empty()) return std::min(p1, p0 + goal / constant_);

  // RK4 with step doubling on dv/dt = 1/τ(v), then Newton on the clock.
  auto rate = [&](double v) { return 1.0 / tau_at(live, std::min(v, p1)); };
  auto rk4 = [&](double v, double h) {
    const double k1 = rate(v);
    const double k2 = rate(v + 0.5 * h * k1);
    const double k3 = rate(v + 0.5 * h * k2);
    const double k4 = rate(v + h * k3);
    return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  double v = p0;
  double t = 0.0;
  double h = clock_->step_init;
  while (t < goal) {
    count_step();
    h = std::min(h, goal - t);
    const double full = rk4(v, h);
    const double half = rk4(rk4(v, 0.5 * h), 0.5 * h);
    const double err = std::abs(half - full) / 15.0;
    if (err <= clock_->tol || h < 1e-12) {
      v = std::min(half + (half - full) / 15.0, p1);
      t += h;
      const double grow = err > 0.0 ? 0.9 * std::pow(clock_->tol / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      h *= std::clamp(0.9 * std::pow(clock_->tol / err, 0.2), 0.1, 0.5);
    }
  }
  for (int it = 0; it < 3; ++it) {
    const double residual = piece_integral(k, v) - goal;
    const double next = std::clamp(v - residual / tau_at(live, v), p0, p1);
    const double step = std::abs(next - v);
    v = next;
    if (step <= 1e-10) break;
  }
  return v;
}

const QuotientPoint& OrbitWalker::advance_to_time(double t) {
  if (!std::isfinite(t)) throw InputError("OrbitWalker: non-finite time");
  if (t == t_) return point();
  const double dir = t > t_ ? 1.0 : -1.0;
  if (!loaded_ || dir != dir_) {
    load_segment(dir);
    loaded_ = true;
  }
  for (;;) {
    const double target = dir_ * (t - t_anchor_);
    if (target <= segment_integral_) {
      v_ = solve(target);
      t_ = t;
      point_.reset();
      return point();
    }
    next_segment();
  }
}

const QuotientPoint& OrbitWalker::advance_to_horocycle(double u) {
  if (!std::isfinite(u)) throw InputError("OrbitWalker: non-finite horocycle time");
  const double here = horocycle_time();
  if (u == here) return point();
  const double dir = u > here ? 1.0 : -1.0;
  if (!loaded_ || dir != dir_) {
    load_segment(dir);
    loaded_ = true;
  }
  for (;;) {
    const double v = dir_ * (u - u_anchor_);
    if (v <= length_) {
      v_ = v;
      t_ = t_anchor_ + dir_ * integral_to(v);
      point_.reset();
      return point();
    }
    next_segment();
  }
}

std::vector<std::vector<double>> record_orbit(const FlowClock& clock, const QuotientPoint& x,
                                              const std::vector<const Observable*>& fs,
                                              double start, double step, std::size_t count) {
  if (!std::isfinite(start) || !std::isfinite(step) || step < 0.0) {
    throw InputError("record_orbit: start and step must be finite, step >= 0");
  }
  if (count > 0) check_time(clock, start + static_cast<double>(count - 1) * step, "record_orbit");
  check_time(clock, start, "record_orbit");
  std::vector<std::vector<double>> out(fs.size(), std::vector<double>(count));
  std::vector<HorocycleProfile> profiles(fs.size());
  std::uint64_t profile_id = 0;
  OrbitWalker w(clock, x);
  for (std::size_t j = 0; j < count; ++j) {
    w.advance_to_time(start + static_cast<double>(j) * step);
    if (w.segment_id() == 0) {
      for (std::size_t i = 0; i < fs.size(); ++i) out[i][j] = fs[i]->eval(w.point());
      continue;
    }
    if (w.segment_id() != profile_id) {
      const double span = w.segment_direction() * w.segment_length();
      for (std::size_t i = 0; i < fs.size(); ++i) {
        profiles[i] = fs[i]->horocycle_profile(w.segment_anchor().rep(), span);
      }
      profile_id = w.segment_id();
    }
    for (std::size_t i = 0; i < fs.size(); ++i) out[i][j] = profiles[i].value(w.segment_offset());
  }
  return out;
}

double u_of(const FlowClock& clock, const QuotientPoint& x, double t) {
  check_time(clock, t, "u_of");
  if (clock.tau.is_constant()) return t / clock.tau.constant_value();
  OrbitWalker w(clock, x);
  w.advance_to_time(t);
  return w.horocycle_time();
}

double inverse_clock(const FlowClock& clock, const QuotientPoint& x, double horocycle_time) {
  if (!std::isfinite(horocycle_time)) throw InputError("inverse_clock: non-finite time");
  if (clock.tau.is_constant()) return horocycle_time * clock.tau.constant_value();
  OrbitWalker w(clock, x);
  w.advance_to_horocycle(horocycle_time);
  return w.time();
}

QuotientPoint flow_tau(const FlowClock& clock, const QuotientPoint& x, double t) {
  check_time(clock, t, "flow_tau");
  OrbitWalker w(clock, x);
  if (clock.tau.is_constant()) return w.advance_to_horocycle(t / clock.tau.constant_value());
  return w.advance_to_time(t);
}

QuotientPoint geodesic(const Lattice& lattice, const QuotientPoint& x, double s) {
  return lattice.reduce(x.rep() * exp_flow(LieDirection::X, s));
}

ShearReport shear_report(const FlowClock& clock, const QuotientPoint& x, double s, double T) {
  if (!(s >= 0.0 && s < 1.0)) throw InputError("shear_discrepancy: s must lie in [0, 1)");
  if (!(T > 0.0)) throw InputError("shear_discrepancy: T must be positive");
  const Lattice& lattice = clock.lattice();
  const QuotientPoint y = geodesic(lattice, x, s);
  const double es = std::exp(s);
  ShearReport r;
  r.u = u_of(clock, y, T);
  r.discrepancy = inverse_clock(clock, x, es * r.u) - es * T;
  const QuotientPoint lhs = flow_tau(clock, y, T);
  const QuotientPoint rhs = geodesic(lattice, flow_tau(clock, x, es * T + r.discrepancy), s);
  r.residual = lattice.quotient_distance(lhs, rhs);
  return r;
}

double shear_discrepancy(const FlowClock& clock, const QuotientPoint& x, double s, double T) {
  return shear_report(clock, x, s, T).discrepancy;
}

double deviation_integral(const FlowClock& clock, const QuotientPoint& x, double s, double T) {
  if (!std::isfinite(s) || !std::isfinite(T)) throw InputError("deviation_integral: non-finite input");
  if (T < 0.0) throw InputError("deviation_integral: T must be non-negative");
  if (clock.tau.is_constant()) return 0.0;
  // τ(x·exp(tU)·exp(sX)) = τ(g_s x·exp(e^{-s} t U))
  const QuotientPoint y = geodesic(clock.lattice(), x, s);
  const double es = std::exp(s);
  return inverse_clock(clock, x, T) - es * inverse_clock(clock, y, T / es);
}

}  // namespace horomix
