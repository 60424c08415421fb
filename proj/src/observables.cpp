#include "horomix/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "horomix/errors.hpp"

namespace horomix {

double bump_profile(double q) {
  if (!(q < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - q));
}

double HorocycleProfile::value(double u) const {
  double v = constant;
  for (const auto& t : terms) {
    if (t.lo >= u) break;
    if (u < t.hi) v += t.value(u);
  }
  return v;
}

namespace {

/// Operator norm of a 2x2 matrix.
double operator_norm(const Mat2& m) {
  const double f2 = frobenius_norm2(m);
  const double det = m.det();
  const double disc = std::max(0.0, f2 * f2 - 4.0 * det * det);
  return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
}

/// Largest hyperbolic displacement between A·i and c·i when ||A - c||_F <= r.
double support_reach(const GroupElement& center, double r) {
  const double cnorm = operator_norm(center.matrix());
  const double bound = std::sqrt(2.0) + cnorm * r;
  return std::acosh(std::max(1.0, 0.5 * bound * bound));
}

}  // namespace

BumpObservable BumpObservable::make(std::shared_ptr<const Lattice> lattice, const BumpSpec& spec) {
  if (!(spec.radius > 0.0)) throw InputError("BumpObservable: radius must be positive");
  if (!std::isfinite(spec.amplitude)) throw InputError("BumpObservable: non-finite amplitude");
  if (!(spec.ball_radius >= 0.0)) throw InputError("BumpObservable: ball radius must be >= 0");

  BumpObservable b;
  b.spec_ = spec;
  b.lattice_ = std::move(lattice);
  const double d_center = displacement(spec.center);
  const double d_supp = support_reach(spec.center, spec.radius);
  const double reach = 2.0 * std::asinh(0.5 * kSegmentReach);
  const double cover = b.lattice_->circumradius() + reach + d_supp + d_center + 1e-6;
  b.effective_ball_radius_ = std::max(spec.ball_radius, cover);

  auto translates = std::make_shared<std::vector<GroupElement>>();
  // the ball can hold both γ and -γ; keep one per sign class, then add both
  std::vector<GroupElement> classes;
  for (const auto& g : b.lattice_->ball(b.effective_ball_radius_)) {
    const GroupElement n = sign_normalized(g);
    const bool seen = std::any_of(classes.begin(), classes.end(), [&](const GroupElement& h) {
      return max_abs_diff(h, n) < Lattice::kDedupTolerance;
    });
    if (!seen) classes.push_back(n);
  }
  for (const auto& g : classes) {
    translates->push_back(g);
    translates->push_back(-g);
  }
  b.translates_ = std::move(translates);

  // count translates δ that could carry a second support onto the first
  std::size_t close = 0;
  const Mat2& c = spec.center.matrix();
  for (const auto& g : b.lattice_->ball(std::min(b.lattice_->max_ball_radius(),
                                                 2.0 * (d_supp + d_center) + 0.1))) {
    for (double sign : {1.0, -1.0}) {
      const Mat2 delta = g.matrix() * sign;
      if (max_abs_diff(GroupElement::unchecked(delta), GroupElement::identity()) < 1e-9) continue;
      const double sep = frobenius_norm(delta * c - c);
      if (sep <= (1.0 + operator_norm(delta)) * spec.radius) ++close;
    }
  }
  b.sup_bound_ = std::abs(spec.amplitude) * static_cast<double>(1 + close);
  return b;
}

double BumpObservable::eval(const GroupElement& g) const {
  const Mat2& c = spec_.center.matrix();
  const double inv_r2 = 1.0 / (spec_.radius * spec_.radius);
  double sum = 0.0;
  for (const auto& t : *translates_) {
    const double q = frobenius_norm2((t * g).matrix() - c) * inv_r2;
    if (q < 1.0) sum += bump_profile(q);
  }
  return spec_.amplitude * sum;
}

Jet BumpObservable::jet(const GroupElement& g, const Mat2& p, const Mat2& q) const {
  const Mat2& c = spec_.center.matrix();
  const double inv_r2 = 1.0 / (spec_.radius * spec_.radius);
  Jet out;
  for (const auto& t : *translates_) {
    const Mat2 a = (t * g).matrix();
    const Mat2 e = a - c;
    const double qq = frobenius_norm2(e) * inv_r2;
    if (!(qq < 1.0)) continue;
    const Mat2 ap = a * p;
    const Mat2 aq = a * q;
    const double q_s = 2.0 * frobenius_dot(e, ap) * inv_r2;
    const double q_t = 2.0 * frobenius_dot(e, aq) * inv_r2;
    const double q_st = 2.0 * (frobenius_dot(ap, aq) + frobenius_dot(e, ap * q)) * inv_r2;
    const double w = 1.0 / (1.0 - qq);
    const double phi = std::exp(1.0 - w);
    const double phi1 = -phi * w * w;
    const double phi2 = phi * (w * w * w * w - 2.0 * w * w * w);
    out.value += phi;
    out.d_first += phi1 * q_s;
    out.d_second += phi1 * q_t;
    out.d_mixed += phi2 * q_s * q_t + phi1 * q_st;
  }
  const double amp = spec_.amplitude;
  return {amp * out.value, amp * out.d_first, amp * out.d_second, amp * out.d_mixed};
}

void BumpObservable::append_horocycle_terms(const GroupElement& g, double span, double weight,
                                            std::vector<ActiveTerm>& out) const {
  const Mat2& c = spec_.center.matrix();
  const double inv_r2 = 1.0 / (spec_.radius * spec_.radius);
  const double u_min = std::min(0.0, span);
  const double u_max = std::max(0.0, span);
  const double coefficient = weight * spec_.amplitude;
  for (const auto& t : *translates_) {
    const Mat2 a = (t * g).matrix();
    const Mat2 e = a - c;
    // ||E + u·A·U||^2 with A·U = [[0, a11], [0, a21]]
    const double q2 = (a.a * a.a + a.c * a.c) * inv_r2;
    const double q1 = 2.0 * (e.b * a.a + e.d * a.c) * inv_r2;
    const double q0 = frobenius_norm2(e) * inv_r2;
    const double disc = q1 * q1 - 4.0 * q2 * (q0 - 1.0);
    if (!(disc > 0.0) || !(q2 > 0.0)) continue;
    const double sq = std::sqrt(disc);
    // stable roots of q2 u^2 + q1 u + (q0 - 1)
    const double k = -0.5 * (q1 + std::copysign(sq, q1));
    double r1 = k / q2;
    double r2 = (k != 0.0) ? (q0 - 1.0) / k : -r1;
    if (r1 > r2) std::swap(r1, r2);
    const double lo = std::max(r1, u_min);
    const double hi = std::min(r2, u_max);
    if (lo >= hi) continue;
    out.push_back({r1, r2, coefficient, q0, q1, q2});
  }
}

Observable Observable::constant(double c) {
  Observable o;
  o.constant_ = c;
  return o;
}

Observable Observable::from_bump(const BumpObservable& bump, double weight) {
  Observable o;
  o.terms_.emplace_back(weight, bump);
  return o;
}

double Observable::eval(const GroupElement& g) const {
  double v = constant_;
  for (const auto& [w, b] : terms_) v += w * b.eval(g);
  return v;
}

Jet Observable::jet(const GroupElement& g, const Mat2& p, const Mat2& q) const {
  Jet j{constant_, 0.0, 0.0, 0.0};
  for (const auto& [w, b] : terms_) {
    const Jet t = b.jet(g, p, q);
    j.value += w * t.value;
    j.d_first += w * t.d_first;
    j.d_second += w * t.d_second;
    j.d_mixed += w * t.d_mixed;
  }
  return j;
}

double Observable::sup_bound() const {
  double s = std::abs(constant_);
  for (const auto& [w, b] : terms_) s += std::abs(w) * b.sup_bound();
  return s;
}

double Observable::inf_bound() const {
  // bumps are nonnegative multiples of amplitude
  double s = constant_;
  for (const auto& [w, b] : terms_) {
    const double coef = w * b.spec().amplitude;
    if (coef < 0.0) s -= std::abs(w) * b.sup_bound();
  }
  return s;
}

HorocycleProfile Observable::horocycle_profile(const GroupElement& g, double span) const {
  HorocycleProfile p;
  p.constant = constant_;
  for (const auto& [w, b] : terms_) b.append_horocycle_terms(g, span, w, p.terms);
  std::sort(p.terms.begin(), p.terms.end(),
            [](const ActiveTerm& x, const ActiveTerm& y) { return x.lo < y.lo; });
  return p;
}

Observable Observable::shifted(double delta) const {
  Observable o = *this;
  o.constant_ += delta;
  return o;
}

Observable Observable::scaled(double factor) const {
  Observable o = *this;
  o.constant_ *= factor;
  for (auto& term : o.terms_) term.first *= factor;
  return o;
}

Observable Observable::plus(const Observable& other) const {
  Observable o = *this;
  o.constant_ += other.constant_;
  o.terms_.insert(o.terms_.end(), other.terms_.begin(), other.terms_.end());
  return o;
}

namespace {

// Representative of Γ·g inside the domain, so translate sets cover it.
GroupElement reduced_for(const Observable& f, const GroupElement& g) {
  if (f.is_constant()) return g;
  return f.terms().front().second.lattice().reduce(g).rep();
}

}  // namespace

double ShiftedProduct::eval(const GroupElement& g) const {
  return f_.eval(g) * f_.eval(reduced_for(f_, g * exp_flow(LieDirection::U, r_)));
}

Jet ShiftedProduct::jet(const GroupElement& g, const Mat2& p, const Mat2& q) const {
  // f(g e^{sP} e^{tQ} h_r) = f(g h_r e^{sP'} e^{tQ'}) with P' = h_r^{-1} P h_r
  const GroupElement h = exp_flow(LieDirection::U, r_);
  const GroupElement hinv = inv(h);
  const Mat2 p2 = hinv.matrix() * p * h.matrix();
  const Mat2 q2 = hinv.matrix() * q * h.matrix();
  const Jet a = f_.jet(g, p, q);
  const Jet b = f_.jet(reduced_for(f_, g * h), p2, q2);
  return {a.value * b.value, a.d_first * b.value + a.value * b.d_first,
          a.d_second * b.value + a.value * b.d_second,
          a.d_mixed * b.value + a.d_first * b.d_second + a.d_second * b.d_first +
              a.value * b.d_mixed};
}

double lie_derivative(const BumpObservable& f, LieDirection dir, const QuotientPoint& x) {
  const Mat2 m = algebra_matrix(dir);
  return f.jet(x.rep(), m, m).d_second;
}

double lie_derivative(const Observable& f, LieDirection dir, const QuotientPoint& x) {
  const Mat2 m = algebra_matrix(dir);
  return f.jet(x.rep(), m, m).d_second;
}

EstimateResult mc_mean(const Observable& f, std::size_t n, const HaarSampler& sampler,
                       const Observable* tau) {
  if (n == 0) throw InputError("mc_mean: n must be at least 1");
  std::vector<double> values(n);
  std::vector<double> weights(tau != nullptr ? n : 0);
  parallel_for(n, [&](std::size_t i) {
    const QuotientPoint x = sampler.draw(i);
    values[i] = f.eval(x);
    if (tau != nullptr) weights[i] = tau->eval(x);
  });
  return batch_mean(values, weights, sampler.seed());
}

Observable zero_mean(const Observable& f, std::size_t n, const HaarSampler& sampler,
                     const Observable* tau) {
  if (n < 1000) throw InputError("zero_mean: needs n >= 1000");
  if (f.is_constant()) return Observable::constant(0.0);
  return f.shifted(-mc_mean(f, n, sampler, tau).value);
}

TimeChangeGenerator TimeChangeGenerator::unit(std::shared_ptr<const Lattice> lattice) {
  return constant_tau(std::move(lattice), 1.0);
}

TimeChangeGenerator constant_tau(std::shared_ptr<const Lattice> lattice, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ModelError("constant_tau: value must be > 0");
  TimeChangeGenerator t;
  t.tau_ = Observable::constant(value);
  t.scale_ = 0.0;
  t.normalizer_ = 1.0;
  t.tau_min_ = value;
  t.lattice_ = std::move(lattice);
  return t;
}

TimeChangeGenerator make_tau(const BumpObservable& bump, double c, std::size_t n,
                             const HaarSampler& sampler) {
  if (!std::isfinite(c)) throw InputError("make_tau: non-finite scale");
  if (std::abs(c) * bump.sup_bound() > 0.5) {
    throw InputError("make_tau: |c|·sup|bump| = " + std::to_string(std::abs(c) * bump.sup_bound()) +
                     " exceeds 0.5");
  }
  TimeChangeGenerator t;
  t.lattice_ = bump.lattice_ptr();
  t.scale_ = c;
  if (c == 0.0) {
    t.tau_ = Observable::constant(1.0);
    return t;
  }
  const Observable raw = Observable::constant(1.0).plus(Observable::from_bump(bump, c));
  t.normalizer_ = mc_mean(raw, n, sampler).value;
  if (!(t.normalizer_ > 0.0)) throw ModelError("make_tau: non-positive normalizer");
  t.tau_ = raw.scaled(1.0 / t.normalizer_);
  t.tau_min_ = (1.0 - std::abs(c) * bump.sup_bound()) / t.normalizer_;
  if (!(t.tau_min_ > 0.0)) throw ModelError("make_tau: positivity violated");
  return t;
}

std::vector<WeightedPoint> sample_mu_tau(std::size_t n, const Observable& tau,
                                         const HaarSampler& sampler) {
  if (n == 0) throw InputError("sample_mu_tau: n must be at least 1");
  std::vector<QuotientPoint> points = sample_haar(n, sampler);
  std::vector<double> taus(n);
  parallel_for(n, [&](std::size_t i) { taus[i] = tau.eval(points[i]); });
  for (double v : taus) {
    if (!(v > 0.0)) throw ModelError("sample_mu_tau: non-positive τ value");
  }
  const double mean = pairwise_sum(taus) / static_cast<double>(n);
  std::vector<WeightedPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({points[i], taus[i] / mean});
  return out;
}

namespace {

template <class F>
double sobolev_proxy_impl(const F& f, int order, std::size_t n, const HaarSampler& sampler) {
  if (order < 0 || order > 2) throw InputError("sobolev_proxy: order must be 0, 1 or 2");
  if (n == 0) throw InputError("sobolev_proxy: n must be at least 1");
  const std::vector<double> per_point = parallel_map<double>(n, [&](std::size_t i) {
    const GroupElement g = sampler.draw(i).rep();
    double m = 0.0;
    for (LieDirection d1 : kSobolevDirections) {
      const Mat2 p = algebra_matrix(d1);
      for (LieDirection d2 : kSobolevDirections) {
        const Jet j = f.jet(g, p, algebra_matrix(d2));
        m = std::max(m, std::abs(j.value));
        if (order >= 1) m = std::max({m, std::abs(j.d_first), std::abs(j.d_second)});
        if (order >= 2) m = std::max(m, std::abs(j.d_mixed));
      }
    }
    return m;
  });
  return *std::max_element(per_point.begin(), per_point.end());
}

}  // namespace

double sobolev_proxy(const Observable& f, int order, std::size_t n, const HaarSampler& sampler) {
  return sobolev_proxy_impl(f, order, n, sampler);
}

double sobolev_proxy(const ShiftedProduct& f, int order, std::size_t n, const HaarSampler& sampler) {
  return sobolev_proxy_impl(f, order, n, sampler);
}

std::vector<BumpSpec> default_bump_specs() {
  return {
      {GroupElement::identity(), 0.35, 1.0, 4.0},
      {exp_flow(LieDirection::U, 0.4) * exp_flow(LieDirection::X, 0.3), 0.35, 1.0, 4.0},
      {exp_flow(LieDirection::V, 0.7), 0.35, 1.0, 4.0},
  };
}

}  // namespace horomix
