#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "horomix/estimate.hpp"
#include "horomix/lattice.hpp"
#include "horomix/sl2.hpp"

namespace horomix {

/// Second-order jet of a function along g·exp(sP)·exp(tQ) at s = t = 0.
struct Jet {
  double value = 0.0;
  double d_first = 0.0;   // d/ds
  double d_second = 0.0;  // d/dt
  double d_mixed = 0.0;   // d²/ds dt
};

/// Smooth compactly supported profile ρ(r) = exp(1 - 1/(1-r²)) written in
/// q = r²; zero for q >= 1.
double bump_profile(double q);

/// One active term of an observable along a horocycle segment g·exp(uU):
/// coefficient·ρ(q(u)) with q(u) = q0 + q1·u + q2·u², nonzero on (lo, hi).
struct ActiveTerm {
  double lo, hi;
  double coefficient;
  double q0, q1, q2;

  double value(double u) const { return coefficient * bump_profile(q0 + u * (q1 + u * q2)); }
};

/// Restriction of an observable to the horocycle arc g·exp(uU), u in the
/// queried interval: a constant plus finitely many active terms.
struct HorocycleProfile {
  double constant = 0.0;
  std::vector<ActiveTerm> terms;  // sorted by lo

  double value(double u) const;
};

/// Parameters of a bump; the serializable part of a BumpObservable.
struct BumpSpec {
  GroupElement center;
  double radius = 0.35;
  double amplitude = 1.0;
  double ball_radius = 4.0;
};

/// Γ-invariant bump: the sum over ±γ of amplitude·ρ(||γg - center||_F / radius).
class BumpObservable {
 public:
  /// Horocycle reach (in time) the translate set is sized for.
  static constexpr double kSegmentReach = 1.0;

  static BumpObservable make(std::shared_ptr<const Lattice> lattice, const BumpSpec& spec);

  const BumpSpec& spec() const { return spec_; }
  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }

  /// Ball radius actually used: the configured radius or the smallest one
  /// that covers every translate reachable from the domain, if larger.
  double effective_ball_radius() const { return effective_ball_radius_; }
  std::size_t translate_count() const { return translates_->size(); }

  /// Valid at representatives within D0 + 2 asinh(kSegmentReach/2) of i.
  double eval(const GroupElement& g) const;
  double eval(const QuotientPoint& x) const { return eval(x.rep()); }

  Jet jet(const GroupElement& g, const Mat2& p, const Mat2& q) const;

  /// Upper bound for sup |f|.
  double sup_bound() const { return sup_bound_; }

  /// Append the active terms along g·exp(uU) for u between 0 and `span`
  /// (either sign), scaled by `weight`.
  void append_horocycle_terms(const GroupElement& g, double span, double weight,
                              std::vector<ActiveTerm>& out) const;

 private:
  BumpSpec spec_;
  std::shared_ptr<const Lattice> lattice_;
  std::shared_ptr<const std::vector<GroupElement>> translates_;  // ±γ
  double effective_ball_radius_ = 0.0;
  double sup_bound_ = 0.0;
};

/// Observable on M: constant + Σ weight_k · bump_k. Covers bumps, their
/// zero-mean projections, constants and time-change generators.
class Observable {
 public:
  Observable() = default;
  static Observable constant(double c);
  static Observable from_bump(const BumpObservable& bump, double weight = 1.0);

  double constant_term() const { return constant_; }
  const std::vector<std::pair<double, BumpObservable>>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  double eval(const GroupElement& g) const;
  double eval(const QuotientPoint& x) const { return eval(x.rep()); }
  Jet jet(const GroupElement& g, const Mat2& p, const Mat2& q) const;
  double sup_bound() const;
  double inf_bound() const;

  HorocycleProfile horocycle_profile(const GroupElement& g, double span) const;

  Observable shifted(double delta) const;
  Observable scaled(double factor) const;
  Observable plus(const Observable& other) const;

 private:
  double constant_ = 0.0;
  std::vector<std::pair<double, BumpObservable>> terms_;
};

/// f·(f∘h_r); used to probe Sobolev-size growth under composition.
class ShiftedProduct {
 public:
  ShiftedProduct(Observable f, double r) : f_(std::move(f)), r_(r) {}
  double eval(const GroupElement& g) const;
  Jet jet(const GroupElement& g, const Mat2& p, const Mat2& q) const;

 private:
  Observable f_;
  double r_;
};

/// d/dt f(x·exp(t·dir)) at t = 0, analytic.
double lie_derivative(const BumpObservable& f, LieDirection dir, const QuotientPoint& x);
double lie_derivative(const Observable& f, LieDirection dir, const QuotientPoint& x);

/// Haar-weighted (tau == nullptr) or μ^τ-weighted Monte Carlo mean of f.
EstimateResult mc_mean(const Observable& f, std::size_t n, const HaarSampler& sampler,
                       const Observable* tau = nullptr);

/// f minus its Monte Carlo mean under μ^τ (Haar when tau is null).
Observable zero_mean(const Observable& f, std::size_t n, const HaarSampler& sampler,
                     const Observable* tau = nullptr);

/// τ = (1 + c·bump)/normalizer with the normalizer a Haar Monte Carlo mean.
class TimeChangeGenerator {
 public:
  static TimeChangeGenerator unit(std::shared_ptr<const Lattice> lattice);

  const Observable& observable() const { return tau_; }
  double scale() const { return scale_; }
  double normalizer() const { return normalizer_; }
  /// Lower bound on τ over M.
  double tau_min() const { return tau_min_; }
  bool is_constant() const { return tau_.is_constant(); }
  /// Constant value when is_constant().
  double constant_value() const { return tau_.constant_term(); }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }

  double eval(const QuotientPoint& x) const { return tau_.eval(x); }

 private:
  friend TimeChangeGenerator make_tau(const BumpObservable&, double, std::size_t, const HaarSampler&);
  friend TimeChangeGenerator constant_tau(std::shared_ptr<const Lattice>, double);
  Observable tau_;
  double scale_ = 0.0;
  double normalizer_ = 1.0;
  double tau_min_ = 1.0;
  std::shared_ptr<const Lattice> lattice_;
};

/// Throws InputError if |c|·sup|bump| > 0.5 and ModelError if positivity
/// fails.
TimeChangeGenerator make_tau(const BumpObservable& bump, double c, std::size_t n,
                             const HaarSampler& sampler);

/// τ ≡ value, without the unit-mean normalization.
TimeChangeGenerator constant_tau(std::shared_ptr<const Lattice> lattice, double value);

/// μ^τ samples: Haar points with weights τ(x)/(batch mean of τ).
struct WeightedPoint {
  QuotientPoint point;
  double weight;
};
std::vector<WeightedPoint> sample_mu_tau(std::size_t n, const Observable& tau,
                                         const HaarSampler& sampler);

/// Max over n Haar samples of |D_w f| over Lie words w in {U,X,V} of length
/// <= order. Throws InputError for order > 2.
double sobolev_proxy(const Observable& f, int order, std::size_t n, const HaarSampler& sampler);
double sobolev_proxy(const ShiftedProduct& f, int order, std::size_t n, const HaarSampler& sampler);

/// Default observables: bumps at I, exp(0.4U)exp(0.3X), exp(0.7V).
std::vector<BumpSpec> default_bump_specs();

/// Default time change: τ built from a bump at I with scale c.
struct TauSpec {
  BumpSpec bump{GroupElement::identity(), 0.35, 1.0, 4.0};
  double c = 0.4;
  std::size_t normalizer_samples = 100'000;
};

}  // namespace horomix
