#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "horomix/sl2.hpp"

namespace horomix {

/// A point of M = Γ\SL(2,R): the Γ-reduced, sign-normalized representative.
/// Only `Lattice::reduce` produces these.
class QuotientPoint {
 public:
  const GroupElement& rep() const { return rep_; }

 private:
  friend class Lattice;
  explicit QuotientPoint(const GroupElement& g) : rep_(g) {}
  GroupElement rep_;
};

/// Flip the overall sign so the first entry of largest magnitude is positive.
GroupElement sign_normalized(const GroupElement& g);

/// Co-compact lattice Γ given by side-pairing generators of a Dirichlet
/// domain centered at i.
class Lattice {
 public:
  static constexpr double kDedupTolerance = 1e-8;
  static constexpr int kReduceIterationCap = 10000;

  struct Options {
    double circumradius = 0.0;    // Dirichlet-domain circumradius D0
    double max_ball_radius = 10.0;
  };

  /// `generators` holds g_0..g_{m-1} followed by their inverses.
  Lattice(std::vector<GroupElement> generators, Options options);

  /// The regular-octagon (Bolza) group. Verifies the surface relation and
  /// throws DiagnosticError if it fails.
  static std::shared_ptr<const Lattice> bolza();

  std::span<const GroupElement> generators() const { return generators_; }
  double circumradius() const { return options_.circumradius; }
  double max_ball_radius() const { return options_.max_ball_radius; }

  /// Γ-reduce g into the Dirichlet domain by greedy descent and normalize
  /// the sign. Throws DiagnosticError when the iteration cap is hit.
  QuotientPoint reduce(const GroupElement& g) const;

  /// True when no generator moves g·i closer to i.
  bool in_domain(const GroupElement& g) const;

  /// All γ with d(γ·i, i) <= radius. Cached; safe to call concurrently.
  /// Throws ResourceError above max_ball_radius().
  const std::vector<GroupElement>& ball(double radius) const;

  /// min over γ in Γ (and ±) of ||γ p - q||_F, for comparing points whose
  /// representatives may sit on different sides of the domain boundary.
  double quotient_distance(const QuotientPoint& p, const QuotientPoint& q) const;

  /// Residual max|w ∓ I| of the Bolza word g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3.
  double relation_residual() const;

 private:
  std::vector<GroupElement> enumerate_ball(double radius) const;

  std::vector<GroupElement> generators_;
  Options options_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::vector<GroupElement>> ball_cache_;
};

/// Circumradius of the regular octagon with interior angles π/4:
/// acosh(cot²(π/8)).
double bolza_circumradius();

/// Write a ball enumeration, one "a b c d" line per element.
void save_ball(const std::filesystem::path& path, double radius,
               std::span<const GroupElement> elements);
/// Read a file written by save_ball; validates every determinant.
std::vector<GroupElement> load_ball(const std::filesystem::path& path);

/// Source of i.i.d. Haar-distributed points of M. Sample `index` depends
/// only on (seed, index).
class HaarSampler {
 public:
  struct Envelope {
    double disk_radius = 0.0;      // Euclidean radius in the Poincaré disk
    double density_bound = 0.0;    // max of 4/(1-|w|^2)^2 over the disk
    double acceptance_floor = 0.02;
  };

  HaarSampler(std::shared_ptr<const Lattice> lattice, std::uint64_t seed);
  HaarSampler(std::shared_ptr<const Lattice> lattice, std::uint64_t seed, Envelope envelope);

  std::uint64_t seed() const { return seed_; }
  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  const Envelope& envelope() const { return envelope_; }

  /// Theoretical acceptance probability of one rejection trial.
  double expected_acceptance() const;

  QuotientPoint draw(std::uint64_t index) const;

  /// Frame matrix n(x) a(y) k(θ) for z = x + iy.
  static GroupElement frame(double x, double y, double theta);

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::uint64_t seed_;
  Envelope envelope_;
};

std::vector<QuotientPoint> sample_haar(std::size_t n, const HaarSampler& sampler);

}  // namespace horomix
