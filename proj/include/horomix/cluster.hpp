#pragma once

#include <cstddef>
#include <vector>

namespace horomix {

/// Times 0 = t_0 < t_1 < ... < t_k with t_k > 1, and ζ_1..ζ_k in (0, 1).
struct ClusterInput {
  std::vector<double> zetas;
  std::vector<double> times;

  std::size_t k() const { return zetas.size(); }
};

/// Interval covering a time at the final radius: [0, r], [t_s - r, t_s + r]
/// around an anchor, or [t_k - r, t_k].
struct Cover {
  enum class Kind { Start, Anchor, End } kind = Kind::Start;
  std::size_t anchor = 0;  // index into anchors when kind == Anchor
};

struct ClusterResult {
  std::size_t stop_step = 0;
  std::vector<double> radii;          // r_1 .. r_stop
  std::vector<std::size_t> anchors;   // s_1 .. s_{stop-1}
  std::vector<Cover> assignment;      // one per time
  double xi_k = 0.0;
};

/// ∏ζ_i / (12k)^k.
double xi_k(const std::vector<double>& zetas, std::size_t k);

/// The time-clustering procedure: radii r_1 = t_k^(ζ_1/12k),
/// r_{m+1} = r_m^(ζ_{m+1}/12k); at step m every time must lie in
/// [0, r_m], [t_s - r_m, t_s + r_m] for an earlier anchor s, or
/// [t_k - r_m, t_k]; otherwise the largest uncovered index becomes the next
/// anchor. Closed intervals, exact comparisons. Throws InputError on
/// invalid input.
ClusterResult run_procedure(const ClusterInput& input);

/// min_i (t_{i+1} - t_i) >= t_k^ξ_k.
bool stop_condition_holds(const ClusterInput& input, const ClusterResult& result);

/// Reflect t_i -> t_k - t_{k-i} when the minimal gap is attained only by
/// the first gap, so that min over all gaps equals min over gaps i >= 1.
struct NormalizedTimes {
  std::vector<double> times;
  bool reflected = false;
};
NormalizedTimes normalize_times(const std::vector<double>& ts);
std::vector<double> reflect_times(const std::vector<double>& ts);

enum class ProofCase { A, B };

struct CasePlan {
  ProofCase which = ProofCase::A;
  double sigma = 0.0;
  double K = 0.0;                    // t1 / t2 (three-point plan)
  double threshold = 0.0;            // t2^(1 - β/2) (three-point plan)
  bool case_b_precondition = false;  // K > (σ t2)^(-3/2) (three-point plan)
  // k-point plan
  double alpha = 0.0;                // min(1/(3k), ξ_k/2)
  double xi = 0.0;
  bool reflected = false;
  std::vector<double> times;         // normalized times
  ClusterResult cluster;
};

/// σ = t2^-(1 - β/3); Case A iff t1 <= t2^(1 - β/2). Requires
/// 1 <= t1 <= t2 - t1 and 0 < β < 1/2; t2 <= 1 throws OutOfRegimeError.
CasePlan plan_3mix(double t1, double t2, double beta);

/// Normalizes the times, runs the procedure and sets Case A iff it stops
/// before step k, with σ = t_k^(-α²), α = min(1/(3k), ξ_k/2).
CasePlan plan_kmix(const std::vector<double>& ts, const std::vector<double>& zetas);

/// ζ_i = β_i / γ_i clamped into [floor, 1 - floor].
std::vector<double> default_zetas(const std::vector<double>& betas,
                                  const std::vector<double>& gammas, double floor = 1e-6);

}  // namespace horomix
