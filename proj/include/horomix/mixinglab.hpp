#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "horomix/estimate.hpp"
#include "horomix/observables.hpp"
#include "horomix/timechange.hpp"

namespace horomix {

/// Orbit averaging for correlation estimates. Since μ^τ is invariant under
/// the time-changed flow, ∏ f_i(h^τ_{s+t_i} x) has the same expectation for
/// every s; averaging over s ∈ [0, window] on a grid of `window_step`
/// reduces the variance without bias. window = 0 evaluates at s = 0 only.
struct CorrelationOptions {
  double window = 0.0;
  double window_step = 0.5;
  std::size_t batches = kDefaultBatches;
};

/// ∫ ∏ f_i∘h^τ_{t_i} dμ^τ − ∏ ∫ f_i dμ^τ. Coupled: each ∫ f_i dμ^τ is the
/// orbit average of factor i over its own window on the same sample points,
/// so first-order fluctuations cancel. Jackknife error of the difference.
EstimateResult correlate_k(const std::vector<const Observable*>& fs, const std::vector<double>& ts,
                           const FlowClock& clock, std::size_t n, std::uint64_t seed,
                           const CorrelationOptions& options = {});

/// Several time tuples estimated from one trajectory bundle per sample
/// point. Results are identical to separate correlate_k calls.
std::vector<EstimateResult> correlate_k_grid(const std::vector<const Observable*>& fs,
                                             const std::vector<std::vector<double>>& tuples,
                                             const FlowClock& clock, std::size_t n,
                                             std::uint64_t seed,
                                             const CorrelationOptions& options = {});

/// (1/σ)∫_0^σ f(h^τ_t g_r x) dr by Simpson's rule with `steps` intervals.
double geodesic_arc_average(const Observable& f, const FlowClock& clock, const QuotientPoint& x,
                            double sigma, double t, std::size_t steps = 256);

/// ‖(1/(n_t−m))∫_m^{n_t} ∏ f_i∘h^τ_{K_i u} du‖ in L²(μ) (Haar samples), by
/// Simpson's rule with `steps` intervals in u.
EstimateResult l2_multi_average(const std::vector<const Observable*>& fs,
                                const std::vector<double>& Ks, double m, double n_t,
                                const FlowClock& clock, std::size_t n, std::uint64_t seed,
                                std::size_t steps = 512);

/// ∏ sup|f_i| from the observables' sup/inf bounds.
double modulus_bound(const std::vector<const Observable*>& fs);

/// Van der Corput inequality for φ_u = f∘h^τ_u / ‖f‖₂ with O-constant 2.
struct VdcReport {
  double N = 0.0;
  double L = 0.0;
  EstimateResult lhs;     // ‖(1/N)∫_0^N φ_u du‖₂
  EstimateResult rhs;     // [(2/N)∫(1/L)∫|<φ_u, φ_{u+l}>| dl du]^{1/2} + 2L/N
  double margin = 0.0;    // rhs − lhs
  double combined_stderr = 0.0;
  double constant = 2.0;
  double norm = 0.0;      // ‖f‖₂ under μ^τ used for rescaling
  bool holds = false;     // lhs ≤ rhs + 3·combined_stderr
};

/// One sample set serves every (N, L) pair; N and L must be multiples of
/// `step`. Throws InputError unless 0 < L < N.
std::vector<VdcReport> vdc_grid(const Observable& f, const FlowClock& clock,
                                const std::vector<double>& Ns, const std::vector<double>& Ls,
                                std::size_t n, std::uint64_t seed, double step = 0.25);
VdcReport vdc_check(const Observable& f, const FlowClock& clock, double N, double L,
                    std::size_t n, std::uint64_t seed, double step = 0.25);

/// Mean of f∘h^τ_t against the mean of f under μ^τ, on common samples.
struct InvarianceReport {
  double t = 0.0;
  EstimateResult flowed;
  EstimateResult base;
  double difference = 0.0;
  double combined_stderr = 0.0;
  bool holds = false;  // |difference| ≤ 3·combined_stderr
};
std::vector<InvarianceReport> measure_invariance(const Observable& f, const FlowClock& clock,
                                                 const std::vector<double>& ts, std::size_t n,
                                                 std::uint64_t seed);

struct DecayPoint {
  double t = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  bool used = true;  // false when below the noise floor
};

/// Least squares of log|value| on log t.
struct DecayFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double exponent_stderr = 0.0;
  std::vector<DecayPoint> points;

  /// exponent + z·exponent_stderr < 0.
  bool decays(double z) const { return exponent + z * exponent_stderr < 0.0; }
};

/// Points with |value| < noise_floor·stderr (or value = 0) are flagged and
/// excluded. Throws InputError unless t > 0 is strictly increasing and
/// InsufficientDataError with fewer than 4 usable points.
DecayFit fit_decay(const std::vector<DecayPoint>& points, double noise_floor = 2.0);

/// Empirical β_k = −exponent of the decay fit of k-point correlations.
struct QPropertyFit {
  std::size_t k = 0;
  double beta = 0.0;
  DecayFit fit;
};
QPropertyFit q_property_fit(std::size_t k, const std::vector<DecayPoint>& correlations,
                            double noise_floor = 2.0);

/// max and mean of |A(x, s, T)| over Haar samples for each T, with a fit of
/// the growth exponent of the max when at least 4 values are nonzero.
struct ShearScan {
  double s = 0.0;
  std::vector<double> Ts;
  std::vector<double> max_abs;
  std::vector<double> mean_abs;
  std::vector<double> max_residual;
  std::optional<DecayFit> fit;
};
ShearScan shear_scan(const FlowClock& clock, double s, const std::vector<double>& Ts,
                     std::size_t samples, std::uint64_t seed);

/// Same for the deviation integral ∫_0^T (τ − τ∘g_s)(h_t x) dt.
ShearScan deviation_scan(const FlowClock& clock, double s, const std::vector<double>& Ts,
                         std::size_t samples, std::uint64_t seed);

}  // namespace horomix
