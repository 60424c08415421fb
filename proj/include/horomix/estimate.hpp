#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace horomix {

/// Monte Carlo value with its standard error.
struct EstimateResult {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultBatches = 32;

/// Worker count: set_worker_count() if called, else HOROMIX_THREADS, else 1.
std::size_t worker_count();
void set_worker_count(std::size_t workers);

/// out[i] = fn(i) for i in [0, n), split into contiguous blocks over the
/// workers. Each index must be computable independently.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// Pairwise (cascade) summation; result independent of worker partitioning.
double pairwise_sum(std::span<const double> values);

/// Self-normalized weighted mean sum(w y)/sum(w) with a batch-means
/// standard error over `batches` contiguous batches. Empty weights mean
/// unit weights.
EstimateResult batch_mean(std::span<const double> values, std::span<const double> weights,
                          std::uint64_t seed, std::size_t batches = kDefaultBatches);

/// Per-batch self-normalized means, in batch order.
std::vector<double> batch_means(std::span<const double> values, std::span<const double> weights,
                                std::size_t batches = kDefaultBatches);

/// Jackknife standard error of a statistic from its leave-one-batch-out
/// replicates.
double jackknife_stderr(std::span<const double> replicates);

}  // namespace horomix
