#include "horomix/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "horomix/errors.hpp"

namespace horomix {

namespace {

std::atomic<std::size_t> g_workers{0};

std::size_t env_workers() {
  if (const char* env = std::getenv("HOROMIX_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("HOROMIX_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

}  // namespace

std::size_t worker_count() {
  const std::size_t w = g_workers.load();
  return w != 0 ? w : env_workers();
}

void set_worker_count(std::size_t workers) { g_workers.store(std::max<std::size_t>(1, workers)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (weights.empty()) return pairwise_sum(values) / static_cast<double>(values.size());
  std::vector<double> wy(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) wy[i] = weights[i] * values[i];
  return pairwise_sum(wy) / pairwise_sum(weights);
}

}  // namespace

std::vector<double> batch_means(std::span<const double> values, std::span<const double> weights,
                                std::size_t batches) {
  if (!weights.empty() && weights.size() != values.size()) {
    throw InputError("batch_means: weights and values differ in length");
  }
  const std::size_t n = values.size();
  batches = std::min(batches, n);
  std::vector<double> out;
  out.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    out.push_back(weighted_mean(values.subspan(lo, hi - lo),
                                weights.empty() ? weights : weights.subspan(lo, hi - lo)));
  }
  return out;
}

EstimateResult batch_mean(std::span<const double> values, std::span<const double> weights,
                          std::uint64_t seed, std::size_t batches) {
  if (values.empty()) throw InputError("batch_mean: no samples");
  EstimateResult r;
  r.n = values.size();
  r.seed = seed;
  r.value = weighted_mean(values, weights);
  const auto means = batch_means(values, weights, batches);
  if (means.size() >= 2) {
    const double m = pairwise_sum(means) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    const double k = static_cast<double>(means.size());
    r.stderr_ = std::sqrt(ss / (k - 1.0) / k);
  }
  return r;
}

double jackknife_stderr(std::span<const double> replicates) {
  const double k = static_cast<double>(replicates.size());
  if (replicates.size() < 2) return 0.0;
  const double m = pairwise_sum(replicates) / k;
  double ss = 0.0;
  for (double v : replicates) ss += (v - m) * (v - m);
  return std::sqrt((k - 1.0) / k * ss);
}

}  // namespace horomix
