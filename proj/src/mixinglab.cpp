#include "horomix/mixinglab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "horomix/errors.hpp"
#include "horomix/random.hpp"

namespace horomix {

namespace {

// stream tags, so experiments sharing a seed draw independent points
constexpr std::uint64_t kTagCorrelation = 1;
constexpr std::uint64_t kTagL2 = 3;
constexpr std::uint64_t kTagVdc = 4;
constexpr std::uint64_t kTagInvariance = 5;
constexpr std::uint64_t kTagShear = 6;
constexpr std::uint64_t kTagDeviation = 7;

constexpr double kGridTolerance = 1e-9;

using BatchSums = std::vector<std::vector<double>>;

// Per-batch sums of `dim` per-sample quantities over contiguous index
// blocks. Each batch is summed in index order, so the result does not
// depend on the worker count.
BatchSums batch_sums(std::size_t n, std::size_t batches, std::size_t dim,
                     const std::function<void(std::size_t, std::span<double>)>& sample) {
  batches = std::max<std::size_t>(1, std::min(batches, n));
  BatchSums sums(batches, std::vector<double>(dim, 0.0));
  parallel_for(batches, [&](std::size_t b) {
    std::vector<double> row(dim);
    for (std::size_t i = b * n / batches; i < (b + 1) * n / batches; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      sample(i, row);
      for (std::size_t d = 0; d < dim; ++d) sums[b][d] += row[d];
    }
  });
  return sums;
}

std::vector<double> sum_except(const BatchSums& sums, std::size_t skip) {
  std::vector<double> out(sums.front().size(), 0.0);
  for (std::size_t b = 0; b < sums.size(); ++b) {
    if (b == skip) continue;
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += sums[b][d];
  }
  return out;
}

// Statistic of the pooled sums with a leave-one-batch-out jackknife error.
template <class Stat>
EstimateResult jackknife(const BatchSums& sums, const Stat& stat, std::size_t n,
                         std::uint64_t seed) {
  EstimateResult r;
  r.n = n;
  r.seed = seed;
  r.value = stat(sum_except(sums, sums.size()));
  if (sums.size() >= 2) {
    std::vector<double> replicates;
    replicates.reserve(sums.size());
    for (std::size_t b = 0; b < sums.size(); ++b) replicates.push_back(stat(sum_except(sums, b)));
    r.stderr_ = jackknife_stderr(replicates);
  }
  return r;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

bool on_grid(double t, double step) {
  const double k = t / step;
  return std::abs(k - std::round(k)) <= kGridTolerance * std::max(1.0, std::abs(k));
}

std::size_t grid_index(double t, double step) {
  return static_cast<std::size_t>(std::llround(t / step));
}

double simpson_weight(std::size_t j, std::size_t steps) {
  if (j == 0 || j == steps) return 1.0;
  return j % 2 == 1 ? 4.0 : 2.0;
}

}  // namespace

std::vector<EstimateResult> correlate_k_grid(const std::vector<const Observable*>& fs,
                                             const std::vector<std::vector<double>>& tuples,
                                             const FlowClock& clock, std::size_t n,
                                             std::uint64_t seed,
                                             const CorrelationOptions& options) {
  require(!fs.empty(), "correlate_k: no observables");
  require(n >= 1, "correlate_k: n must be positive");
  require(options.window >= 0.0 && std::isfinite(options.window), "correlate_k: bad window");
  require(options.window_step > 0.0, "correlate_k: window_step must be positive");
  for (const auto* f : fs) require(f != nullptr, "correlate_k: null observable");
  for (const auto& ts : tuples) {
    require(ts.size() == fs.size(), "correlate_k: |ts| must equal |fs|");
    require(ts.front() == 0.0, "correlate_k: ts[0] must be 0");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      require(std::isfinite(ts[i]), "correlate_k: non-finite time");
      require(i == 0 || ts[i] >= ts[i - 1], "correlate_k: ts must be sorted");
    }
  }

  // distinct observables, recorded once each
  std::vector<const Observable*> obs;
  std::vector<std::size_t> slot(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto it = std::find(obs.begin(), obs.end(), fs[i]);
    slot[i] = static_cast<std::size_t>(it - obs.begin());
    if (it == obs.end()) obs.push_back(fs[i]);
  }

  const double dt = options.window_step;
  const std::size_t m =
      options.window > 0.0 ? static_cast<std::size_t>(std::llround(options.window / dt)) + 1 : 1;

  std::vector<double> times;
  for (const auto& ts : tuples) times.insert(times.end(), ts.begin(), ts.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const bool shared = std::all_of(times.begin(), times.end(),
                                  [dt](double t) { return on_grid(t, dt); });

  // offsets[k][i]: (recording, first index) of factor i in tuple k
  struct Offset {
    std::size_t recording, index;
  };
  std::vector<std::vector<Offset>> offsets(tuples.size());
  for (std::size_t k = 0; k < tuples.size(); ++k) {
    for (double t : tuples[k]) {
      if (shared) {
        offsets[k].push_back({0, grid_index(t, dt)});
      } else {
        const auto pos = std::lower_bound(times.begin(), times.end(), t) - times.begin();
        offsets[k].push_back({static_cast<std::size_t>(pos), 0});
      }
    }
  }
  const std::size_t shared_count = shared ? grid_index(times.back(), dt) + m : m;

  // per tuple: the product average, then each factor's own orbit average
  const std::size_t k_size = fs.size();
  const std::size_t stride = 1 + k_size;
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagCorrelation));
  const auto joint = batch_sums(n, options.batches, 1 + tuples.size() * stride,
                                [&](std::size_t i, std::span<double> row) {
    const QuotientPoint x = points.draw(i);
    const double w = clock.tau.eval(x);
    std::vector<std::vector<std::vector<double>>> recordings;
    if (shared) {
      recordings.push_back(record_orbit(clock, x, obs, 0.0, dt, shared_count));
    } else {
      for (double t : times) recordings.push_back(record_orbit(clock, x, obs, t, dt, m));
    }
    row[0] = w;
    std::vector<double> marginal(k_size);
    for (std::size_t k = 0; k < tuples.size(); ++k) {
      double acc = 0.0;
      std::fill(marginal.begin(), marginal.end(), 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        double p = 1.0;
        for (std::size_t f = 0; f < k_size; ++f) {
          const Offset& o = offsets[k][f];
          const double v = recordings[o.recording][slot[f]][o.index + j];
          p *= v;
          marginal[f] += v;
        }
        acc += p;
      }
      double* out = &row[1 + k * stride];
      out[0] = w * acc / static_cast<double>(m);
      for (std::size_t f = 0; f < k_size; ++f) out[1 + f] = w * marginal[f] / static_cast<double>(m);
    }
  });

  std::vector<EstimateResult> out;
  out.reserve(tuples.size());
  for (std::size_t k = 0; k < tuples.size(); ++k) {
    const std::size_t base = 1 + k * stride;
    out.push_back(jackknife(joint, [base, k_size](const std::vector<double>& s) {
      double product = 1.0;
      for (std::size_t f = 0; f < k_size; ++f) product *= s[base + 1 + f] / s[0];
      return s[base] / s[0] - product;
    }, n, seed));
  }
  return out;
}

EstimateResult correlate_k(const std::vector<const Observable*>& fs, const std::vector<double>& ts,
                           const FlowClock& clock, std::size_t n, std::uint64_t seed,
                           const CorrelationOptions& options) {
  require(!ts.empty(), "correlate_k: no times");
  return correlate_k_grid(fs, {ts}, clock, n, seed, options).front();
}

double geodesic_arc_average(const Observable& f, const FlowClock& clock, const QuotientPoint& x,
                            double sigma, double t, std::size_t steps) {
  require(sigma > 0.0 && sigma < 1.0, "geodesic_arc_average: σ must lie in (0, 1)");
  require(t > 1.0, "geodesic_arc_average: t must exceed 1");
  require(steps >= 2 && steps % 2 == 0, "geodesic_arc_average: steps must be even");
  const double h = sigma / static_cast<double>(steps);
  double sum = 0.0;
  for (std::size_t j = 0; j <= steps; ++j) {
    const QuotientPoint y = geodesic(clock.lattice(), x, static_cast<double>(j) * h);
    sum += simpson_weight(j, steps) * f.eval(flow_tau(clock, y, t));
  }
  return sum * h / 3.0 / sigma;
}

EstimateResult l2_multi_average(const std::vector<const Observable*>& fs,
                                const std::vector<double>& Ks, double m, double n_t,
                                const FlowClock& clock, std::size_t n, std::uint64_t seed,
                                std::size_t steps) {
  require(!fs.empty() && fs.size() == Ks.size(), "l2_multi_average: |fs| must equal |Ks|");
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    require(Ks[i] > 0.0 && (i == 0 || Ks[i] > Ks[i - 1]),
            "l2_multi_average: Ks must be positive and strictly increasing");
  }
  require(Ks.back() == 1.0, "l2_multi_average: the last K must be 1");
  require(std::isfinite(m) && std::isfinite(n_t) && n_t > m, "l2_multi_average: need n_t > m");
  require(n >= 1, "l2_multi_average: n must be positive");
  require(steps >= 2 && steps % 2 == 0, "l2_multi_average: steps must be even");

  const double h = (n_t - m) / static_cast<double>(steps);
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagL2));
  const auto sums = batch_sums(n, kDefaultBatches, 2, [&](std::size_t i, std::span<double> row) {
    const QuotientPoint x = points.draw(i);
    std::vector<double> product(steps + 1, 1.0);
    for (std::size_t f = 0; f < fs.size(); ++f) {
      const auto values = record_orbit(clock, x, {fs[f]}, Ks[f] * m, Ks[f] * h, steps + 1);
      for (std::size_t j = 0; j <= steps; ++j) product[j] *= values[0][j];
    }
    double integral = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) integral += simpson_weight(j, steps) * product[j];
    integral *= h / 3.0 / (n_t - m);
    row[0] = integral * integral;
    row[1] = 1.0;
  });
  return jackknife(sums, [](const std::vector<double>& s) { return std::sqrt(s[0] / s[1]); }, n,
                   seed);
}

double modulus_bound(const std::vector<const Observable*>& fs) {
  double bound = 1.0;
  for (const auto* f : fs) bound *= std::max(std::abs(f->sup_bound()), std::abs(f->inf_bound()));
  return bound;
}

std::vector<VdcReport> vdc_grid(const Observable& f, const FlowClock& clock,
                                const std::vector<double>& Ns, const std::vector<double>& Ls,
                                std::size_t n, std::uint64_t seed, double step) {
  require(!Ns.empty() && !Ls.empty(), "vdc: empty grid");
  require(step > 0.0, "vdc: step must be positive");
  require(n >= 1, "vdc: n must be positive");
  for (double N : Ns) {
    require(on_grid(N, step), "vdc: N must be a multiple of the step");
    for (double L : Ls) {
      require(L > 0.0 && L < N, "vdc: need 0 < L < N");
      require(on_grid(L, step), "vdc: L must be a multiple of the step");
    }
  }
  std::vector<std::size_t> Nj;
  for (double N : Ns) Nj.push_back(grid_index(N, step));
  std::size_t JL = 0;
  for (double L : Ls) JL = std::max(JL, grid_index(L, step));
  const std::size_t JN = *std::max_element(Nj.begin(), Nj.end());
  const std::size_t count = JN + JL + 1;
  const std::size_t block = JL + 2;  // A², then P_0..P_JL

  // row layout: weight, then per N: w·A², w·P_0 .. w·P_JL, where
  // A = (1/N)∫_0^N f(h_u x) du and P_j = (1/N)∫_0^N f(h_u x) f(h_{u+j·step} x) du
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagVdc));
  const auto sums = batch_sums(n, kDefaultBatches, 1 + Ns.size() * block,
                               [&](std::size_t i, std::span<double> row) {
    const QuotientPoint x = points.draw(i);
    const double w = clock.tau.eval(x);
    const auto F = record_orbit(clock, x, {&f}, 0.0, step, count)[0];
    row[0] = w;
    // g_0(u) = F(u), g_{j+1}(u) = F(u)F(u+j); trapezoid over [0, N] is the
    // running sum up to N minus half of both end values
    auto g = [&](std::size_t j, std::size_t u) { return j == 0 ? F[u] : F[u] * F[u + j - 1]; };
    std::vector<double> running(JL + 2, 0.0);
    std::size_t next = 0;
    std::vector<std::size_t> order(Ns.size());
    for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return Nj[a] < Nj[b]; });
    for (std::size_t a : order) {
      for (; next <= Nj[a]; ++next) {
        for (std::size_t j = 0; j <= JL + 1; ++j) running[j] += g(j, next);
      }
      const double scale = step / Ns[a];
      const std::size_t base = 1 + a * block;
      std::vector<double> trap(JL + 2);
      for (std::size_t j = 0; j <= JL + 1; ++j) {
        trap[j] = (running[j] - 0.5 * (g(j, 0) + g(j, Nj[a]))) * scale;
      }
      row[base] = w * trap[0] * trap[0];
      for (std::size_t j = 0; j <= JL; ++j) row[base + 1 + j] = w * trap[j + 1];
    }
  });

  std::vector<VdcReport> out;
  for (std::size_t a = 0; a < Ns.size(); ++a) {
    for (double L : Ls) {
      const double N = Ns[a];
      const std::size_t base = 1 + a * block;
      const std::size_t Lj = grid_index(L, step);
      auto lhs = [&](const std::vector<double>& s) {
        const double c0 = s[base + 1] / s[0];
        if (!(c0 > 0.0)) return 0.0;
        return std::sqrt(std::max(0.0, s[base] / s[0]) / c0);
      };
      auto rhs = [&](const std::vector<double>& s) {
        const double c0 = s[base + 1] / s[0];
        if (!(c0 > 0.0)) return 2.0 * L / N;
        double integral = 0.0;
        for (std::size_t j = 0; j <= Lj; ++j) {
          const double weight = (j == 0 || j == Lj) ? 0.5 : 1.0;
          integral += weight * std::abs(s[base + 1 + j] / s[0]);
        }
        integral *= step / L;
        return std::sqrt(2.0 * integral / c0) + 2.0 * L / N;
      };
      VdcReport r;
      r.N = N;
      r.L = L;
      r.lhs = jackknife(sums, lhs, n, seed);
      r.rhs = jackknife(sums, rhs, n, seed);
      r.margin = r.rhs.value - r.lhs.value;
      r.combined_stderr = std::hypot(r.lhs.stderr_, r.rhs.stderr_);
      const auto total = sum_except(sums, sums.size());
      r.norm = std::sqrt(std::max(0.0, total[base + 1] / total[0]));
      r.holds = r.lhs.value <= r.rhs.value + 3.0 * r.combined_stderr;
      out.push_back(r);
    }
  }
  return out;
}

VdcReport vdc_check(const Observable& f, const FlowClock& clock, double N, double L,
                    std::size_t n, std::uint64_t seed, double step) {
  return vdc_grid(f, clock, {N}, {L}, n, seed, step).front();
}

std::vector<InvarianceReport> measure_invariance(const Observable& f, const FlowClock& clock,
                                                 const std::vector<double>& ts, std::size_t n,
                                                 std::uint64_t seed) {
  require(!ts.empty(), "measure_invariance: no times");
  require(n >= 1, "measure_invariance: n must be positive");
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagInvariance));
  const auto sums = batch_sums(n, kDefaultBatches, 2 + ts.size(),
                               [&](std::size_t i, std::span<double> row) {
    const QuotientPoint x = points.draw(i);
    const double w = clock.tau.eval(x);
    row[0] = w;
    row[1] = w * f.eval(x);
    for (std::size_t k = 0; k < ts.size(); ++k) row[2 + k] = w * f.eval(flow_tau(clock, x, ts[k]));
  });
  const EstimateResult base =
      jackknife(sums, [](const std::vector<double>& s) { return s[1] / s[0]; }, n, seed);
  std::vector<InvarianceReport> out;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    InvarianceReport r;
    r.t = ts[k];
    r.base = base;
    r.flowed = jackknife(sums, [k](const std::vector<double>& s) { return s[2 + k] / s[0]; }, n,
                         seed);
    r.difference = r.flowed.value - r.base.value;
    r.combined_stderr = std::hypot(r.flowed.stderr_, r.base.stderr_);
    r.holds = std::abs(r.difference) <= 3.0 * r.combined_stderr;
    out.push_back(r);
  }
  return out;
}

DecayFit fit_decay(const std::vector<DecayPoint>& points, double noise_floor) {
  DecayFit fit;
  fit.points = points;
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(std::isfinite(points[i].t) && points[i].t > 0.0, "fit_decay: t must be positive");
    require(i == 0 || points[i].t > points[i - 1].t, "fit_decay: t must be strictly increasing");
  }
  std::vector<double> xs, ys;
  for (auto& p : fit.points) {
    const double v = std::abs(p.value);
    p.used = std::isfinite(v) && v > 0.0 && v >= noise_floor * p.stderr_;
    if (p.used) {
      xs.push_back(std::log(p.t));
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 4) {
    throw InsufficientDataError("fit_decay: " + std::to_string(xs.size()) +
                                " usable points, need at least 4");
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.exponent * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.exponent_stderr = std::sqrt(ss_res / (m - 2.0) / sxx);
  return fit;
}

QPropertyFit q_property_fit(std::size_t k, const std::vector<DecayPoint>& correlations,
                            double noise_floor) {
  require(k >= 2, "q_property_fit: k must be at least 2");
  QPropertyFit q;
  q.k = k;
  q.fit = fit_decay(correlations, noise_floor);
  q.beta = -q.fit.exponent;
  return q;
}

namespace {

ShearScan scan(double s, const std::vector<double>& Ts, std::size_t samples,
               const HaarSampler& points, bool with_residual,
               const std::function<std::pair<double, double>(const QuotientPoint&, double)>& eval) {
  require(samples >= 1, "scan: samples must be positive");
  ShearScan out;
  out.s = s;
  out.Ts = Ts;
  for (double T : Ts) {
    std::vector<std::pair<double, double>> values(samples);
    parallel_for(samples, [&](std::size_t i) { values[i] = eval(points.draw(i), T); });
    double mx = 0.0, sum = 0.0, res = 0.0;
    for (const auto& [a, r] : values) {
      mx = std::max(mx, std::abs(a));
      sum += std::abs(a);
      res = std::max(res, r);
    }
    out.max_abs.push_back(mx);
    out.mean_abs.push_back(sum / static_cast<double>(samples));
    if (with_residual) out.max_residual.push_back(res);
  }
  std::vector<DecayPoint> pts;
  for (std::size_t i = 0; i < Ts.size(); ++i) pts.push_back({Ts[i], out.max_abs[i], 0.0, true});
  try {
    out.fit = fit_decay(pts, 0.0);
  } catch (const InsufficientDataError&) {
  }
  return out;
}

}  // namespace

ShearScan shear_scan(const FlowClock& clock, double s, const std::vector<double>& Ts,
                     std::size_t samples, std::uint64_t seed) {
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagShear));
  return scan(s, Ts, samples, points, true, [&](const QuotientPoint& x, double T) {
    const ShearReport r = shear_report(clock, x, s, T);
    return std::pair{r.discrepancy, r.residual};
  });
}

ShearScan deviation_scan(const FlowClock& clock, double s, const std::vector<double>& Ts,
                         std::size_t samples, std::uint64_t seed) {
  const HaarSampler points(clock.tau.lattice_ptr(), derive_seed(seed, kTagDeviation));
  return scan(s, Ts, samples, points, false, [&](const QuotientPoint& x, double T) {
    return std::pair{deviation_integral(clock, x, s, T), 0.0};
  });
}

}  // namespace horomix
