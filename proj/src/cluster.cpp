#include "horomix/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "horomix/errors.hpp"

namespace horomix {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

void validate(const ClusterInput& in) {
  const std::size_t k = in.k();
  require(k >= 1, "cluster: need at least one ζ");
  for (double z : in.zetas) require(z > 0.0 && z < 1.0, "cluster: ζ must lie in (0, 1)");
  require(in.times.size() == k + 1, "cluster: need k + 1 times");
  require(in.times.front() == 0.0, "cluster: t_0 must be 0");
  for (std::size_t i = 1; i <= k; ++i) {
    require(std::isfinite(in.times[i]) && in.times[i] > in.times[i - 1],
            "cluster: times must be strictly increasing");
  }
  require(in.times.back() > 1.0, "cluster: t_k must exceed 1");
}

// First interval (start, anchors in order, end) containing t at radius r.
bool cover_of(double t, double r, double tk, const std::vector<double>& anchor_times, Cover& out) {
  if (t >= 0.0 && t <= r) {
    out = {Cover::Kind::Start, 0};
    return true;
  }
  for (std::size_t j = 0; j < anchor_times.size(); ++j) {
    if (t >= anchor_times[j] - r && t <= anchor_times[j] + r) {
      out = {Cover::Kind::Anchor, j};
      return true;
    }
  }
  if (t >= tk - r && t <= tk) {
    out = {Cover::Kind::End, 0};
    return true;
  }
  return false;
}

}  // namespace

double xi_k(const std::vector<double>& zetas, std::size_t k) {
  require(k >= 1 && zetas.size() == k, "xi_k: need k values of ζ");
  double product = 1.0;
  double scale = 1.0;
  for (double z : zetas) {
    require(z > 0.0 && z <= 1.0, "xi_k: ζ must lie in (0, 1]");
    product *= z;
    scale *= 12.0 * static_cast<double>(k);
  }
  return product / scale;
}

ClusterResult run_procedure(const ClusterInput& input) {
  validate(input);
  const std::size_t k = input.k();
  const double tk = input.times.back();
  const double exponent_scale = 12.0 * static_cast<double>(k);

  ClusterResult result;
  result.xi_k = xi_k(input.zetas, k);
  std::vector<double> anchor_times;
  double r = std::pow(tk, input.zetas[0] / exponent_scale);
  for (std::size_t step = 1;; ++step) {
    result.radii.push_back(r);
    std::size_t uncovered = 0;
    Cover c;
    for (std::size_t i = k - 1; i >= 1; --i) {
      if (!cover_of(input.times[i], r, tk, anchor_times, c)) {
        uncovered = i;
        break;
      }
    }
    if (uncovered == 0) {
      result.stop_step = step;
      break;
    }
    if (step >= k) throw DiagnosticError("run_procedure: no stop by step k");
    result.anchors.push_back(uncovered);
    anchor_times.push_back(input.times[uncovered]);
    r = std::pow(r, input.zetas[step] / exponent_scale);
  }
  for (double t : input.times) {
    Cover c;
    cover_of(t, result.radii.back(), tk, anchor_times, c);
    result.assignment.push_back(c);
  }
  return result;
}

bool stop_condition_holds(const ClusterInput& input, const ClusterResult& result) {
  double gap = input.times[1] - input.times[0];
  for (std::size_t i = 1; i + 1 < input.times.size(); ++i) {
    gap = std::min(gap, input.times[i + 1] - input.times[i]);
  }
  return gap >= std::pow(input.times.back(), result.xi_k);
}

std::vector<double> reflect_times(const std::vector<double>& ts) {
  const double tk = ts.back();
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = tk - ts[ts.size() - 1 - i];
  return out;
}

NormalizedTimes normalize_times(const std::vector<double>& ts) {
  require(!ts.empty() && ts.front() == 0.0, "normalize_times: t_0 must be 0");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    require(std::isfinite(ts[i]) && ts[i] >= ts[i - 1], "normalize_times: times must be sorted");
  }
  NormalizedTimes out{ts, false};
  if (ts.size() < 3) return out;
  double rest = ts[2] - ts[1];
  for (std::size_t i = 2; i + 1 < ts.size(); ++i) rest = std::min(rest, ts[i + 1] - ts[i]);
  if (ts[1] - ts[0] < rest) {
    out.times = reflect_times(ts);
    out.reflected = true;
  }
  return out;
}

CasePlan plan_3mix(double t1, double t2, double beta) {
  if (!(t2 > 1.0)) throw OutOfRegimeError("plan_3mix: t2 must exceed 1");
  require(beta > 0.0 && beta < 0.5, "plan_3mix: β must lie in (0, 1/2)");
  require(t1 >= 1.0 && t1 <= t2 - t1, "plan_3mix: need 1 <= t1 <= t2 - t1");
  CasePlan plan;
  plan.sigma = std::pow(t2, -(1.0 - beta / 3.0));
  plan.threshold = std::pow(t2, 1.0 - beta / 2.0);
  plan.which = t1 <= plan.threshold ? ProofCase::A : ProofCase::B;
  plan.K = t1 / t2;
  plan.case_b_precondition = plan.K > std::pow(plan.sigma * t2, -1.5);
  plan.times = {0.0, t1, t2};
  return plan;
}

CasePlan plan_kmix(const std::vector<double>& ts, const std::vector<double>& zetas) {
  const NormalizedTimes norm = normalize_times(ts);
  CasePlan plan;
  plan.times = norm.times;
  plan.reflected = norm.reflected;
  plan.cluster = run_procedure({zetas, norm.times});
  const std::size_t k = zetas.size();
  plan.which = plan.cluster.stop_step < k ? ProofCase::A : ProofCase::B;
  plan.xi = plan.cluster.xi_k;
  plan.alpha = std::min(1.0 / (3.0 * static_cast<double>(k)), plan.xi / 2.0);
  plan.sigma = std::pow(norm.times.back(), -plan.alpha * plan.alpha);
  plan.K = norm.times.size() > 1 ? norm.times[1] / norm.times.back() : 0.0;
  return plan;
}

std::vector<double> default_zetas(const std::vector<double>& betas,
                                  const std::vector<double>& gammas, double floor) {
  require(betas.size() == gammas.size(), "default_zetas: |β| must equal |γ|");
  require(floor > 0.0 && floor < 0.5, "default_zetas: floor must lie in (0, 1/2)");
  std::vector<double> out;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    require(gammas[i] > 0.0 && std::isfinite(betas[i]), "default_zetas: γ must be positive");
    out.push_back(std::clamp(betas[i] / gammas[i], floor, 1.0 - floor));
  }
  return out;
}

}  // namespace horomix
