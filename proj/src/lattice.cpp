#include "horomix/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_map>

#include "horomix/errors.hpp"
#include "horomix/random.hpp"

namespace horomix {

GroupElement sign_normalized(const GroupElement& g) {
  const std::array<double, 4> e{g.a(), g.b(), g.c(), g.d()};
  std::size_t best = 0;
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (std::abs(e[k]) > std::abs(e[best])) best = k;
  }
  return e[best] < 0.0 ? -g : g;
}

double bolza_circumradius() {
  const double cot = 1.0 / std::tan(std::numbers::pi / 8.0);
  return std::acosh(cot * cot);
}

Lattice::Lattice(std::vector<GroupElement> generators, Options options)
    : generators_(std::move(generators)), options_(options) {
  if (generators_.empty() || generators_.size() % 2 != 0) {
    throw InputError("Lattice: generators must come in inverse pairs");
  }
  for (const auto& g : generators_) {
    if (std::abs(g.det() - 1.0) > 1e-12) throw InputError("Lattice: generator with det != 1");
    if (std::abs(g.trace()) <= 2.0) throw InputError("Lattice: generator is not hyperbolic");
  }
  if (!(options_.circumradius > 0.0)) throw InputError("Lattice: circumradius must be positive");
}

std::shared_ptr<const Lattice> Lattice::bolza() {
  const double s2 = std::numbers::sqrt2;
  const double off = std::sqrt(2.0 + 2.0 * s2);
  const GroupElement translation = GroupElement::make(1.0 + s2, off, off, 1.0 + s2);
  std::vector<GroupElement> gens;
  gens.reserve(8);
  for (int k = 0; k < 4; ++k) {
    // rotation of the hyperbolic plane about i by kπ/4
    const GroupElement rot = exp_flow(LieDirection::Theta, k * std::numbers::pi / 4.0);
    gens.push_back(rot * translation * inv(rot));
  }
  for (int k = 0; k < 4; ++k) gens.push_back(inv(gens[static_cast<std::size_t>(k)]));

  auto lattice = std::make_shared<const Lattice>(std::move(gens), Options{bolza_circumradius(), 10.0});
  const double residual = lattice->relation_residual();
  if (residual > 1e-8) {
    throw DiagnosticError("Bolza relation fails, residual " + std::to_string(residual));
  }
  return lattice;
}

double Lattice::relation_residual() const {
  if (generators_.size() != 8) throw InputError("relation_residual: needs the 8 octagon generators");
  const auto g = [this](int k) { return generators_[static_cast<std::size_t>(k)]; };
  const auto gi = [this](int k) { return generators_[static_cast<std::size_t>(k + 4)]; };
  const GroupElement word = g(0) * gi(1) * g(2) * gi(3) * gi(0) * g(1) * gi(2) * g(3);
  return std::min(max_abs_diff(word, GroupElement::identity()),
                  max_abs_diff(word, -GroupElement::identity()));
}

QuotientPoint Lattice::reduce(const GroupElement& g) const {
  GroupElement cur = g;
  double cur_norm = cur.norm2();
  for (int iter = 0; iter < kReduceIterationCap; ++iter) {
    const GroupElement* best_gen = nullptr;
    double best_norm = cur_norm;
    for (const auto& s : generators_) {
      const double n = (s * cur).norm2();
      if (n < best_norm) {
        best_norm = n;
        best_gen = &s;
      }
    }
    // strict relative decrease; ties on the domain boundary stop the descent
    if (best_gen == nullptr || best_norm >= cur_norm * (1.0 - 1e-13)) {
      if (std::abs(cur.det() - 1.0) > 1e-14) cur = renormalized(cur);
      return QuotientPoint(sign_normalized(cur));
    }
    cur = *best_gen * cur;
    cur_norm = best_norm;
  }
  throw DiagnosticError("reduce: no convergence within iteration cap (bad generators?)");
}

bool Lattice::in_domain(const GroupElement& g) const {
  const double n0 = g.norm2();
  return std::none_of(generators_.begin(), generators_.end(),
                      [&](const GroupElement& s) { return (s * g).norm2() < n0 * (1.0 - 1e-13); });
}

namespace {

struct CellKey {
  long long a, b;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<long long>{}(k.a * 1000003LL) ^ std::hash<long long>{}(k.b);
  }
};

constexpr double kCell = 1e-4;

CellKey cell_of(const GroupElement& g) {
  return {std::llround(g.a() / kCell), std::llround(g.b() / kCell)};
}

}  // namespace

std::vector<GroupElement> Lattice::enumerate_ball(double radius) const {
  const double norm_bound = 2.0 * std::cosh(radius) * (1.0 + 1e-12);
  std::vector<GroupElement> found{GroupElement::identity()};
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> index;
  index[cell_of(found.front())].push_back(0);

  const auto known = [&](const GroupElement& g) {
    const CellKey k = cell_of(g);
    for (long long da = -1; da <= 1; ++da) {
      for (long long db = -1; db <= 1; ++db) {
        const auto it = index.find({k.a + da, k.b + db});
        if (it == index.end()) continue;
        for (std::size_t idx : it->second) {
          if (max_abs_diff(found[idx], g) <= kDedupTolerance) return true;
        }
      }
    }
    return false;
  };

  // Left multiplication by generators; every element of the ball is reached
  // through suffixes that stay in the ball (greedy descent reversed).
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const GroupElement base = found[queue.front()];
    queue.pop_front();
    for (const auto& s : generators_) {
      const GroupElement next = s * base;
      if (next.norm2() > norm_bound || known(next)) continue;
      found.push_back(next);
      index[cell_of(next)].push_back(found.size() - 1);
      queue.push_back(found.size() - 1);
    }
  }
  return found;
}

const std::vector<GroupElement>& Lattice::ball(double radius) const {
  if (!(radius >= 0.0)) throw InputError("ball: radius must be non-negative");
  if (radius > options_.max_ball_radius) {
    throw ResourceError("ball: radius " + std::to_string(radius) + " above cap " +
                        std::to_string(options_.max_ball_radius));
  }
  std::lock_guard lock(cache_mutex_);
  if (auto it = ball_cache_.find(radius); it != ball_cache_.end()) return it->second;

  std::vector<GroupElement> elements;
  if (auto larger = ball_cache_.lower_bound(radius); larger != ball_cache_.end()) {
    // filter a cached superset so that ball(R) ⊆ ball(R') holds exactly
    const double norm_bound = 2.0 * std::cosh(radius) * (1.0 + 1e-12);
    std::copy_if(larger->second.begin(), larger->second.end(), std::back_inserter(elements),
                 [&](const GroupElement& g) { return g.norm2() <= norm_bound; });
  } else {
    elements = enumerate_ball(radius);
  }
  return ball_cache_.emplace(radius, std::move(elements)).first->second;
}

double Lattice::quotient_distance(const QuotientPoint& p, const QuotientPoint& q) const {
  double best = frobenius_norm(p.rep().matrix() - q.rep().matrix());
  for (const auto& g : ball(2.0 * options_.circumradius + 0.05)) {
    const Mat2 moved = (g * p.rep()).matrix();
    best = std::min({best, frobenius_norm(moved - q.rep().matrix()),
                     frobenius_norm(moved + q.rep().matrix())});
  }
  return best;
}

void save_ball(const std::filesystem::path& path, double radius,
               std::span<const GroupElement> elements) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_ball: cannot open " + path.string());
  out << "# radius " << std::setprecision(17) << radius << '\n';
  for (const auto& g : elements) {
    out << g.a() << ' ' << g.b() << ' ' << g.c() << ' ' << g.d() << '\n';
  }
}

std::vector<GroupElement> load_ball(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_ball: cannot open " + path.string());
  std::vector<GroupElement> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    double a, b, c, d;
    if (!(row >> a >> b >> c >> d)) {
      throw ConfigError("load_ball: malformed line " + std::to_string(lineno));
    }
    out.push_back(GroupElement::make(a, b, c, d));
  }
  return out;
}

HaarSampler::HaarSampler(std::shared_ptr<const Lattice> lattice, std::uint64_t seed)
    : HaarSampler(lattice, seed, [&] {
        // hyperbolic disk of radius D0 about the origin of the Poincaré disk
        const double r = std::tanh(0.5 * lattice->circumradius());
        return Envelope{r, 4.0 / ((1.0 - r * r) * (1.0 - r * r)), 0.02};
      }()) {}

HaarSampler::HaarSampler(std::shared_ptr<const Lattice> lattice, std::uint64_t seed,
                         Envelope envelope)
    : lattice_(std::move(lattice)), seed_(seed), envelope_(envelope) {
  if (!(envelope_.disk_radius > 0.0 && envelope_.disk_radius < 1.0)) {
    throw ConfigError("HaarSampler: envelope disk radius must lie in (0,1)");
  }
  const double rate = expected_acceptance();
  if (rate < envelope_.acceptance_floor) {
    throw ConfigError("HaarSampler: acceptance rate " + std::to_string(rate) + " below floor " +
                      std::to_string(envelope_.acceptance_floor));
  }
}

double HaarSampler::expected_acceptance() const {
  const double r2 = envelope_.disk_radius * envelope_.disk_radius;
  // mean of the area density over the Euclidean disk, divided by the bound
  const double mean_density = 4.0 / (1.0 - r2);
  const double density_rate = mean_density / envelope_.density_bound;
  // Gauss–Bonnet: a genus-2 domain has area 4π
  const double domain_area = 4.0 * std::numbers::pi;
  const double hyperbolic_disk_area = 4.0 * std::numbers::pi * r2 / (1.0 - r2);
  return density_rate * std::min(1.0, domain_area / hyperbolic_disk_area);
}

GroupElement HaarSampler::frame(double x, double y, double theta) {
  const double sy = std::sqrt(y);
  const GroupElement base = GroupElement::unchecked({sy, x / sy, 0.0, 1.0 / sy});
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return base * GroupElement::unchecked({c, s, -s, c});
}

QuotientPoint HaarSampler::draw(std::uint64_t index) const {
  auto rng = substream(seed_, index);
  const double r = envelope_.disk_radius;
  constexpr int kMaxTrials = 100000;
  for (int trial = 0; trial < kMaxTrials; ++trial) {
    // uniform in the Euclidean disk, thinned to the hyperbolic area density
    const double wx = (2.0 * uniform01(rng) - 1.0) * r;
    const double wy = (2.0 * uniform01(rng) - 1.0) * r;
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    const double accept = uniform01(rng);
    const double w2 = wx * wx + wy * wy;
    if (w2 >= r * r) continue;
    const double density = 4.0 / ((1.0 - w2) * (1.0 - w2));
    if (accept * envelope_.density_bound > density) continue;
    // Cayley map from the disk to the upper half plane, 0 -> i
    const double den = (1.0 - wx) * (1.0 - wx) + wy * wy;
    const double x = -2.0 * wy / den;
    const double y = (1.0 - w2) / den;
    const GroupElement g = frame(x, y, theta);
    if (!lattice_->in_domain(g)) continue;
    return lattice_->reduce(g);
  }
  throw ConfigError("HaarSampler: rejection loop exhausted");
}

std::vector<QuotientPoint> sample_haar(std::size_t n, const HaarSampler& sampler) {
  if (n == 0) throw InputError("sample_haar: n must be at least 1");
  std::vector<QuotientPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.draw(i));
  return out;
}

}  // namespace horomix
