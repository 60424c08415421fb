#include "horomix/experiment.hpp"

#include "horomix/errors.hpp"
#include "horomix/random.hpp"

namespace horomix {

namespace {

constexpr std::uint64_t kTagSetup = 100;

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

TimeChangeGenerator make_generator(const Config& c, const std::shared_ptr<const Lattice>& lattice,
                                   const HaarSampler& sampler) {
  const double scale = c.real("tau.c");
  if (scale == 0.0) return TimeChangeGenerator::unit(lattice);
  const double radius = c.real("tau.radius");
  check(radius > 0.0 && radius <= 1.0, "tau.radius must lie in (0, 1]");
  const auto bump = BumpObservable::make(lattice, {GroupElement::identity(), radius,
                                                   c.real("tau.amplitude"), 4.0});
  const auto n = c.count("tau.normalizer_samples");
  check(n >= 1000, "tau.normalizer_samples must be at least 1000");
  try {
    return make_tau(bump, scale, n, sampler);
  } catch (const InputError& e) {
    throw ConfigError(std::string("tau: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(std::string("tau: ") + e.what());
  }
}

}  // namespace

Setup make_setup(const Config& c) {
  auto lattice = Lattice::bolza();
  const std::uint64_t seed = c.count("run.seed");
  HaarSampler sampler(lattice, derive_seed(seed, kTagSetup));
  FlowClock clock(make_generator(c, lattice, sampler));
  clock.tol = c.real("clock.tol");
  clock.step_init = c.real("clock.step_init");
  clock.max_steps = c.count("clock.max_steps");
  clock.horizon = c.real("clock.horizon");
  clock.segment = c.real("clock.segment");
  check(clock.tol > 0.0 && clock.step_init > 0.0, "clock.tol and clock.step_init must be positive");
  check(clock.horizon > 0.0, "clock.horizon must be positive");
  check(clock.segment > 0.0 && clock.segment <= BumpObservable::kSegmentReach,
        "clock.segment must lie in (0, 1]");

  Setup s{lattice, sampler, clock, Observable(), {}, seed};
  const std::string& kind = c.text("observables.kind");
  if (kind == "constant") {
    s.family = Observable::constant(1.0);
    s.components = {s.family};
    return s;
  }
  check(kind == "bumps", "observables.kind must be 'bumps' or 'constant'");
  const double radius = c.real("observables.radius");
  check(radius > 0.0 && radius <= 1.0, "observables.radius must lie in (0, 1]");
  const auto specs = default_bump_specs();
  const auto count = c.count("observables.count");
  check(count >= 1 && count <= specs.size(), "observables.count must lie in [1, 3]");
  const bool centered = c.flag("observables.centered");
  const auto n = c.count("observables.zero_mean_samples");
  check(!centered || n >= 1000, "observables.zero_mean_samples must be at least 1000");
  const Observable* tau = &s.clock.tau.observable();
  Observable sum;
  for (std::size_t i = 0; i < count; ++i) {
    BumpSpec spec = specs[i];
    spec.radius = radius;
    const Observable bump = Observable::from_bump(BumpObservable::make(lattice, spec));
    s.components.push_back(centered ? zero_mean(bump, n, sampler, tau) : bump);
    sum = sum.plus(bump);
  }
  s.family = centered ? zero_mean(sum, n, sampler, tau) : sum;
  return s;
}

}  // namespace horomix
