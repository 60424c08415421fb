#pragma once

#include <memory>
#include <vector>

#include "horomix/config.hpp"
#include "horomix/lattice.hpp"
#include "horomix/observables.hpp"
#include "horomix/timechange.hpp"

namespace horomix {

/// Objects shared by every experiment, built from a Config.
struct Setup {
  std::shared_ptr<const Lattice> lattice;
  HaarSampler sampler;             // for normalizers and zero-mean shifts
  FlowClock clock;
  Observable family;               // sum of the components
  std::vector<Observable> components;  // zero-mean under μ^τ when centered
  std::uint64_t seed = 0;
};

/// τ ≡ 1 when tau.c = 0. observables.kind is "bumps" or "constant" (the
/// constant 1, for null checks); observables.centered shifts the bumps and
/// their sum to mean zero under μ^τ. Throws ConfigError on invalid values.
Setup make_setup(const Config& config);

}  // namespace horomix
