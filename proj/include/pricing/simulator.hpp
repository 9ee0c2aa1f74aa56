#pragma once

#include <cstdint>

#include "pricing/weakly_coupled.hpp"

namespace pricing {

struct SimConfig {
  long horizon = 100000;
  long burn_in = -1;  // -1: max(10 * cycle period, 10 * tau)
  int replications = 20;
  std::uint64_t seed = 0;
  PurchaseRule rule = PurchaseRule::kPatient;
  int jobs = 0;
};

struct SimEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int replications = 0;
  long horizon = 0;
};

/// Monte Carlo discrete-event estimate of the per-period revenue of a
/// committed cyclic policy. One customer arrives per period; each lives at
/// most tau periods past arrival (unbounded-patience models run on Q's
/// absorbing exit alone). Customers draw from independent per-(replication,
/// arrival-period) streams, so the estimate is bit-identical for a given
/// seed regardless of the worker count. Strategic rules see the full
/// committed cyclic price sequence.
SimEstimate simulate(const MarketModel& model, const CyclicPolicy& policy,
                     const SimConfig& config,
                     DecisionTiming timing = DecisionTiming::kPostTransition,
                     const std::optional<CustomerBelief>& belief = std::nullopt);

}  // namespace pricing
