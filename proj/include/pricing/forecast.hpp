#pragma once

#include <vector>

#include "pricing/weakly_coupled.hpp"

namespace pricing {

/// Expected maximum of (valuation - price) over the committed window
/// `prices` (one entry per future period, nearest first) for a customer whose
/// valuation currently sits at 0-based `level` and evolves by the belief
/// chain. Absorbed customers are worth v_0 = 0. Exact path enumeration;
/// -inf on an empty window.
double expected_max_surplus(const MarketModel& model, const CustomerBelief& chain, int level,
                            const std::vector<int>& prices);

}  // namespace pricing
