#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pricing/weakly_coupled.hpp"

namespace pricing {

struct OptDiagnostics {
  int cycle_blocks = 0;             // blocks in the returned cycle
  bool monotone_decreasing = false; // prices non-increasing around the cycle
  long strings_visited = 0;         // admissible strings grown by the search
  long closures_rejected = 0;       // harvested closures failing M-simplicity
  long seed_pairs = 0;
};

struct OptResult {
  std::vector<long> cycle;    // block ids, lexicographically smallest rotation
  std::vector<Phase> phases;  // minimal sigma-phase cycle, run-length merged
  double value = 0.0;         // per-period revenue, phi(cycle)/tau
  bool is_fixed_price = false;
  OptDiagnostics diag;
};

/// Greedy admissible-collection search over all ordered seed pairs plus the
/// single-block strategies; deterministic tie-breaks (equal running path
/// values keep the lexicographically larger string, equal cycle values keep
/// the lexicographically smaller canonical cycle). Returned cycles are
/// M-simple; harvested closures failing that are counted, never kept.
OptResult greedy_cycle_search(const CoupledFn& f, int jobs = 0);

/// Exhaustive maximum over simple block cycles of length <= max_len
/// (default: the whole alphabet). Desk-scale guarded.
OptResult brute_force_cycle_search(const CoupledFn& f, int max_len = -1);

/// Maximum mean cycle value of the complete block digraph (equals the optimal
/// phi); Karp-style dynamic program, O(blocks^3).
double karp_max_mean_cycle(const CoupledFn& f);

/// Builds the coupled table for (kernel, pace) and runs the greedy search.
OptResult optimize(const Kernel& kernel, const PaceConfig& pace, int jobs = 0);

/// Best fixed-price policy: argmax_k of the per-period fixed-price value,
/// ties to the lower index. Returns (price index, value).
std::pair<int, double> fixed_price_best(const Kernel& kernel);

/// Exhaustive best cyclic policy with exactly n_prices distinct prices, each
/// held sigma periods. n_prices must be 2 or 3.
OptResult k_cyclic_best(const Kernel& kernel, int sigma, int n_prices);

/// Smallest pace sigma_0 beyond which the strict best fixed price dominates
/// every supplied simple price cycle (affine certificate); empty when the
/// fixed-price maximizer is not strict. Candidates default to every simple
/// price cycle when omitted.
std::optional<long> sigma0_certificate(const Kernel& kernel,
                                       const std::vector<std::vector<int>>& candidates = {});

struct DiscountedResult {
  std::vector<long> prefix;  // W0 block ids (possibly empty)
  std::vector<long> cycle;   // W1 block ids, repeated forever
  double value = 0.0;
};

/// Exhaustive pre-cyclic optimum of sum_n e^{-r n} f(w_n, w_{n+1}) over
/// (W0, W1) with all coordinates distinct and |W0|+|W1| <= length_bound;
/// the cyclic tail is evaluated in closed form via the geometric sum.
DiscountedResult discounted_optimize(const CoupledFn& f, double r, int length_bound);

}  // namespace pricing
