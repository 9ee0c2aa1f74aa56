#include "pricing/simulator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pricing/forecast.hpp"
#include "pricing/parallel.hpp"

namespace pricing {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// independent stream per (seed, replication, arrival period)
uint64_t stream_init(uint64_t seed, uint64_t rep, uint64_t t) {
  uint64_t x = seed;
  splitmix64(x);
  x ^= 0x9e3779b97f4a7c15ULL * (rep + 1);
  splitmix64(x);
  x ^= 0xbf58476d1ce4e5b9ULL * (t + 1);
  splitmix64(x);
  return x;
}

double uniform01(uint64_t& x) {
  return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

int draw_level(const std::vector<double>& dist, double u) {
  double acc = 0.0;
  for (size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size()) - 1;
}

// transition from 0-based level; returns -1 on exit to the absorbing state
int draw_transition(const MarketModel& m, int level, double u) {
  double acc = 0.0;
  for (int j = 0; j < m.K; ++j) {
    acc += m.q(level, j);
    if (u < acc) return j;
  }
  return -1;
}

}  // namespace

SimEstimate simulate(const MarketModel& model, const CyclicPolicy& policy,
                     const SimConfig& config, DecisionTiming timing,
                     const std::optional<CustomerBelief>& belief) {
  auto report = validate(model);
  if (!report.ok()) throw std::invalid_argument("invalid model: " + report.summary());
  if (policy.phases.empty()) throw std::invalid_argument("empty policy");
  if (config.replications < 1) throw std::invalid_argument("replications must be >= 1");

  const std::vector<int> prices = policy.expanded();
  const long L = static_cast<long>(prices.size());
  auto price_at = [&](long u) { return prices[u % L]; };

  const bool bounded = model.bounded();
  if (!bounded && config.rule == PurchaseRule::kExpectedMax)
    throw std::invalid_argument("expected-max rule needs a bounded patience level");
  const int tau = bounded ? model.patience() : 0;
  long forget = tau;
  if (!bounded) {
    const double gap = nu(model);
    forget = tau_epsilon(1e-12, gap);
  }
  const long burn_in = config.burn_in >= 0
                           ? config.burn_in
                           : std::max<long>(10 * L, 10 * std::max<long>(1, forget));
  if (config.horizon <= burn_in)
    throw std::invalid_argument("horizon must exceed the burn-in");

  // last decision age: tau under bounded patience, open-ended otherwise
  const long s_max = bounded ? tau : std::numeric_limits<long>::max() / 2;

  CustomerBelief chain;
  if (belief) {
    chain = *belief;
  } else {
    chain.gamma = model.gamma;
    chain.Q = model.Q;
  }

  // Forecast table for the expected-max rule: emax[level][pos][remaining],
  // window prices read off the committed cyclic sequence.
  std::vector<double> emax;
  auto emax_at = [&](int level, long pos, long remaining) -> double {
    return emax[(static_cast<size_t>(level) * L + pos) * (tau + 1) + remaining];
  };
  if (config.rule == PurchaseRule::kExpectedMax) {
    if (std::pow(static_cast<double>(model.K), tau) * tau * L > 5e7)
      throw DeskScaleError("instance too large for exact path enumeration");
    emax.assign(static_cast<size_t>(model.K) * L * (tau + 1), 0.0);
    std::vector<int> window;
    for (int level = 0; level < model.K; ++level)
      for (long pos = 0; pos < L; ++pos)
        for (long rem = 0; rem <= tau; ++rem) {
          window.clear();
          for (long j = 1; j <= rem; ++j) window.push_back(price_at(pos + j));
          emax[(static_cast<size_t>(level) * L + pos) * (tau + 1) + rem] =
              expected_max_surplus(model, chain, level, window);
        }
  }

  // myopic-forecast rule: is price_at(pos) <= every committed price in the
  // next `remaining` periods?
  auto window_floor_ok = [&](long pos, long remaining) {
    const int c = price_at(pos);
    const long span = bounded ? remaining : L;  // a full cycle covers all prices
    for (long j = 1; j <= span; ++j)
      if (price_at(pos + j) < c) return false;
    return true;
  };

  auto decide = [&](int level, long u, long s) {
    const int c = price_at(u);
    switch (config.rule) {
      case PurchaseRule::kPatient:
        return level >= c - 1;
      case PurchaseRule::kMyopicForecast:
        return level >= c - 1 && window_floor_ok(u, s_max - s);
      case PurchaseRule::kExpectedMax: {
        const double surplus = model.v[level] - model.v[c - 1];
        return surplus >= 0.0 && surplus >= emax_at(level, u % L, std::min<long>(tau - s, tau));
      }
    }
    return false;
  };

  std::vector<double> rep_mean(config.replications, 0.0);
  parallel_for(config.replications, config.jobs, [&](long rep) {
    double total = 0.0;
    for (long t = 0; t < config.horizon; ++t) {
      uint64_t rng = stream_init(config.seed, static_cast<uint64_t>(rep), static_cast<uint64_t>(t));
      int level = draw_level(model.gamma, uniform01(rng));
      for (long s = 0; s <= s_max; ++s) {
        const long u = t + s;
        if (u >= config.horizon) break;
        // post-transition timing: the decision at age s sees s updates;
        // pre-transition: it sees s-1 (the first update follows the second
        // decision), so the very first update draw is skipped.
        if (s > 0 && (timing == DecisionTiming::kPostTransition || s > 1)) {
          level = draw_transition(model, level, uniform01(rng));
          if (level < 0) break;
        }
        if (decide(level, u, s)) {
          if (u >= burn_in) total += model.v[price_at(u) - 1];
          break;
        }
      }
    }
    rep_mean[rep] = total / static_cast<double>(config.horizon - burn_in);
  });

  SimEstimate est;
  est.replications = config.replications;
  est.horizon = config.horizon;
  for (double r : rep_mean) est.mean += r;
  est.mean /= config.replications;
  if (config.replications > 1) {
    double ss = 0.0;
    for (double r : rep_mean) ss += (r - est.mean) * (r - est.mean);
    est.std_error = std::sqrt(ss / (static_cast<double>(config.replications) *
                                    (config.replications - 1)));
  }
  return est;
}

}  // namespace pricing
