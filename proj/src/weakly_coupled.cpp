#include "pricing/weakly_coupled.hpp"

#include "pricing/forecast.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "pricing/parallel.hpp"

namespace pricing {

CoupledFn::CoupledFn(int K, int M, int sigma) : K_(K), M_(M), sigma_(sigma) {
  double count = std::pow(static_cast<double>(K), M);
  if (count > (1 << 10)) throw DeskScaleError("block alphabet too large for desk scale");
  n_ = 1;
  for (int i = 0; i < M_; ++i) n_ *= K_;
  f_.assign(static_cast<size_t>(n_) * n_, 0.0);
}

long CoupledFn::encode(const std::vector<int>& prices) const {
  if (static_cast<int>(prices.size()) != M_) throw std::invalid_argument("block length must be M");
  long id = 0, base = 1;
  for (int i = 0; i < M_; ++i) {
    if (prices[i] < 1 || prices[i] > K_) throw std::invalid_argument("price index out of range");
    id += static_cast<long>(prices[i] - 1) * base;
    base *= K_;
  }
  return id;
}

std::vector<int> CoupledFn::decode(long id) const {
  std::vector<int> prices(M_);
  for (int i = 0; i < M_; ++i) {
    prices[i] = static_cast<int>(id % K_) + 1;
    id /= K_;
  }
  return prices;
}

std::vector<int> CoupledFn::expand_periods(long id) const {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(M_) * sigma_);
  for (int p : decode(id))
    for (int s = 0; s < sigma_; ++s) out.push_back(p);
  return out;
}

std::string CoupledFn::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "from_block\\to_block";
  for (long c = 0; c < n_; ++c) {
    os << ",";
    auto pr = decode(c);
    for (size_t i = 0; i < pr.size(); ++i) os << (i ? "-" : "") << pr[i];
  }
  os << "\n";
  for (long r = 0; r < n_; ++r) {
    auto pr = decode(r);
    for (size_t i = 0; i < pr.size(); ++i) os << (i ? "-" : "") << pr[i];
    for (long c = 0; c < n_; ++c) os << "," << at(r, c);
    os << "\n";
  }
  return os.str();
}

CoupledFn build_coupled_fn(const Kernel& kernel, const PaceConfig& pace, int jobs) {
  const MarketModel& m = kernel.model();
  if (m.patience() != pace.sigma * pace.M)
    throw std::invalid_argument("tau != M * sigma");
  CoupledFn f(m.K, pace.M, pace.sigma);
  const long n = f.blocks();
  parallel_for(n, jobs, [&](long from) {
    const auto lead = f.expand_periods(from);
    for (long to = 0; to < n; ++to) {
      const auto follow = f.expand_periods(to);
      AgedState s(kernel.tau(), m.K);
      for (int k : lead) kernel.step(s, k);
      double rev = 0.0;
      for (int k : follow) rev += kernel.step(s, k);
      f.at(from, to) = rev;
    }
  });
  return f;
}

double phi(const CoupledFn& f, const std::vector<long>& cycle) {
  if (cycle.empty()) throw std::invalid_argument("empty cycle");
  double total = 0.0;
  for (size_t i = 0; i < cycle.size(); ++i)
    total += f.at(cycle[i], cycle[(i + 1) % cycle.size()]);
  return total / static_cast<double>(cycle.size());
}

// ---------------------------------------------------------------------------
// Strategic enumeration engine
// ---------------------------------------------------------------------------

namespace {

double walk_max_surplus(const MarketModel& m, const CustomerBelief& b,
                        const std::vector<int>& prices, int level, size_t j, double best) {
  if (j >= prices.size()) return best;
  double acc = 0.0;
  double stay = 0.0;
  for (int nxt = 0; nxt < m.K; ++nxt) {
    const double p = b.Q[static_cast<size_t>(level) * m.K + nxt];
    if (p == 0.0) continue;
    stay += p;
    const double cand = std::max(best, m.v[nxt] - m.v[prices[j] - 1]);
    acc += p * walk_max_surplus(m, b, prices, nxt, j + 1, cand);
  }
  const double exit_p = 1.0 - stay;
  if (exit_p > 0.0) {
    // once absorbed the surplus at every remaining period is -price
    double cand = best;
    for (size_t jj = j; jj < prices.size(); ++jj) cand = std::max(cand, -m.v[prices[jj] - 1]);
    acc += exit_p * cand;
  }
  return acc;
}

}  // namespace

double expected_max_surplus(const MarketModel& model, const CustomerBelief& chain, int level,
                            const std::vector<int>& prices) {
  if (prices.empty()) return -std::numeric_limits<double>::infinity();
  return walk_max_surplus(model, chain, prices, level, 0, -std::numeric_limits<double>::infinity());
}

CoupledFn build_coupled_fn_strategic(const MarketModel& model, const PaceConfig& pace,
                                     PurchaseRule rule,
                                     const std::optional<CustomerBelief>& belief, int jobs) {
  const int tau = model.patience();
  if (tau != pace.sigma * pace.M) throw std::invalid_argument("tau != M * sigma");
  if (rule == PurchaseRule::kExpectedMax &&
      std::pow(static_cast<double>(model.K), 2.0 * tau) * tau > 1e8)
    throw DeskScaleError("instance too large for exact path enumeration");

  CustomerBelief chain;
  if (belief) {
    chain = *belief;
    if (chain.Q.size() != static_cast<size_t>(model.K) * model.K)
      throw std::invalid_argument("belief chain has wrong shape");
  } else {
    chain.gamma = model.gamma;
    chain.Q = model.Q;
  }

  CoupledFn f(model.K, pace.M, pace.sigma);
  const long n = f.blocks();
  const int span = 2 * tau;

  parallel_for(n, jobs, [&](long from) {
    std::vector<int> prices = f.expand_periods(from);
    prices.resize(span);
    for (long to = 0; to < n; ++to) {
      const auto follow = f.expand_periods(to);
      for (int i = 0; i < tau; ++i) prices[tau + i] = follow[i];
      std::unordered_map<long, double> forecast_cache;
      auto forecast = [&](int level, int j0, int j1) -> double {
        if (j0 > j1) return -std::numeric_limits<double>::infinity();
        const long key = (static_cast<long>(level) * (span + 1) + j0) * (span + 1) + j1;
        auto it = forecast_cache.find(key);
        if (it != forecast_cache.end()) return it->second;
        std::vector<int> window(prices.begin() + j0, prices.begin() + j1 + 1);
        const double out = expected_max_surplus(model, chain, level, window);
        forecast_cache.emplace(key, out);
        return out;
      };

      double rev = 0.0;
      std::vector<double> x(model.K), xn(model.K);
      for (int p = 0; p < span; ++p) {
        for (int m = 0; m < model.K; ++m) x[m] = model.gamma[m];
        const int s_end = std::min(tau, span - 1 - p);
        for (int s = 0; s <= s_end; ++s) {
          const int c = prices[p + s];
          const double price = model.v[c - 1];
          bool window_ok = true;
          if (rule == PurchaseRule::kMyopicForecast) {
            for (int j = s + 1; j <= s_end; ++j)
              if (prices[p + j] < c) {
                window_ok = false;
                break;
              }
          }
          for (int m = 0; m < model.K; ++m) {
            if (x[m] == 0.0) continue;
            bool buy = false;
            switch (rule) {
              case PurchaseRule::kPatient:
                buy = m >= c - 1;
                break;
              case PurchaseRule::kMyopicForecast:
                buy = m >= c - 1 && window_ok;
                break;
              case PurchaseRule::kExpectedMax: {
                const double surplus = model.v[m] - price;
                buy = surplus >= 0.0 && surplus >= forecast(m, p + s + 1, p + s_end);
                break;
              }
            }
            if (buy) {
              if (p + s >= tau) rev += x[m] * price;
              x[m] = 0.0;
            }
          }
          if (s == s_end) break;
          for (int j = 0; j < model.K; ++j) {
            double acc = 0.0;
            for (int i = 0; i < model.K; ++i) acc += x[i] * model.q(i, j);
            xn[j] = acc;
          }
          x.swap(xn);
        }
      }
      f.at(from, to) = rev;
    }
  });
  return f;
}

}  // namespace pricing
