#pragma once

#include <optional>
#include <vector>

#include "pricing/revenue_kernel.hpp"

namespace pricing {

/// Forward-looking purchase rules. kPatient buys whenever the valuation
/// covers the price; kMyopicForecast additionally requires the current price
/// to be no higher than any committed price left in the customer's window
/// (the customer treats today's valuation as the forecast); kExpectedMax
/// requires the current surplus to cover the expected maximum future surplus
/// under the customer's own chain model.
enum class PurchaseRule { kPatient, kMyopicForecast, kExpectedMax };

/// Indifferent customers buy now (weak inequalities throughout).
inline constexpr bool kStrategicTiesBuyNow = true;

/// Customer-side belief chain for kExpectedMax; defaults to the market's own
/// (gamma, Q).
struct CustomerBelief {
  std::vector<double> gamma;
  std::vector<double> Q;  // row-major K*K
};

/// Tabulated one-block coupled revenue f(w, w'): expected revenue collected
/// during a block priced w' when the preceding block was priced w. Blocks are
/// strings of M price indices, each held sigma periods; block ids are the
/// base-K little-endian encoding of (price - 1).
class CoupledFn {
 public:
  CoupledFn(int K, int M, int sigma);

  int K() const { return K_; }
  int M() const { return M_; }
  int sigma() const { return sigma_; }
  int tau() const { return M_ * sigma_; }
  long blocks() const { return n_; }

  double at(long from, long to) const { return f_[static_cast<size_t>(from) * n_ + to]; }
  double& at(long from, long to) { return f_[static_cast<size_t>(from) * n_ + to]; }

  long encode(const std::vector<int>& prices) const;
  std::vector<int> decode(long id) const;          // M sigma-phase price indices
  std::vector<int> expand_periods(long id) const;  // M*sigma per-period price indices

  std::string to_csv() const;  // row-major dump, block ids as headers

 private:
  int K_, M_, sigma_;
  long n_;
  std::vector<double> f_;
};

/// Exact patient-customer table via the kernel recursion: start empty, run
/// through w silently, then through w' accumulating revenue.
CoupledFn build_coupled_fn(const Kernel& kernel, const PaceConfig& pace, int jobs = 0);

/// Strategic tables by exact probability-weighted enumeration over every
/// arrival period in the two-block window; revenue is credited to w' only.
/// Customers inside w' see committed prices only up to the end of the
/// two-block expansion. Desk-scale guarded: requires K^(2 tau) * tau <= 1e8.
CoupledFn build_coupled_fn_strategic(const MarketModel& model, const PaceConfig& pace,
                                     PurchaseRule rule,
                                     const std::optional<CustomerBelief>& belief = std::nullopt,
                                     int jobs = 0);

/// Mean of f around a block cycle with wraparound.
double phi(const CoupledFn& f, const std::vector<long>& cycle);

}  // namespace pricing
