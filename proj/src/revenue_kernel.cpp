#include "pricing/revenue_kernel.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <cstdint>

namespace pricing {

std::vector<int> CyclicPolicy::expanded() const {
  std::vector<int> out;
  for (const auto& p : phases)
    for (long i = 0; i < p.duration; ++i) out.push_back(p.price);
  return out;
}

AgedState AgedState::from_theta(const std::vector<double>& theta, int tau) {
  AgedState s(tau, static_cast<int>(theta.size()));
  for (int m = 0; m < s.K_; ++m) s.at(0, m) = theta[m];
  return s;
}

std::vector<double> AgedState::theta() const {
  std::vector<double> out(K_, 0.0);
  for (int a = 0; a < tau_; ++a)
    for (int m = 0; m < K_; ++m) out[m] += at(a, m);
  return out;
}

void AgedState::clear() { std::fill(a_.begin(), a_.end(), 0.0); }

double AgedState::max_abs_diff(const AgedState& other) const {
  double worst = 0.0;
  for (size_t i = 0; i < a_.size(); ++i) worst = std::max(worst, std::abs(a_[i] - other.a_[i]));
  return worst;
}

Kernel::Kernel(MarketModel model, DecisionTiming timing)
    : model_(std::move(model)), timing_(timing), tau_(model_.patience()) {}

void Kernel::check_price(int k) const {
  if (k < 1 || k > model_.K) throw std::invalid_argument("price index out of range");
}

double Kernel::step(AgedState& state, int k) const {
  check_price(k);
  const MarketModel& m = model_;
  const int K = m.K;
  const double price = m.v[k - 1];
  double rev = 0.0;
  std::vector<double> y(K);
  for (int a = tau_ - 1; a >= 0; --a) {
    const double* x = state.row(a);
    if (timing_ == DecisionTiming::kPostTransition) {
      // transition, then decide
      for (int j = 0; j < K; ++j) {
        double s = 0.0;
        for (int i = 0; i < K; ++i) s += x[i] * m.q(i, j);
        y[j] = s;
      }
      for (int j = k - 1; j < K; ++j) {
        rev += price * y[j];
        y[j] = 0.0;
      }
      if (a + 1 <= tau_ - 1) {
        double* dst = state.row(a + 1);
        for (int j = 0; j < K; ++j) dst[j] = y[j];
      }
    } else {
      // decide at the stored valuation, then transition
      std::vector<double> xs(x, x + K);
      for (int j = k - 1; j < K; ++j) {
        rev += price * xs[j];
        xs[j] = 0.0;
      }
      if (a + 1 <= tau_ - 1) {
        double* dst = state.row(a + 1);
        for (int j = 0; j < K; ++j) {
          double s = 0.0;
          for (int i = 0; i < K; ++i) s += xs[i] * m.q(i, j);
          dst[j] = s;
        }
      }
    }
  }
  double* fresh = state.row(0);
  for (int j = 0; j < K; ++j) fresh[j] = j >= k - 1 ? 0.0 : m.gamma[j];
  for (int j = k - 1; j < K; ++j) rev += price * m.gamma[j];
  return rev;
}

std::vector<double> Kernel::theta_after_phase_by_recursion(int k, long t,
                                                           const std::vector<double>& theta) const {
  AgedState s = AgedState::from_theta(theta, tau_);
  for (long i = 0; i < t; ++i) step(s, k);
  return s.theta();
}

double Kernel::phase_revenue_by_recursion(int k, long t, const std::vector<double>& theta) const {
  AgedState s = AgedState::from_theta(theta, tau_);
  double total = 0.0;
  for (long i = 0; i < t; ++i) total += step(s, k);
  return total;
}

// Expected revenue of one queued customer at valuation level m who will face
// n post-transition purchase decisions at price k: rt[n][m]. Built from the
// sub-blocks of Q restricted to states below k.
std::vector<std::vector<double>> Kernel::rev_tail_table(int k) const {
  const MarketModel& m = model_;
  const int K = m.K;
  const int low = k - 1;  // number of states strictly below k
  const double price = m.v[k - 1];

  std::vector<double> p_plus(K, 0.0);  // one-transition purchase probability
  for (int i = 0; i < K; ++i)
    for (int j = k - 1; j < K; ++j) p_plus[i] += m.q(i, j);

  std::vector<std::vector<double>> rt(static_cast<size_t>(tau_) + 1,
                                      std::vector<double>(K, 0.0));
  std::vector<double> w(low);  // Q_k^l * P_{k-,k+}
  for (int i = 0; i < low; ++i) w[i] = p_plus[i];
  std::vector<double> wsum(low, 0.0);
  std::vector<double> wn(low);
  for (int n = 1; n <= tau_; ++n) {
    // rt[n][m] = price * (p_plus[m] + U_{m,k-} . sum_{l<=n-2} Q_k^l P_{k-,k+})
    for (int mm = 0; mm < K; ++mm) {
      double dot = 0.0;
      for (int j = 0; j < low; ++j) dot += m.q(mm, j) * wsum[j];
      rt[n][mm] = price * (p_plus[mm] + dot);
    }
    for (int j = 0; j < low; ++j) wsum[j] += w[j];
    for (int j = 0; j < low; ++j) {
      double s = 0.0;
      for (int i = 0; i < low; ++i) s += m.q(j, i) * w[i];
      wn[j] = s;
    }
    w.swap(wn);
  }
  return rt;
}

// Expected within-horizon revenue of one arrival facing price k with n
// post-transition decisions remaining after its arrival decision.
double Kernel::arrival_value(int k, int n, const std::vector<std::vector<double>>& rt) const {
  const MarketModel& m = model_;
  double out = 0.0;
  for (int j = k - 1; j < m.K; ++j) out += m.v[k - 1] * m.gamma[j];
  if (n > 0)
    for (int j = 0; j < k - 1; ++j) out += m.gamma[j] * rt[n][j];
  return out;
}

std::vector<double> Kernel::theta_after_phase(int k, long t, const std::vector<double>& theta) const {
  check_price(k);
  if (timing_ == DecisionTiming::kPreTransition)
    return theta_after_phase_by_recursion(k, t, theta);
  const MarketModel& m = model_;
  const int K = m.K;
  const int low = k - 1;
  std::vector<double> out(K, 0.0);
  if (t == 0) return theta;

  // incumbents (age 0) survive the phase only if t <= tau - 1
  if (t <= tau_ - 1) {
    std::vector<double> y(low, 0.0);
    for (int j = 0; j < low; ++j) {
      double s = 0.0;
      for (int i = 0; i < K; ++i) s += theta[i] * m.q(i, j);
      y[j] = s;
    }
    std::vector<double> yn(low);
    for (long l = 1; l < t; ++l) {
      for (int j = 0; j < low; ++j) {
        double s = 0.0;
        for (int i = 0; i < low; ++i) s += y[i] * m.q(i, j);
        yn[j] = s;
      }
      y.swap(yn);
    }
    for (int j = 0; j < low; ++j) out[j] += y[j];
  }

  // within-phase arrivals, youngest cohort first: gamma_{<k} Q_k^i
  std::vector<double> g(low);
  for (int j = 0; j < low; ++j) g[j] = m.gamma[j];
  const long cohorts = std::min<long>(t, tau_);
  std::vector<double> gn(low);
  for (long i = 0; i < cohorts; ++i) {
    for (int j = 0; j < low; ++j) out[j] += g[j];
    if (i + 1 < cohorts) {
      for (int j = 0; j < low; ++j) {
        double s = 0.0;
        for (int i2 = 0; i2 < low; ++i2) s += g[i2] * m.q(i2, j);
        gn[j] = s;
      }
      g.swap(gn);
    }
  }
  return out;
}

double Kernel::phase_revenue(int k, long t, const std::vector<double>& theta) const {
  check_price(k);
  if (timing_ == DecisionTiming::kPreTransition)
    return phase_revenue_by_recursion(k, t, theta);
  const auto rt = rev_tail_table(k);
  const MarketModel& m = model_;
  double total = 0.0;
  const int inc_n = static_cast<int>(std::min<long>(t, tau_));
  for (int mm = 0; mm < m.K; ++mm) total += theta[mm] * rt[inc_n][mm];
  const long full = std::max<long>(0, t - tau_);
  total += static_cast<double>(full) * arrival_value(k, tau_, rt);
  for (long r = 0; r < std::min<long>(t, tau_); ++r)
    total += arrival_value(k, static_cast<int>(r), rt);
  return total;
}

std::vector<double> Kernel::theta_bar(int k) const {
  check_price(k);
  if (timing_ == DecisionTiming::kPreTransition) {
    std::vector<double> zero(model_.K, 0.0);
    return theta_after_phase_by_recursion(k, tau_, zero);
  }
  std::vector<double> zero(model_.K, 0.0);
  return theta_after_phase(k, tau_, zero);
}

AffineParams Kernel::affine_params(int k) const {
  check_price(k);
  if (timing_ == DecisionTiming::kPreTransition)
    throw std::logic_error("affine parameters are defined for post-transition timing");
  const auto rt = rev_tail_table(k);
  AffineParams p;
  p.k = k;
  for (int r = 0; r < tau_; ++r) p.A += arrival_value(k, r, rt);
  p.B = arrival_value(k, tau_, rt);
  p.C = rt[tau_];
  p.theta_bar = theta_bar(k);
  return p;
}

double Kernel::long_run_average(const CyclicPolicy& policy) const {
  if (policy.phases.empty()) throw std::invalid_argument("empty policy");
  for (const auto& ph : policy.phases) {
    check_price(ph.price);
    if (ph.duration < 1) throw std::invalid_argument("phase duration must be >= 1");
  }
  const long period = policy.period();
  AgedState s(tau_, model_.K);
  AgedState prev = s;
  const long cap = (tau_ + period - 1) / period + 2;
  for (long w = 0; w < cap; ++w) {
    for (const auto& ph : policy.phases)
      for (long i = 0; i < ph.duration; ++i) step(s, ph.price);
    if (s.max_abs_diff(prev) < 1e-12) break;
    prev = s;
  }
  double total = 0.0;
  for (const auto& ph : policy.phases)
    for (long i = 0; i < ph.duration; ++i) total += step(s, ph.price);
  return total / static_cast<double>(period);
}

double Kernel::fixed_price_value(int k) const {
  check_price(k);
  if (timing_ == DecisionTiming::kPostTransition) {
    const auto rt = rev_tail_table(k);
    return arrival_value(k, tau_, rt);
  }
  return long_run_average(CyclicPolicy{{Phase{k, std::max(1, tau_)}}});
}

// ---------------------------------------------------------------------------
// Closed-form residual report
// ---------------------------------------------------------------------------

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(uint64_t& x) {
  return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

// Phase revenue exactly as the source algebra prints it: no age censoring of
// the incumbent mass and the arrival waterfall indexed by the full phase
// length.
double literal_phase_revenue(const MarketModel& m, int tau, int k, long t,
                             const std::vector<double>& theta) {
  const int K = m.K;
  const int low = k - 1;
  const double price = m.v[k - 1];
  std::vector<double> p_plus(K, 0.0);
  for (int i = 0; i < K; ++i)
    for (int j = k - 1; j < K; ++j) p_plus[i] += m.q(i, j);

  // L_{(k,t)}(m) = price * (P_{m,k+} + sum_{l=0}^{t^tau-2} U Q_k^l P)
  auto L_inc = [&](long span) {
    std::vector<double> out(K, 0.0);
    const long top = std::min<long>(span, tau) - 2;
    std::vector<double> w(low), wsum(low, 0.0), wn(low);
    for (int i = 0; i < low; ++i) w[i] = p_plus[i];
    for (long l = 0; l <= top; ++l) {
      for (int j = 0; j < low; ++j) wsum[j] += w[j];
      for (int j = 0; j < low; ++j) {
        double s = 0.0;
        for (int i = 0; i < low; ++i) s += m.q(j, i) * w[i];
        wn[j] = s;
      }
      w.swap(wn);
    }
    for (int mm = 0; mm < K; ++mm) {
      double dot = 0.0;
      for (int j = 0; j < low; ++j) dot += m.q(mm, j) * wsum[j];
      out[mm] = price * (p_plus[mm] + dot);
    }
    return out;
  };

  double total = 0.0;
  auto lt = L_inc(t);
  for (int mm = 0; mm < K; ++mm) total += theta[mm] * lt[mm];
  for (long s = 1; s <= t; ++s) {
    auto ls = L_inc(s);
    for (int mm = 0; mm < K; ++mm) {
      const double lbar = mm >= k - 1 ? price : ls[mm];
      total += m.gamma[mm] * lbar;
    }
  }
  return total;
}

}  // namespace

ClosedFormReport closed_form_report(const Kernel& kernel, int probes, unsigned long long seed) {
  ClosedFormReport rep;
  const MarketModel& m = kernel.model();
  uint64_t rng = seed;
  for (int p = 0; p < probes; ++p) {
    const int k = 1 + static_cast<int>(splitmix64(rng) % m.K);
    const long t = 1 + static_cast<long>(splitmix64(rng) % (2 * kernel.tau()));
    std::vector<double> theta(m.K);
    for (int i = 0; i < m.K; ++i) theta[i] = uniform01(rng);
    const double truth = kernel.phase_revenue_by_recursion(k, t, theta);
    const double closed = kernel.phase_revenue(k, t, theta);
    const double literal = literal_phase_revenue(m, kernel.tau(), k, t, theta);
    const double scale = std::max(1.0, std::abs(truth));
    rep.corrected_max_rel_err = std::max(rep.corrected_max_rel_err, std::abs(closed - truth) / scale);
    rep.literal_max_rel_err = std::max(rep.literal_max_rel_err, std::abs(literal - truth) / scale);
  }
  return rep;
}

}  // namespace pricing
