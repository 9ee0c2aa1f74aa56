#pragma once

#include <vector>

#include "pricing/market_model.hpp"

namespace pricing {

/// One phase of a pricing policy: price index held for `duration` periods.
/// Price indices are 1-based throughout the public API (p = k means price v_k).
struct Phase {
  int price = 1;
  long duration = 1;
};

struct CyclicPolicy {
  std::vector<Phase> phases;
  long period() const {
    long t = 0;
    for (const auto& p : phases) t += p.duration;
    return t;
  }
  std::vector<int> expanded() const;  // one price index per period
};

/// Expected in-system occupancy resolved by age (periods since arrival).
/// Row a holds the survivors who arrived a periods ago; the exposed
/// StateVector theta() is the age sum. Age tracking makes the hard patience
/// cutoff exact: a customer decides at ages 0..tau and is then gone.
class AgedState {
 public:
  AgedState(int tau, int K) : tau_(tau), K_(K), a_(static_cast<size_t>(tau) * K, 0.0) {}

  static AgedState from_theta(const std::vector<double>& theta, int tau);

  int tau() const { return tau_; }
  int K() const { return K_; }
  double at(int age, int m) const { return a_[static_cast<size_t>(age) * K_ + m]; }
  double& at(int age, int m) { return a_[static_cast<size_t>(age) * K_ + m]; }
  const double* row(int age) const { return a_.data() + static_cast<size_t>(age) * K_; }
  double* row(int age) { return a_.data() + static_cast<size_t>(age) * K_; }

  std::vector<double> theta() const;
  void clear();
  double max_abs_diff(const AgedState& other) const;

 private:
  int tau_, K_;
  std::vector<double> a_;
};

/// Affine phase-revenue parameters at price index k: for durations t >= tau,
/// L(k,t|theta) = A + B*(t - tau) + <C, theta> and the post-phase state is the
/// constant theta_bar. B equals the long-run average revenue of the
/// fixed-price policy at k; C is the marginal revenue of one fresh in-system
/// customer per valuation level and does not depend on the duration.
struct AffineParams {
  int k = 1;
  double A = 0.0;
  double B = 0.0;
  std::vector<double> C;
  std::vector<double> theta_bar;
};

/// Exact single-market revenue engine.
///
/// Ground truth is the per-period age-resolved recursion (step); the phase
/// operations are closed forms with the patience cutoff applied exactly and
/// agree with iterated steps to machine precision. Bare-StateVector overloads
/// treat the input occupancy as fresh (age 0).
class Kernel {
 public:
  explicit Kernel(MarketModel model, DecisionTiming timing = DecisionTiming::kPostTransition);

  const MarketModel& model() const { return model_; }
  DecisionTiming timing() const { return timing_; }
  int tau() const { return tau_; }

  /// Advances one period at price index k; returns the expected revenue.
  double step(AgedState& state, int k) const;

  /// t periods at price k from a fresh occupancy vector; closed form.
  std::vector<double> theta_after_phase(int k, long t, const std::vector<double>& theta) const;
  double phase_revenue(int k, long t, const std::vector<double>& theta) const;

  /// Recursion twins of the closed forms (oracle path; bit-for-bit the
  /// iterated step).
  std::vector<double> theta_after_phase_by_recursion(int k, long t,
                                                     const std::vector<double>& theta) const;
  double phase_revenue_by_recursion(int k, long t, const std::vector<double>& theta) const;

  /// Post-phase state for durations >= tau (duration- and state-independent).
  std::vector<double> theta_bar(int k) const;

  /// Affine parameters; post-transition timing only.
  AffineParams affine_params(int k) const;

  /// Long-run average revenue of a cyclic policy: runs the recursion around
  /// the cycle to its periodic fixed point, then averages one traversal.
  double long_run_average(const CyclicPolicy& policy) const;

  /// Per-period revenue of the fixed-price policy at k.
  double fixed_price_value(int k) const;

 private:
  void check_price(int k) const;
  // decision-count n >= 0 -> expected revenue of one queued customer at
  // valuation level m facing n post-transition decisions at price k.
  std::vector<std::vector<double>> rev_tail_table(int k) const;
  double arrival_value(int k, int n, const std::vector<std::vector<double>>& rt) const;

  MarketModel model_;
  DecisionTiming timing_;
  int tau_;
};

/// Residual between the closed forms as printed in the source algebra
/// (no age censoring) and the recursion, alongside the corrected forms'
/// residual. The literal residual is reported, never silently absorbed.
struct ClosedFormReport {
  double corrected_max_rel_err = 0.0;
  double literal_max_rel_err = 0.0;
};

ClosedFormReport closed_form_report(const Kernel& kernel, int probes, unsigned long long seed);

}  // namespace pricing
