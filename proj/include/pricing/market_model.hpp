#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pricing {

/// Event ordering inside one selling period.
///
/// kPostTransition: queued customers update their valuation first, then decide
/// at the posted price (the ordering implied by the closed-form revenue
/// algebra; default everywhere).
///
/// kPreTransition: queued customers decide at their stored valuation first,
/// then update. The two orderings differ only across price-drop boundaries,
/// where kPreTransition lets the stored queue buy before drifting or exiting.
/// Some published reference tables are reproducible only under this ordering;
/// see README "Reference deviations".
enum class DecisionTiming { kPostTransition, kPreTransition };

/// Raised when an exhaustive routine is asked to run beyond desk scale.
struct DeskScaleError : std::runtime_error {
  explicit DeskScaleError(const std::string& what) : std::runtime_error(what) {}
};

const char* to_string(DecisionTiming t);
DecisionTiming timing_from_string(const std::string& s);

/// Market primitives: valuation ladder, arrival distribution, transition
/// minor and patience bound.
///
/// `Q` is the K-by-K minor of the valuation transition matrix with the
/// absorbing exit state removed; row slack 1 - sum_j q_ij is the per-period
/// exit probability. `tau` empty means unbounded patience, in which case the
/// infinity-norm gap nu = 1 - max_i sum_j q_ij must be positive.
struct MarketModel {
  int K = 0;
  std::vector<double> v;      // strictly increasing, all > 0
  std::vector<double> gamma;  // arrival valuation distribution, sums to 1
  std::vector<double> Q;      // row-major K*K, substochastic
  std::optional<int> tau;     // empty = unbounded patience

  double q(int i, int j) const { return Q[static_cast<size_t>(i) * K + j]; }
  double& q(int i, int j) { return Q[static_cast<size_t>(i) * K + j]; }
  bool bounded() const { return tau.has_value(); }
  int patience() const;  // throws if unbounded
  double row_sum(int i) const;
};

/// Pricing pace: every phase lasts a multiple of `sigma` periods and a
/// customer witnesses at most `M` price changes, tau = M * sigma.
struct PaceConfig {
  int sigma = 1;
  int M = 1;
};

/// Builds the pace for a bounded model; rejects tau % sigma != 0.
PaceConfig make_pace(const MarketModel& model, int sigma);

struct ValidationIssue {
  std::string what;
  int index = -1;  // offending row/component, -1 if global
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

ValidationReport validate(const MarketModel& model);

/// 1 minus the maximum row sum of Q (infinity-norm gap).
double nu(const MarketModel& model);

/// floor(|ln eps / ln(1-nu)|), clamped to >= 1. Requires eps, nu in (0,1).
int tau_epsilon(double epsilon, double nu_value);

struct Truncation {
  MarketModel model;   // bounded copy with tau = tau_epsilon
  double error_bound;  // v_K * eps / nu
};

/// Converts an unbounded-patience model into its bounded eps-approximation.
/// `nu_override` replaces the computed gap when the caller pins a different
/// exit-rate convention (used by the table reproductions).
Truncation truncate_to_bp(const MarketModel& model, double epsilon,
                          std::optional<double> nu_override = std::nullopt);

// JSON model files: {"K":..,"v":[..],"gamma":[..],"Q":[[..],..],"tau":int|null}
MarketModel model_from_json_text(const std::string& text);
MarketModel load_model(const std::string& path);
std::string model_to_json_text(const MarketModel& model);

}  // namespace pricing
