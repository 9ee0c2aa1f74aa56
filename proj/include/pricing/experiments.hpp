#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pricing/optimizer.hpp"

namespace pricing {
namespace experiments {

// ---------------------------------------------------------------------------
// Built-in reference instances
// ---------------------------------------------------------------------------

/// K=4, tau=6, sigma=2 instance whose optimum is the three-price cycle
/// (4,3,1); reference values R((1))=1.00, R((3,1))=1.09, R((4,3,1))=1.14
/// under pre-transition timing.
MarketModel finding6_model();

/// K=4 unbounded-patience instance driving the epsilon-truncation table;
/// reference gap override nu = 0.3.
MarketModel table2_model();

MarketModel finding5_instance1();
MarketModel finding5_instance2();

// ---------------------------------------------------------------------------
// Adversarial construction: increasing optimal cycle of length K-1 at tau=1
// ---------------------------------------------------------------------------

struct Example2Instance {
  int K = 0;
  double eps = 0.0;
  double alpha = 0.0;  // value of every fixed-price policy
  double U = 0.0;      // adjacent-edge bonus
  double xi = 0.0;     // computed from the (K,2) edge
  MarketModel model;   // tau = 1
  std::vector<double> Gamma;  // tail sums of gamma
};

Example2Instance example2_build(int K);

struct Example2Report {
  Example2Instance instance;
  double e0_err = 0.0;       // max |Gamma_i v_i - 1|
  bool e1_ok = false;        // v_i <= eps/(1-eps) v_{i+1}
  double adjacency_err = 0.0;  // max |(i,i+1) edge - U|
  double gap_err = 0.0;        // |(K,2) edge - 1.1 U|
  double offdiag_max = 0.0;    // max (i,j) edge over non-adjacent pairs
  bool xi_in_range = false;    // xi in [0.1, 0.1 + 2 eps]
  std::vector<int> brute_cycle;   // price cycle found by enumeration
  std::vector<int> greedy_cycle;  // price cycle found by the greedy search
  double brute_value = 0.0;
  double claim_value = 0.0;    // alpha + U + xi U/(K-1)
  double runner_up_gap = 0.0;  // optimum minus the best other simple cycle
};

Example2Report example2_verify_claim(int K);

// ---------------------------------------------------------------------------
// Random-instance statistics (Table 1 layout)
// ---------------------------------------------------------------------------

struct Table1Cell {
  int tau = 0;
  double nu_exit = 0.0;
  double gap_e = 0.0;
  int n_draws = 0;
  std::uint64_t seed = 0;
  double f_pct = 0.0;        // optimum beats every fixed price
  double d_pct = 0.0;        // mean outperformance %, given non-fixed optimum
  double fp_pct = 0.0;       // optimum beats fixed and two-cyclic benchmarks
  double dp_pct = 0.0;       // mean outperformance %, given cycle length >= 3
  double three_cyclic_pct = 0.0;
  std::string scheme = "iid-uniform-rows-rescaled";
};

Table1Cell table1_run(int tau, double nu_exit, double gap_e, int K, int n_draws,
                      std::uint64_t seed, int jobs = 0);

std::vector<Table1Cell> table1_grid(int n_draws, std::uint64_t seed, int jobs = 0);
std::string table1_csv(const std::vector<Table1Cell>& cells);

// ---------------------------------------------------------------------------
// Epsilon-truncation sweep (Table 2 layout)
// ---------------------------------------------------------------------------

struct Table2Row {
  double epsilon = 0.0;
  int tau_eps = 0;
  std::vector<int> pi;     // optimal price cycle at sigma = tau_eps
  double r_bar = 0.0;      // its per-period value on the truncated model
  double fixed_best = 0.0;
  double delta = 0.0;      // r_bar - epsilon - fixed_best
  double error_bound = 0.0;
};

std::vector<Table2Row> table2_run(const std::vector<double>& eps_list, const MarketModel& model,
                                  double nu_override, DecisionTiming timing, int jobs = 0);
std::string table2_csv(const std::vector<Table2Row>& rows);

// ---------------------------------------------------------------------------
// Mis-specification cost study
// ---------------------------------------------------------------------------

struct Finding5Report {
  std::vector<int> opt1;          // optimum of instance 1 under its true chain
  double opt1_value = 0.0;
  std::vector<int> opt1_id;       // optimum of instance 1 under the identity chain
  double mis_value = 0.0;         // identity-chain policy evaluated on the true chain
  double loss_pct = 0.0;
  std::vector<int> opt2;          // optimum of instance 2
  double opt2_value = 0.0;
  double fixed1_value = 0.0;      // fixed lowest price on instance 2
  double gain_pct = 0.0;
  bool diag_grid_fixed1 = true;   // fixed (1) optimal on the diagonal-chain grid
  std::vector<double> diag_grid_counterexample;  // first failing diagonal, if any
};

Finding5Report finding5_run(DecisionTiming timing, int jobs = 0);

// ---------------------------------------------------------------------------
// Two-price unbounded model (reset-time analysis)
// ---------------------------------------------------------------------------

enum class ResetClass { kImmediate, kFinite, kNever };  // t* = 0, interior, infinity

struct TwoPriceReport {
  double B = 0.0;  // long-run value of holding the high price forever
  double C = 0.0;
  ResetClass cls = ResetClass::kNever;
  long t_star = -1;          // argmax over integers of R(t); -1 when infinite
  double r_at_t_star = 0.0;
  long grid_t_star = -1;     // numeric grid argmax (oracle)
  double kernel_rel_err = 0.0;  // closed form vs truncated kernel
};

/// Closed-form per-period revenue of the cycle (v2 held t periods, v1 once).
double two_price_closed_r(const MarketModel& model, long t);

TwoPriceReport two_price_analyze(const MarketModel& model, long grid_limit = 10000);

}  // namespace experiments
}  // namespace pricing
