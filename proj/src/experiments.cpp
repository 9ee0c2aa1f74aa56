#include "pricing/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pricing/parallel.hpp"

namespace pricing {
namespace experiments {

namespace {

MarketModel make_model(std::vector<double> v, std::vector<double> gamma,
                       std::vector<std::vector<double>> rows, std::optional<int> tau) {
  MarketModel m;
  m.K = static_cast<int>(v.size());
  m.v = std::move(v);
  m.gamma = std::move(gamma);
  for (auto& r : rows) m.Q.insert(m.Q.end(), r.begin(), r.end());
  m.tau = tau;
  return m;
}

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

std::vector<int> phase_prices(const OptResult& r) {
  std::vector<int> out;
  for (const auto& p : r.phases) out.push_back(p.price);
  return out;
}

}  // namespace

MarketModel finding6_model() {
  return make_model({1.0, 1.2, 1.4, 2.0}, {0.25, 0.25, 0.25, 0.25},
                    {{0.8, 0.05, 0.0, 0.0},
                     {0.2, 0.6, 0.0, 0.2},
                     {0.1, 0.2, 0.6, 0.0},
                     {0.1, 0.2, 0.6, 0.0}},
                    6);
}

MarketModel table2_model() {
  return make_model({1.0, 1.2, 1.5, 2.0}, {0.25, 0.25, 0.25, 0.25},
                    {{0.65, 0.05, 0.0, 0.05},
                     {0.05, 0.65, 0.0, 0.05},
                     {0.05, 0.05, 0.6, 0.0},
                     {0.0, 0.0, 0.0, 0.6}},
                    std::nullopt);
}

MarketModel finding5_instance1() {
  return make_model({1.0, 1.3, 1.45, 1.6}, {0.25, 0.25, 0.25, 0.25},
                    {{0.9, 0.05, 0.03, 0.02},
                     {0.05, 0.8, 0.1, 0.05},
                     {0.0, 0.05, 0.95, 0.0},
                     {0.0, 0.0, 0.0, 1.0}},
                    10);
}

MarketModel finding5_instance2() {
  return make_model({1.0, 1.1, 1.25, 1.4}, {0.25, 0.25, 0.25, 0.25},
                    {{0.7, 0.1, 0.05, 0.07},
                     {0.05, 0.7, 0.07, 0.07},
                     {0.07, 0.07, 0.7, 0.0},
                     {0.0, 0.0, 0.05, 0.8}},
                    10);
}

// ---------------------------------------------------------------------------
// Example 2
// ---------------------------------------------------------------------------

Example2Instance example2_build(int K) {
  if (K < 5) throw std::invalid_argument("construction needs K >= 5");
  if (K > 10) throw DeskScaleError("instance too large for desk scale");
  Example2Instance inst;
  inst.K = K;
  const double eps = 1.0 / (200.0 * K);
  inst.eps = eps;

  std::vector<double> gamma(K), v(K);
  double norm = 0.0;
  for (int i = 0; i < K; ++i) {
    gamma[i] = (1.0 - eps) * std::pow(eps, i);
    norm += gamma[i];
  }
  for (int i = 0; i < K; ++i) gamma[i] /= norm;
  for (int i = 0; i < K; ++i) v[i] = std::pow(eps, -i) / (1.0 - std::pow(eps, K - i));

  std::vector<std::vector<double>> rows(K, std::vector<double>(K, 0.0));
  for (int i = 2; i <= K - 1; ++i)  // 1-based display: q_{i-1,i+1}
    rows[i - 2][i] = (10.0 / 11.0) * std::pow(eps, K + 1) * (1.0 - std::pow(eps, K - i));
  rows[K - 2][1] = eps * eps * (1.0 - std::pow(eps, K - 1)) / (1.0 - eps);
  rows[K - 1][K - 1] = 1.0;

  inst.model = make_model(v, gamma, rows, 1);
  inst.Gamma.resize(K);
  double tail = 0.0;
  for (int i = K - 1; i >= 0; --i) {
    tail += gamma[i];
    inst.Gamma[i] = tail;
  }
  inst.alpha = inst.Gamma[0] * v[0];
  inst.U = (10.0 / 11.0) * (1.0 - eps) * std::pow(eps, K - 1) / norm;
  return inst;
}

Example2Report example2_verify_claim(int K) {
  Example2Report rep;
  rep.instance = example2_build(K);
  const Example2Instance& inst = rep.instance;
  const MarketModel& m = inst.model;

  for (int i = 0; i < K; ++i)
    rep.e0_err = std::max(rep.e0_err, std::abs(inst.Gamma[i] * m.v[i] - 1.0));
  rep.e1_ok = true;
  for (int i = 0; i + 1 < K; ++i)
    if (!(m.v[i] <= inst.eps / (1.0 - inst.eps) * m.v[i + 1])) rep.e1_ok = false;

  Kernel kernel(m);
  const PaceConfig pace = make_pace(m, 1);
  const CoupledFn f = build_coupled_fn(kernel, pace);

  // edge(i,j) = coupled value minus the context-free arrival part f(1, j)
  auto edge = [&](int i, int j) { return f.at(i - 1, j - 1) - f.at(0, j - 1); };
  for (int i = 2; i <= K - 1; ++i)
    rep.adjacency_err = std::max(rep.adjacency_err, std::abs(edge(i, i + 1) - inst.U));
  rep.gap_err = std::abs(edge(K, 2) - 1.1 * inst.U);
  for (int i = 1; i <= K; ++i)
    for (int j = 1; j <= K; ++j) {
      if (j == i + 1 || (i == K && j == 2)) continue;
      rep.offdiag_max = std::max(rep.offdiag_max, edge(i, j));
    }
  rep.instance.xi = edge(K, 2) / inst.U - 1.0;
  rep.xi_in_range =
      rep.instance.xi >= 0.1 && rep.instance.xi <= 0.1 + 2.0 * inst.eps;

  OptResult brute = brute_force_cycle_search(f);
  OptResult greedy = greedy_cycle_search(f);
  rep.brute_cycle = phase_prices(brute);
  rep.greedy_cycle = phase_prices(greedy);
  rep.brute_value = brute.value;
  rep.claim_value = inst.alpha + inst.U + rep.instance.xi * inst.U / (K - 1);

  // gap to the best simple cycle other than the optimum
  const long n = f.blocks();
  double runner = -std::numeric_limits<double>::infinity();
  std::vector<long> cyc;
  std::vector<char> used(n, 0);
  auto offer = [&](double phi_val, const std::vector<long>& c) {
    std::vector<long> canon = c;
    std::rotate(canon.begin(), std::min_element(canon.begin(), canon.end()), canon.end());
    if (canon == brute.cycle) return;
    runner = std::max(runner, phi_val / static_cast<double>(c.size()));
  };
  auto dfs = [&](auto&& self, long first, double path) -> void {
    offer(path + f.at(cyc.back(), first), cyc);
    for (long c = first + 1; c < n; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cyc.push_back(c);
      self(self, first, path + f.at(cyc[cyc.size() - 2], c));
      cyc.pop_back();
      used[c] = 0;
    }
  };
  for (long first = 0; first < n; ++first) {
    std::fill(used.begin(), used.end(), 0);
    used[first] = 1;
    cyc.assign(1, first);
    dfs(dfs, first, 0.0);
  }
  rep.runner_up_gap = brute.value - runner;
  return rep;
}

// ---------------------------------------------------------------------------
// Table 1
// ---------------------------------------------------------------------------

Table1Cell table1_run(int tau, double nu_exit, double gap_e, int K, int n_draws,
                      std::uint64_t seed, int jobs) {
  struct DrawOut {
    bool beats_fixed = false;
    bool beats_both = false;
    bool len3plus = false;
    bool len3 = false;
    double d = 0.0;
    double dp = 0.0;
  };
  std::vector<DrawOut> outs(n_draws);

  parallel_for(n_draws, jobs, [&](long i) {
    uint64_t rng = seed;
    splitmix64(rng);
    rng ^= 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(i) + 1);

    MarketModel m;
    m.K = K;
    m.tau = tau;
    m.gamma.assign(K, 1.0 / K);
    m.v.resize(K);
    m.v[0] = 1.0;
    for (int j = 1; j < K; ++j) m.v[j] = m.v[j - 1] * (1.0 + gap_e * uniform01(rng));
    m.Q.resize(static_cast<size_t>(K) * K);
    for (int r = 0; r < K; ++r) {
      double row_total = 0.0;
      std::vector<double> row(K);
      for (int c = 0; c < K; ++c) {
        row[c] = uniform01(rng);
        row_total += row[c];
      }
      for (int c = 0; c < K; ++c) m.q(r, c) = row[c] / row_total * (1.0 - nu_exit);
    }

    Kernel kernel(m);
    const PaceConfig pace = make_pace(m, tau);  // M = 1
    OptResult opt = optimize(kernel, pace, 1);
    const auto [fk, fixed] = fixed_price_best(kernel);
    (void)fk;
    const double two = k_cyclic_best(kernel, tau, 2).value;
    const double bench = std::max(fixed, two);

    DrawOut& o = outs[i];
    o.beats_fixed = opt.value > fixed + 1e-9;
    o.beats_both = opt.value > bench + 1e-9;
    o.len3plus = opt.diag.cycle_blocks >= 3;
    o.len3 = opt.diag.cycle_blocks == 3;
    if (o.beats_fixed) o.d = 100.0 * (opt.value - fixed) / fixed;
    if (o.len3plus) o.dp = 100.0 * (opt.value - bench) / bench;
  });

  Table1Cell cell;
  cell.tau = tau;
  cell.nu_exit = nu_exit;
  cell.gap_e = gap_e;
  cell.n_draws = n_draws;
  cell.seed = seed;
  long nf = 0, nb = 0, n3p = 0, n3 = 0;
  double dsum = 0.0, dpsum = 0.0;
  for (const auto& o : outs) {
    if (o.beats_fixed) {
      ++nf;
      dsum += o.d;
    }
    if (o.beats_both) ++nb;
    if (o.len3plus) {
      ++n3p;
      dpsum += o.dp;
    }
    if (o.len3) ++n3;
  }
  cell.f_pct = 100.0 * nf / n_draws;
  cell.d_pct = nf ? dsum / nf : 0.0;
  cell.fp_pct = 100.0 * nb / n_draws;
  cell.dp_pct = n3p ? dpsum / n3p : 0.0;
  cell.three_cyclic_pct = 100.0 * n3 / n_draws;
  return cell;
}

std::vector<Table1Cell> table1_grid(int n_draws, std::uint64_t seed, int jobs) {
  const std::vector<std::tuple<int, double, double>> grid = {
      {1, 0.1, 0.1},  {5, 0.1, 0.1},  {9, 0.1, 0.1},  {13, 0.1, 0.1},
      {5, 0.0, 0.1},  {5, 0.1, 0.1},  {5, 0.2, 0.1},  {5, 0.3, 0.1},
      {5, 0.1, 0.05}, {5, 0.1, 0.15}, {5, 0.1, 0.25}, {5, 0.1, 0.35}};
  std::vector<Table1Cell> cells;
  uint64_t cell_seed = seed;
  for (const auto& [tau, nu_exit, gap_e] : grid) {
    cells.push_back(table1_run(tau, nu_exit, gap_e, 4, n_draws, cell_seed, jobs));
    cell_seed += 0x9e3779b97f4a7c15ULL;
  }
  return cells;
}

std::string table1_csv(const std::vector<Table1Cell>& cells) {
  std::ostringstream os;
  os << "tau,nu,e,f_pct,d_pct,f_prime_pct,d_prime_pct,three_cyclic_pct,n_draws,seed,scheme\n";
  os.precision(10);
  for (const auto& c : cells)
    os << c.tau << "," << c.nu_exit << "," << c.gap_e << "," << c.f_pct << "," << c.d_pct << ","
       << c.fp_pct << "," << c.dp_pct << "," << c.three_cyclic_pct << "," << c.n_draws << ","
       << c.seed << "," << c.scheme << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Table 2
// ---------------------------------------------------------------------------

std::vector<Table2Row> table2_run(const std::vector<double>& eps_list, const MarketModel& model,
                                  double nu_override, DecisionTiming timing, int jobs) {
  if (model.bounded()) throw std::invalid_argument("table expects an unbounded-patience model");
  std::vector<Table2Row> rows;
  for (double eps : eps_list) {
    Truncation tr = truncate_to_bp(model, eps, nu_override);
    Kernel kernel(tr.model, timing);
    const PaceConfig pace = make_pace(tr.model, tr.model.patience());
    OptResult opt = optimize(kernel, pace, jobs);
    Table2Row row;
    row.epsilon = eps;
    row.tau_eps = tr.model.patience();
    row.pi = phase_prices(opt);
    row.r_bar = opt.value;
    row.fixed_best = fixed_price_best(kernel).second;
    row.delta = row.r_bar - eps - row.fixed_best;
    row.error_bound = tr.error_bound;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string table2_csv(const std::vector<Table2Row>& rows) {
  std::ostringstream os;
  os << "epsilon,tau_eps,pi_eps,R_bar,fixed_best,Delta_eps,error_bound\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.epsilon << "," << r.tau_eps << ",(";
    for (size_t i = 0; i < r.pi.size(); ++i) os << (i ? " " : "") << r.pi[i];
    os << ")," << r.r_bar << "," << r.fixed_best << "," << r.delta << "," << r.error_bound
       << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Finding V
// ---------------------------------------------------------------------------

Finding5Report finding5_run(DecisionTiming timing, int jobs) {
  Finding5Report rep;
  const MarketModel m1 = finding5_instance1();
  Kernel k1(m1, timing);
  const PaceConfig pace1 = make_pace(m1, 10);
  OptResult opt1 = optimize(k1, pace1, jobs);
  rep.opt1 = phase_prices(opt1);
  rep.opt1_value = opt1.value;

  MarketModel ident = m1;
  std::fill(ident.Q.begin(), ident.Q.end(), 0.0);
  for (int i = 0; i < ident.K; ++i) ident.q(i, i) = 1.0;
  Kernel kid(ident, timing);
  OptResult opt_id = optimize(kid, pace1, jobs);
  rep.opt1_id = phase_prices(opt_id);

  CyclicPolicy mis;
  for (const auto& p : opt_id.phases) mis.phases.push_back(p);
  rep.mis_value = k1.long_run_average(mis);
  rep.loss_pct = 100.0 * (rep.opt1_value - rep.mis_value) / rep.opt1_value;

  const MarketModel m2 = finding5_instance2();
  Kernel k2(m2, timing);
  OptResult opt2 = optimize(k2, make_pace(m2, 10), jobs);
  rep.opt2 = phase_prices(opt2);
  rep.opt2_value = opt2.value;
  rep.fixed1_value = k2.fixed_price_value(1);
  rep.gain_pct = 100.0 * (rep.opt2_value - rep.fixed1_value) / rep.fixed1_value;

  const std::vector<double> grid = {0.6, 0.7, 0.8, 0.9, 1.0};
  for (double d1 : grid)
    for (double d2 : grid)
      for (double d3 : grid)
        for (double d4 : grid) {
          MarketModel diag = m2;
          std::fill(diag.Q.begin(), diag.Q.end(), 0.0);
          diag.q(0, 0) = d1;
          diag.q(1, 1) = d2;
          diag.q(2, 2) = d3;
          diag.q(3, 3) = d4;
          Kernel kd(diag, timing);
          OptResult o = optimize(kd, make_pace(diag, 10), 1);
          if (o.value > kd.fixed_price_value(1) + 1e-9) {
            rep.diag_grid_fixed1 = false;
            if (rep.diag_grid_counterexample.empty())
              rep.diag_grid_counterexample = {d1, d2, d3, d4};
          }
        }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-price unbounded model
// ---------------------------------------------------------------------------

namespace {

struct TwoPriceConstants {
  double B = 0.0, C = 0.0, q11 = 0.0, v1 = 0.0, v2 = 0.0;
};

TwoPriceConstants two_price_constants(const MarketModel& m) {
  if (m.K != 2) throw std::invalid_argument("two-price analysis needs K = 2");
  if (m.bounded()) throw std::invalid_argument("two-price analysis expects unbounded patience");
  TwoPriceConstants c;
  c.v1 = m.v[0];
  c.v2 = m.v[1];
  c.q11 = m.q(0, 0);
  if (c.q11 >= 1.0) throw std::domain_error("q11 = 1 leaves no exit from the low state");
  const double q12 = m.q(0, 1);
  const double gam = m.gamma[1], gbar = m.gamma[0];
  c.B = gam * c.v2 + c.v2 * gbar * q12 / (1.0 - c.q11);
  c.C = -c.v2 * gbar * q12 / ((1.0 - c.q11) * (1.0 - c.q11)) +
        c.v1 * gbar * (c.q11 + q12) / (1.0 - c.q11);
  return c;
}

}  // namespace

double two_price_closed_r(const MarketModel& m, long t) {
  const TwoPriceConstants c = two_price_constants(m);
  const double decay = t == 0 ? 1.0 : std::pow(c.q11, static_cast<double>(t));
  return (c.v1 + c.B * static_cast<double>(t) + c.C * (1.0 - decay)) /
         static_cast<double>(t + 1);
}

TwoPriceReport two_price_analyze(const MarketModel& m, long grid_limit) {
  const TwoPriceConstants c = two_price_constants(m);
  TwoPriceReport rep;
  rep.B = c.B;
  rep.C = c.C;

  // Interior optimum iff C ln q11 < B - v1 < C. Otherwise the maximum sits at
  // an endpoint; the derivative numerator is monotone, so comparing
  // R(0) = v1 with R(inf) = B settles which one (this also covers the C < 0
  // valley shape, where "not decreasing at 0" alone would misclassify).
  const double d = c.B - c.v1;
  const bool interior =
      c.q11 > 0.0 && c.C != 0.0 && c.C * std::log(c.q11) < d && d < c.C;
  if (interior) {
    // real-valued peak is interior; walk the single-peaked sequence to the
    // integer argmax (which may still round down to 0)
    long t = 0;
    double cur = two_price_closed_r(m, 0);
    while (t < 4 * grid_limit) {
      const double nxt = two_price_closed_r(m, t + 1);
      if (nxt < cur) break;
      cur = nxt;
      ++t;
    }
    rep.t_star = t;
    rep.r_at_t_star = cur;
    rep.cls = t == 0 ? ResetClass::kImmediate : ResetClass::kFinite;
  } else if (c.v1 >= c.B) {
    rep.cls = ResetClass::kImmediate;
    rep.t_star = 0;
    rep.r_at_t_star = two_price_closed_r(m, 0);
  } else {
    rep.cls = ResetClass::kNever;
    rep.t_star = -1;
    rep.r_at_t_star = c.B;
  }

  long best_t = 0;
  double best_r = two_price_closed_r(m, 0);
  for (long t = 1; t <= grid_limit; ++t) {
    const double r = two_price_closed_r(m, t);
    if (r > best_r) {
      best_r = r;
      best_t = t;
    }
  }
  rep.grid_t_star = best_t;

  // cross-check the closed form against the truncated kernel
  Truncation tr = truncate_to_bp(m, 1e-12);
  Kernel kernel(tr.model);
  for (long t : {1L, 2L, 3L, 5L, 8L, 13L}) {
    CyclicPolicy pol{{Phase{2, t}, Phase{1, 1}}};
    const double kr = kernel.long_run_average(pol);
    const double cr = two_price_closed_r(m, t);
    rep.kernel_rel_err =
        std::max(rep.kernel_rel_err, std::abs(kr - cr) / std::max(1.0, std::abs(cr)));
  }
  return rep;
}

}  // namespace experiments
}  // namespace pricing
