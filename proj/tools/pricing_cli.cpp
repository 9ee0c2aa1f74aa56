#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pricing/experiments.hpp"
#include "pricing/optimizer.hpp"
#include "pricing/simulator.hpp"

namespace {

using nlohmann::json;
using namespace pricing;

void write_out(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

json phases_json(const std::vector<Phase>& phases) {
  json arr = json::array();
  for (const auto& p : phases) arr.push_back({p.price, p.duration});
  return arr;
}

CyclicPolicy policy_from_json(const json& j) {
  CyclicPolicy pol;
  const json& arr = j.contains("phases") ? j["phases"] : j.at("cycle");
  for (const auto& e : arr) {
    if (e.is_array())
      pol.phases.push_back(Phase{e.at(0).get<int>(), e.at(1).get<long>()});
    else
      pol.phases.push_back(Phase{e.at("price").get<int>(), e.at("duration").get<long>()});
  }
  return pol;
}

json opt_json(const OptResult& r, const CoupledFn* f) {
  json j;
  j["value"] = r.value;
  j["is_fixed_price"] = r.is_fixed_price;
  j["phases"] = phases_json(r.phases);
  if (f) {
    json blocks = json::array();
    for (long id : r.cycle) blocks.push_back(f->decode(id));
    j["cycle_blocks"] = blocks;
  }
  j["diagnostics"] = {{"cycle_blocks", r.diag.cycle_blocks},
                      {"monotone_decreasing", r.diag.monotone_decreasing},
                      {"strings_visited", r.diag.strings_visited},
                      {"closures_rejected", r.diag.closures_rejected},
                      {"seed_pairs", r.diag.seed_pairs}};
  return j;
}

MarketModel load_checked(const std::string& path) {
  MarketModel m = load_model(path);
  auto rep = validate(m);
  if (!rep.ok()) throw std::invalid_argument("invalid model: " + rep.summary());
  return m;
}

int run_optimize(const std::string& model_path, int sigma, std::optional<double> epsilon,
                 std::optional<double> nu_override, const std::string& timing_s, int jobs,
                 std::optional<double> discount, int length_bound, const std::string& dump_f,
                 const std::string& out) {
  MarketModel m = load_checked(model_path);
  const DecisionTiming timing = timing_from_string(timing_s);
  json j;
  if (!m.bounded()) {
    if (!epsilon) throw std::invalid_argument("unbounded model: pass --epsilon to truncate");
    Truncation tr = truncate_to_bp(m, *epsilon, nu_override);
    j["truncation"] = {{"epsilon", *epsilon},
                       {"tau_eps", tr.model.patience()},
                       {"error_bound", tr.error_bound}};
    m = tr.model;
  }
  Kernel kernel(m, timing);
  const PaceConfig pace = make_pace(m, sigma);
  const CoupledFn f = build_coupled_fn(kernel, pace, jobs);
  if (!dump_f.empty()) write_out(dump_f, f.to_csv());

  if (discount) {
    DiscountedResult d = discounted_optimize(f, *discount, length_bound);
    json blocks = json::array();
    for (long id : d.prefix) blocks.push_back(f.decode(id));
    j["prefix_blocks"] = blocks;
    json cyc = json::array();
    for (long id : d.cycle) cyc.push_back(f.decode(id));
    j["cycle_blocks"] = cyc;
    j["discounted_value"] = d.value;
    j["rate"] = *discount;
  } else {
    OptResult r = greedy_cycle_search(f, jobs);
    j.update(opt_json(r, &f));
    const auto [fk, fv] = fixed_price_best(kernel);
    j["fixed_price_best"] = {{"price", fk}, {"value", fv}};
  }
  j["provenance"] = {{"model", model_path},
                     {"sigma", pace.sigma},
                     {"M", pace.M},
                     {"timing", to_string(timing)},
                     {"value_tolerance", 1e-9}};
  write_out(out, j.dump(2));
  return 0;
}

int run_simulate(const std::string& model_path, const std::string& policy_path,
                 const std::string& rule_s, long horizon, long burn_in, int reps,
                 std::uint64_t seed, const std::string& timing_s, int jobs,
                 const std::string& out) {
  MarketModel m = load_checked(model_path);
  std::ifstream pf(policy_path);
  if (!pf) throw std::runtime_error("cannot open policy file: " + policy_path);
  json pj = json::parse(pf);
  CyclicPolicy pol = policy_from_json(pj);

  SimConfig cfg;
  cfg.horizon = horizon;
  cfg.burn_in = burn_in;
  cfg.replications = reps;
  cfg.seed = seed;
  cfg.jobs = jobs;
  if (rule_s == "patient")
    cfg.rule = PurchaseRule::kPatient;
  else if (rule_s == "strategic-3")
    cfg.rule = PurchaseRule::kMyopicForecast;
  else if (rule_s == "strategic-4")
    cfg.rule = PurchaseRule::kExpectedMax;
  else
    throw std::invalid_argument("unknown rule: " + rule_s);

  const DecisionTiming timing = timing_from_string(timing_s);
  SimEstimate est = simulate(m, pol, cfg, timing);

  std::ostringstream os;
  os.precision(12);
  os << "policy,mean,std_error,horizon,replications,seed,rule,timing\n";
  for (size_t i = 0; i < pol.phases.size(); ++i)
    os << "(" << pol.phases[i].price << ":" << pol.phases[i].duration << ")";
  os << "," << est.mean << "," << est.std_error << "," << est.horizon << ","
     << est.replications << "," << seed << "," << rule_s << "," << to_string(timing) << "\n";
  write_out(out, os.str());
  return 0;
}

int run_reproduce(const std::string& what, int K, int n_draws, std::uint64_t seed,
                  std::optional<std::string> timing_s, int jobs, const std::string& out) {
  using namespace pricing::experiments;
  if (what == "table1") {
    auto cells = table1_grid(n_draws, seed, jobs);
    write_out(out, table1_csv(cells));
    return 0;
  }
  if (what == "table2") {
    const DecisionTiming timing =
        timing_s ? timing_from_string(*timing_s) : DecisionTiming::kPostTransition;
    auto rows = table2_run({1e-13, 1e-5, 1e-3, 1e-2, 1e-1, 0.2, 0.4}, table2_model(), 0.3,
                           timing, jobs);
    std::ostringstream os;
    os << "# nu_override=0.3,timing=" << to_string(timing) << ",seed=deterministic\n"
       << table2_csv(rows);
    write_out(out, os.str());
    return 0;
  }
  if (what == "example2") {
    auto rep = example2_verify_claim(K);
    json j;
    j["K"] = K;
    j["epsilon"] = rep.instance.eps;
    j["alpha"] = rep.instance.alpha;
    j["U"] = rep.instance.U;
    j["xi"] = rep.instance.xi;
    j["e0_max_err"] = rep.e0_err;
    j["e1_ok"] = rep.e1_ok;
    j["adjacency_max_err"] = rep.adjacency_err;
    j["gap_edge_err"] = rep.gap_err;
    j["offdiagonal_max"] = rep.offdiag_max;
    j["xi_in_range"] = rep.xi_in_range;
    j["brute_cycle"] = rep.brute_cycle;
    j["greedy_cycle"] = rep.greedy_cycle;
    j["value"] = rep.brute_value;
    j["claim_value"] = rep.claim_value;
    j["runner_up_gap"] = rep.runner_up_gap;
    j["provenance"] = {{"timing", "post"}};
    write_out(out, j.dump(2));
    return 0;
  }
  if (what == "finding5") {
    const DecisionTiming timing =
        timing_s ? timing_from_string(*timing_s) : DecisionTiming::kPostTransition;
    auto rep = finding5_run(timing, jobs);
    json j;
    j["instance1"] = {{"optimal_cycle", rep.opt1},
                      {"optimal_value", rep.opt1_value},
                      {"identity_chain_cycle", rep.opt1_id},
                      {"identity_policy_value_under_true_chain", rep.mis_value},
                      {"loss_pct", rep.loss_pct}};
    j["instance2"] = {{"optimal_cycle", rep.opt2},
                      {"optimal_value", rep.opt2_value},
                      {"fixed_lowest_value", rep.fixed1_value},
                      {"gain_pct", rep.gain_pct},
                      {"diagonal_grid_fixed_lowest_optimal", rep.diag_grid_fixed1},
                      {"diagonal_grid_counterexample", rep.diag_grid_counterexample}};
    j["provenance"] = {{"timing", to_string(timing)}};
    write_out(out, j.dump(2));
    return 0;
  }
  if (what == "finding6") {
    const DecisionTiming timing =
        timing_s ? timing_from_string(*timing_s) : DecisionTiming::kPreTransition;
    const MarketModel m = experiments::finding6_model();
    Kernel kernel(m, timing);
    OptResult opt = optimize(kernel, make_pace(m, 2), jobs);
    json j;
    j["cycle"] = [&] {
      json arr = json::array();
      for (const auto& p : opt.phases) arr.push_back(p.price);
      return arr;
    }();
    j["value"] = opt.value;
    j["phases"] = phases_json(opt.phases);
    j["R_fixed_1"] = kernel.long_run_average(CyclicPolicy{{Phase{1, 2}}});
    j["R_31"] = kernel.long_run_average(CyclicPolicy{{Phase{3, 2}, Phase{1, 2}}});
    j["R_431"] =
        kernel.long_run_average(CyclicPolicy{{Phase{4, 2}, Phase{3, 2}, Phase{1, 2}}});
    j["provenance"] = {{"timing", to_string(timing)}, {"sigma", 2}, {"M", 3}};
    write_out(out, j.dump(2));
    return 0;
  }
  if (what == "two-price") {
    MarketModel m;
    m.K = 2;
    m.v = {1.0, 1.7};
    m.gamma = {0.7, 0.3};
    m.Q = {0.6, 0.2, 0.1, 0.5};
    auto rep = two_price_analyze(m);
    json j;
    j["model"] = json::parse(model_to_json_text(m));
    j["B"] = rep.B;
    j["C"] = rep.C;
    j["classification"] = rep.cls == ResetClass::kImmediate ? "t*=0"
                          : rep.cls == ResetClass::kFinite  ? "0<t*<inf"
                                                            : "t*=inf";
    j["t_star"] = rep.t_star;
    j["R_at_t_star"] = rep.r_at_t_star;
    j["grid_t_star"] = rep.grid_t_star;
    j["kernel_rel_err"] = rep.kernel_rel_err;
    write_out(out, j.dump(2));
    return 0;
  }
  throw CLI::ValidationError("reproduce", "unknown reproduction: " + what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclic pricing policies for Markov-modulated customer valuations"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "worker threads (default: env PRICING_JOBS or all cores)");

  std::string model_path, out, timing_s = "post";
  int sigma = 1;
  std::optional<double> epsilon, nu_override, discount;
  int length_bound = -1;
  std::string dump_f;

  auto* opt_cmd = app.add_subcommand("optimize", "optimal cyclic policy at pace sigma");
  opt_cmd->add_option("--model", model_path, "model JSON file")->required();
  opt_cmd->add_option("--sigma", sigma, "pace: minimal phase duration")->required();
  opt_cmd->add_option("--epsilon", epsilon, "truncation accuracy for unbounded models");
  opt_cmd->add_option("--nu-override", nu_override, "exit-rate override for the truncation");
  opt_cmd->add_option("--timing", timing_s, "decision timing: post|pre");
  opt_cmd->add_option("--discounted", discount, "discount rate: pre-cyclic search instead");
  opt_cmd->add_option("--length-bound", length_bound, "pre-cyclic length bound");
  opt_cmd->add_option("--dump-f", dump_f, "write the coupled table CSV here");
  opt_cmd->add_option("--out", out, "output path (default stdout)");

  std::string policy_path, rule_s = "patient";
  long horizon = 100000, burn_in = -1;
  int replications = 20;
  std::uint64_t seed = 0;

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo policy evaluation");
  sim_cmd->add_option("--model", model_path, "model JSON file")->required();
  sim_cmd->add_option("--policy", policy_path, "policy JSON file")->required();
  sim_cmd->add_option("--rule", rule_s, "patient|strategic-3|strategic-4");
  sim_cmd->add_option("--horizon", horizon, "periods per replication");
  sim_cmd->add_option("--burn-in", burn_in, "warm-up periods (default 10 cycles / 10 tau)");
  sim_cmd->add_option("--replications", replications, "independent replications");
  sim_cmd->add_option("--seed", seed, "stream seed");
  sim_cmd->add_option("--timing", timing_s, "decision timing: post|pre");
  sim_cmd->add_option("--out", out, "output path (default stdout)");

  std::string what;
  int K = 5, n_draws = 500;
  std::uint64_t rep_seed = 20240901;
  std::optional<std::string> rep_timing;

  auto* rep_cmd = app.add_subcommand("reproduce", "rebuild the reference experiments");
  rep_cmd->add_option("what", what, "table1|table2|example2|finding5|finding6|two-price")
      ->required();
  rep_cmd->add_option("--K", K, "ladder size for example2");
  rep_cmd->add_option("--n-draws", n_draws, "draws per table1 cell");
  rep_cmd->add_option("--seed", rep_seed, "table1 seed");
  rep_cmd->add_option("--timing", rep_timing, "decision timing override");
  rep_cmd->add_option("--out", out, "output path (default stdout)");

  auto* dump_cmd = app.add_subcommand("dump-f", "write the coupled table as CSV");
  dump_cmd->add_option("--model", model_path, "model JSON file")->required();
  dump_cmd->add_option("--sigma", sigma, "pace: minimal phase duration")->required();
  dump_cmd->add_option("--timing", timing_s, "decision timing: post|pre");
  dump_cmd->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 64;
  }

  try {
    if (opt_cmd->parsed())
      return run_optimize(model_path, sigma, epsilon, nu_override, timing_s, jobs, discount,
                          length_bound, dump_f, out);
    if (sim_cmd->parsed())
      return run_simulate(model_path, policy_path, rule_s, horizon, burn_in, replications, seed,
                          timing_s, jobs, out);
    if (rep_cmd->parsed()) return run_reproduce(what, K, n_draws, rep_seed, rep_timing, jobs, out);
    if (dump_cmd->parsed()) {
      MarketModel m = load_checked(model_path);
      Kernel kernel(m, timing_from_string(timing_s));
      const CoupledFn f = build_coupled_fn(kernel, make_pace(m, sigma), jobs);
      write_out(out, f.to_csv());
      return 0;
    }
  } catch (const pricing::DeskScaleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}
