#include "pricing/market_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pricing {

namespace {
constexpr double kProbTol = 1e-9;
}

const char* to_string(DecisionTiming t) {
  return t == DecisionTiming::kPostTransition ? "post" : "pre";
}

DecisionTiming timing_from_string(const std::string& s) {
  if (s == "post" || s == "post-transition") return DecisionTiming::kPostTransition;
  if (s == "pre" || s == "pre-transition") return DecisionTiming::kPreTransition;
  throw std::invalid_argument("unknown decision timing: " + s);
}

int MarketModel::patience() const {
  if (!tau) throw std::logic_error("model has unbounded patience");
  return *tau;
}

double MarketModel::row_sum(int i) const {
  double s = 0.0;
  for (int j = 0; j < K; ++j) s += q(i, j);
  return s;
}

PaceConfig make_pace(const MarketModel& model, int sigma) {
  if (sigma < 1) throw std::invalid_argument("sigma must be >= 1");
  const int tau = model.patience();
  if (tau % sigma != 0) throw std::invalid_argument("tau not a multiple of sigma");
  return PaceConfig{sigma, tau / sigma};
}

std::string ValidationReport::summary() const {
  if (issues.empty()) return "ok";
  std::ostringstream os;
  for (size_t i = 0; i < issues.size(); ++i) {
    if (i) os << "; ";
    os << issues[i].what;
    if (issues[i].index >= 0) os << " (index " << issues[i].index + 1 << ")";
  }
  return os.str();
}

ValidationReport validate(const MarketModel& m) {
  ValidationReport r;
  auto fail = [&](std::string what, int idx = -1) {
    r.issues.push_back({std::move(what), idx});
  };

  if (m.K < 1) fail("K must be positive");
  if (static_cast<int>(m.v.size()) != m.K) fail("v has wrong length");
  if (static_cast<int>(m.gamma.size()) != m.K) fail("gamma has wrong length");
  if (m.Q.size() != static_cast<size_t>(m.K) * m.K) fail("Q has wrong shape");
  if (!r.ok()) return r;

  for (int i = 0; i < m.K; ++i) {
    if (!(m.v[i] > 0.0)) fail("valuation not positive", i);
    if (i > 0 && !(m.v[i] > m.v[i - 1])) fail("valuation ladder not strictly increasing", i);
  }
  double gsum = 0.0;
  for (int i = 0; i < m.K; ++i) {
    if (m.gamma[i] < -kProbTol) fail("gamma component negative", i);
    gsum += m.gamma[i];
  }
  if (std::abs(gsum - 1.0) > kProbTol) {
    std::ostringstream os;
    os << "gamma sums to " << gsum;
    fail(os.str());
  }
  for (int i = 0; i < m.K; ++i) {
    double rs = 0.0;
    for (int j = 0; j < m.K; ++j) {
      if (m.q(i, j) < -kProbTol) fail("transition probability negative", i);
      rs += m.q(i, j);
    }
    if (rs > 1.0 + kProbTol) fail("Q row sum exceeds 1 (substochasticity violated)", i);
  }
  if (!m.tau) {
    double gap = nu(m);
    if (!(gap > 0.0)) fail("unbounded patience requires nu > 0");
  } else if (*m.tau < 1) {
    fail("tau must be >= 1");
  }
  return r;
}

double nu(const MarketModel& m) {
  double worst = 0.0;
  for (int i = 0; i < m.K; ++i) worst = std::max(worst, m.row_sum(i));
  return 1.0 - worst;
}

int tau_epsilon(double epsilon, double nu_value) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0,1)");
  if (!(nu_value > 0.0 && nu_value <= 1.0)) throw std::domain_error("nu must lie in (0,1]");
  if (nu_value == 1.0) return 1;  // nobody survives a single transition
  const double t = std::abs(std::log(epsilon) / std::log1p(-nu_value));
  const int flo = static_cast<int>(std::floor(t));
  return std::max(1, flo);
}

Truncation truncate_to_bp(const MarketModel& m, double epsilon,
                          std::optional<double> nu_override) {
  if (m.bounded()) throw std::invalid_argument("already bounded");
  const double gap = nu_override.value_or(nu(m));
  if (!(gap > 0.0)) throw std::domain_error("no finite truncation: nu = 0");
  Truncation t;
  t.model = m;
  t.model.tau = tau_epsilon(epsilon, gap);
  t.error_bound = m.v.back() * epsilon / gap;
  return t;
}

MarketModel model_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MarketModel m;
  m.K = j.at("K").get<int>();
  m.v = j.at("v").get<std::vector<double>>();
  m.gamma = j.at("gamma").get<std::vector<double>>();
  m.Q.reserve(static_cast<size_t>(m.K) * m.K);
  for (const auto& row : j.at("Q")) {
    auto r = row.get<std::vector<double>>();
    m.Q.insert(m.Q.end(), r.begin(), r.end());
  }
  if (j.contains("tau") && !j["tau"].is_null()) m.tau = j["tau"].get<int>();
  return m;
}

MarketModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

std::string model_to_json_text(const MarketModel& m) {
  nlohmann::json j;
  j["K"] = m.K;
  j["v"] = m.v;
  j["gamma"] = m.gamma;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.K; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.K; ++c) row.push_back(m.q(i, c));
    rows.push_back(row);
  }
  j["Q"] = rows;
  if (m.tau)
    j["tau"] = *m.tau;
  else
    j["tau"] = nullptr;
  return j.dump(2);
}

}  // namespace pricing
