#include "pricing/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pricing/parallel.hpp"

namespace pricing {

namespace {

std::vector<long> canonical_rotation(const std::vector<long>& cyc) {
  std::vector<long> best = cyc;
  std::vector<long> rot = cyc;
  for (size_t r = 1; r < cyc.size(); ++r) {
    std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    if (rot < best) best = rot;
  }
  return best;
}

std::vector<int> minimal_cycle(const std::vector<int>& seq) {
  const size_t L = seq.size();
  for (size_t p = 1; p <= L; ++p) {
    if (L % p != 0) continue;
    bool ok = true;
    for (size_t i = 0; i + p < L && ok; ++i) ok = seq[i] == seq[i + p];
    if (ok) return std::vector<int>(seq.begin(), seq.begin() + p);
  }
  return seq;
}

bool is_m_simple(const std::vector<int>& phase_cycle, int M) {
  const size_t L = phase_cycle.size();
  std::vector<std::vector<int>> windows;
  windows.reserve(L);
  for (size_t j = 0; j < L; ++j) {
    std::vector<int> w(M);
    for (int i = 0; i < M; ++i) w[i] = phase_cycle[(j + i) % L];
    windows.push_back(std::move(w));
  }
  std::sort(windows.begin(), windows.end());
  return std::adjacent_find(windows.begin(), windows.end()) == windows.end();
}

bool is_monotone_decreasing_cycle(const std::vector<int>& phase_cycle) {
  size_t ascents = 0;
  const size_t L = phase_cycle.size();
  for (size_t j = 0; j < L; ++j)
    if (phase_cycle[(j + 1) % L] > phase_cycle[j]) ++ascents;
  return ascents <= 1;
}

// Minimal sigma-phase cycle of a block cycle, merged into (price, duration)
// phases; rotated to start at a price change when one exists.
std::vector<Phase> merged_phases(const CoupledFn& f, const std::vector<long>& cycle,
                                 std::vector<int>* minimal_out) {
  std::vector<int> seq;
  for (long id : cycle)
    for (int p : f.decode(id)) seq.push_back(p);
  std::vector<int> mini = minimal_cycle(seq);
  size_t start = 0;
  for (size_t j = 0; j < mini.size(); ++j)
    if (mini[j] != mini[(j + mini.size() - 1) % mini.size()]) {
      start = j;
      break;
    }
  std::rotate(mini.begin(), mini.begin() + start, mini.end());
  if (minimal_out) *minimal_out = mini;
  std::vector<Phase> phases;
  for (int p : mini) {
    if (!phases.empty() && phases.back().price == p)
      phases.back().duration += f.sigma();
    else
      phases.push_back(Phase{p, f.sigma()});
  }
  return phases;
}

OptResult assemble(const CoupledFn& f, std::vector<long> cycle, double phi_value) {
  OptResult r;
  r.cycle = canonical_rotation(cycle);
  std::vector<int> mini;
  r.phases = merged_phases(f, r.cycle, &mini);
  r.value = phi_value / f.tau();
  r.is_fixed_price = std::all_of(mini.begin(), mini.end(), [&](int p) { return p == mini[0]; });
  r.diag.cycle_blocks = static_cast<int>(r.cycle.size());
  r.diag.monotone_decreasing = is_monotone_decreasing_cycle(mini);
  return r;
}

struct CycleCandidate {
  double phi = -std::numeric_limits<double>::infinity();
  std::vector<long> cycle;

  // larger phi wins; ties keep the lexicographically smaller canonical cycle
  void offer(double phi_value, const std::vector<long>& cyc) {
    if (phi_value > phi) {
      phi = phi_value;
      cycle = canonical_rotation(cyc);
    } else if (phi_value == phi && !cyc.empty()) {
      auto canon = canonical_rotation(cyc);
      if (cycle.empty() || canon < cycle) cycle = std::move(canon);
    }
  }
  void merge(const CycleCandidate& other) {
    if (other.cycle.empty()) return;
    offer(other.phi, other.cycle);
  }
};

bool msimple_block_cycle(const CoupledFn& f, const std::vector<long>& cyc) {
  std::vector<int> seq;
  for (long id : cyc)
    for (int p : f.decode(id)) seq.push_back(p);
  return is_m_simple(minimal_cycle(seq), f.M());
}

}  // namespace

OptResult greedy_cycle_search(const CoupledFn& f, int jobs) {
  const long n = f.blocks();
  std::vector<double> bestvia(static_cast<size_t>(n) * n,
                              -std::numeric_limits<double>::infinity());
  parallel_for(n, jobs, [&](long a) {
    for (long c = 0; c < n; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (long b = 0; b < n; ++b) best = std::max(best, f.at(a, b) + f.at(b, c));
      bestvia[static_cast<size_t>(a) * n + c] = best;
    }
  });

  struct SeedOutcome {
    CycleCandidate best;
    long strings = 0;
    long rejected = 0;
  };
  std::vector<SeedOutcome> outcomes(static_cast<size_t>(n) * n);

  parallel_for(n * n, jobs, [&](long seed) {
    const long w1 = seed / n, w2 = seed % n;
    if (w1 == w2) return;
    SeedOutcome& out = outcomes[seed];

    struct Str {
      std::vector<long> seq;
      double path;
    };
    std::vector<Str> cur;
    cur.push_back({{w1, w2}, f.at(w1, w2)});

    std::vector<Str> pool;
    std::vector<long> slot(n, -1);
    for (long len = 2; len <= n && !cur.empty(); ++len) {
      pool.clear();
      std::fill(slot.begin(), slot.end(), -1);
      for (const Str& s : cur) {
        const long x = s.seq[s.seq.size() - 2];
        const long y = s.seq.back();
        const double fxy = f.at(x, y);
        for (long c = 0; c < n; ++c) {
          if (fxy + f.at(y, c) != bestvia[static_cast<size_t>(x) * n + c]) continue;
          if (c == w1) {
            const double phi_c = (s.path + f.at(y, w1)) / static_cast<double>(s.seq.size());
            if (msimple_block_cycle(f, s.seq))
              out.best.offer(phi_c, s.seq);
            else
              ++out.rejected;
            continue;
          }
          if (len == n) continue;  // strings cannot grow past the alphabet
          if (std::find(s.seq.begin(), s.seq.end(), c) != s.seq.end()) continue;
          const double path2 = s.path + f.at(y, c);
          if (slot[c] < 0) {
            slot[c] = static_cast<long>(pool.size());
            Str ext{s.seq, path2};
            ext.seq.push_back(c);
            pool.push_back(std::move(ext));
          } else {
            Str& held = pool[slot[c]];
            bool replace = path2 > held.path;
            if (path2 == held.path) {
              std::vector<long> ext = s.seq;
              ext.push_back(c);
              replace = ext > held.seq;  // eliminate the smaller string
            }
            if (replace) {
              held.seq = s.seq;
              held.seq.push_back(c);
              held.path = path2;
            }
          }
        }
      }
      cur.swap(pool);
      out.strings += static_cast<long>(cur.size());
    }
  });

  CycleCandidate best;
  for (long w = 0; w < n; ++w) best.offer(f.at(w, w), {w});  // single-block strategies
  OptDiagnostics diag;
  diag.seed_pairs = n * (n - 1);
  for (const auto& o : outcomes) {
    best.merge(o.best);
    diag.strings_visited += o.strings;
    diag.closures_rejected += o.rejected;
  }
  OptResult r = assemble(f, best.cycle, best.phi);
  r.diag.seed_pairs = diag.seed_pairs;
  r.diag.strings_visited = diag.strings_visited;
  r.diag.closures_rejected = diag.closures_rejected;
  return r;
}

OptResult brute_force_cycle_search(const CoupledFn& f, int max_len) {
  const long n = f.blocks();
  if (max_len < 0 || max_len > n) max_len = static_cast<int>(n);

  double work = 0.0;
  for (int L = 1; L <= max_len; ++L) {
    double c = 1.0;
    for (int i = 0; i < L; ++i) c *= static_cast<double>(n - i);
    work += c / L;
  }
  if (work > 2e7) throw DeskScaleError("instance too large for exhaustive enumeration");

  CycleCandidate best;
  std::vector<long> cyc;
  std::vector<char> used(n, 0);
  // canonical simple cycles: smallest block first, permute the rest
  auto dfs = [&](auto&& self, long first, double path) -> void {
    const long last = cyc.back();
    best.offer((path + f.at(last, first)) / static_cast<double>(cyc.size()), cyc);
    if (static_cast<int>(cyc.size()) == max_len) return;
    for (long c = first + 1; c < n; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cyc.push_back(c);
      self(self, first, path + f.at(last, c));
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
  return assemble(f, best.cycle, best.phi);
}

double karp_max_mean_cycle(const CoupledFn& f) {
  const long n = f.blocks();
  std::vector<double> prev(n, 0.0), cur(n);
  std::vector<std::vector<double>> walks;
  walks.reserve(n + 1);
  walks.push_back(prev);
  for (long k = 1; k <= n; ++k) {
    for (long v = 0; v < n; ++v) {
      double best = -std::numeric_limits<double>::infinity();
      for (long u = 0; u < n; ++u) best = std::max(best, prev[u] + f.at(u, v));
      cur[v] = best;
    }
    walks.push_back(cur);
    prev.swap(cur);
  }
  double mu = -std::numeric_limits<double>::infinity();
  for (long v = 0; v < n; ++v) {
    double inner = std::numeric_limits<double>::infinity();
    for (long k = 0; k < n; ++k)
      inner = std::min(inner, (walks[n][v] - walks[k][v]) / static_cast<double>(n - k));
    mu = std::max(mu, inner);
  }
  return mu;
}

OptResult optimize(const Kernel& kernel, const PaceConfig& pace, int jobs) {
  const CoupledFn f = build_coupled_fn(kernel, pace, jobs);
  return greedy_cycle_search(f, jobs);
}

std::pair<int, double> fixed_price_best(const Kernel& kernel) {
  int best_k = 1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kernel.model().K; ++k) {
    const double v = kernel.fixed_price_value(k);
    if (v > best_v) {
      best_v = v;
      best_k = k;
    }
  }
  return {best_k, best_v};
}

OptResult k_cyclic_best(const Kernel& kernel, int sigma, int n_prices) {
  if (n_prices != 2 && n_prices != 3) throw std::invalid_argument("k-cyclic requires k in {2,3}");
  const int K = kernel.model().K;
  if (K < n_prices) throw std::invalid_argument("not enough price levels");

  double best_v = -std::numeric_limits<double>::infinity();
  std::vector<int> best_cycle;
  auto consider = [&](const std::vector<int>& cycle) {
    CyclicPolicy pol;
    for (int k : cycle) pol.phases.push_back(Phase{k, sigma});
    const double v = kernel.long_run_average(pol);
    if (v > best_v || (v == best_v && cycle < best_cycle)) {
      best_v = v;
      best_cycle = cycle;
    }
  };
  if (n_prices == 2) {
    for (int a = 1; a <= K; ++a)
      for (int b = a + 1; b <= K; ++b) consider({a, b});
  } else {
    for (int a = 1; a <= K; ++a)
      for (int b = a + 1; b <= K; ++b)
        for (int c = a + 1; c <= K; ++c) {
          if (c == b) continue;
          consider({a, b, c});
        }
  }
  OptResult r;
  for (int k : best_cycle) r.phases.push_back(Phase{k, sigma});
  r.value = best_v;
  r.is_fixed_price = false;
  r.diag.cycle_blocks = n_prices;
  std::vector<int> cyc = best_cycle;
  r.diag.monotone_decreasing = is_monotone_decreasing_cycle(cyc);
  return r;
}

std::optional<long> sigma0_certificate(const Kernel& kernel,
                                       const std::vector<std::vector<int>>& candidates) {
  const int K = kernel.model().K;
  const int tau = kernel.tau();
  std::vector<AffineParams> ap;
  ap.reserve(K);
  for (int k = 1; k <= K; ++k) ap.push_back(kernel.affine_params(k));

  int star = 0;
  for (int k = 1; k < K; ++k)
    if (ap[k].B > ap[star].B) star = k;
  for (int k = 0; k < K; ++k)
    if (k != star && ap[k].B == ap[star].B) return std::nullopt;  // not strict
  const double Bstar = ap[star].B;

  std::vector<std::vector<int>> cycles = candidates;
  if (cycles.empty()) {
    // every simple price cycle other than the fixed best price alone
    std::vector<int> cyc;
    std::vector<char> used(K + 1, 0);
    auto dfs = [&](auto&& self, int first) -> void {
      if (!(cyc.size() == 1 && cyc[0] == star + 1)) cycles.push_back(cyc);
      for (int c = first + 1; c <= K; ++c) {
        if (used[c]) continue;
        used[c] = 1;
        cyc.push_back(c);
        self(self, first);
        cyc.pop_back();
        used[c] = 0;
      }
    };
    for (int first = 1; first <= K; ++first) {
      std::fill(used.begin(), used.end(), 0);
      used[first] = 1;
      cyc.assign(1, first);
      dfs(dfs, first);
    }
  }

  auto tdot = [&](int tail_k, int head_k) {
    const auto& c = ap[head_k - 1].C;
    const auto& tb = ap[tail_k - 1].theta_bar;
    double s = 0.0;
    for (int m = 0; m < K; ++m) s += c[m] * tb[m];
    return s;
  };

  long sigma0 = tau;
  for (const auto& cycle : cycles) {
    if (cycle.empty()) continue;
    const long nlen = static_cast<long>(cycle.size());
    double sumA = 0.0, sumB = 0.0, sumT = 0.0;
    for (long i = 0; i < nlen; ++i) {
      sumA += ap[cycle[i] - 1].A;
      sumB += ap[cycle[i] - 1].B;
      sumT += tdot(cycle[i], cycle[(i + 1) % nlen]);
    }
    const double denom = static_cast<double>(nlen) * Bstar - sumB;
    if (!(denom > 0.0)) continue;  // cycle cannot stay competitive as sigma grows
    const double bound = (sumA + sumT - Bstar * tau - tau * sumB) / denom;
    const long need = static_cast<long>(std::floor(bound)) + 1;
    sigma0 = std::max(sigma0, need);
  }
  return sigma0;
}

DiscountedResult discounted_optimize(const CoupledFn& f, double r, int length_bound) {
  if (!(r > 0.0)) throw std::invalid_argument("discount rate must be positive");
  const long n = f.blocks();
  if (length_bound < 1 || length_bound > n) length_bound = static_cast<int>(n);

  double work = 0.0;
  {
    double c = 1.0;
    for (int L = 1; L <= length_bound; ++L) {
      c *= static_cast<double>(n - L + 1);
      work += c * L;
    }
  }
  if (work > 2e7) throw DeskScaleError("instance too large for exhaustive enumeration");

  const double disc = std::exp(-r);
  DiscountedResult best;
  best.value = -std::numeric_limits<double>::infinity();

  std::vector<long> seq;
  std::vector<char> used(n, 0);
  auto evaluate = [&]() {
    const int L = static_cast<int>(seq.size());
    for (int p0 = 0; p0 < L; ++p0) {
      const int p1 = L - p0;
      double tail = 0.0, wc = 1.0;
      for (int i = 0; i < p1; ++i) {
        tail += wc * f.at(seq[p0 + i], seq[p0 + (i + 1) % p1]);
        wc *= disc;
      }
      double prefix = 0.0;
      double wp = 1.0;
      for (int i = 0; i < p0; ++i) {
        prefix += wp * f.at(seq[i], seq[i + 1]);
        wp *= disc;
      }
      const double total = prefix + std::pow(disc, p0) * tail / (1.0 - std::pow(disc, p1));
      if (total > best.value) {
        best.value = total;
        best.prefix.assign(seq.begin(), seq.begin() + p0);
        best.cycle.assign(seq.begin() + p0, seq.end());
      }
    }
  };
  auto dfs = [&](auto&& self) -> void {
    evaluate();
    if (static_cast<int>(seq.size()) == length_bound) return;
    for (long c = 0; c < n; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      seq.push_back(c);
      self(self);
      seq.pop_back();
      used[c] = 0;
    }
  };
  for (long first = 0; first < n; ++first) {
    std::fill(used.begin(), used.end(), 0);
    used[first] = 1;
    seq.assign(1, first);
    dfs(dfs);
  }
  return best;
}

}  // namespace pricing
