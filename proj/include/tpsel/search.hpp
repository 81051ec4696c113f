#ifndef TPSEL_SEARCH_HPP
#define TPSEL_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tpsel/evidence.hpp"

// Posterior exploration over variable configurations and error families:
// exhaustive enumeration, Gibbs sampling over the model space, and summaries
// (renormalized model probabilities, marginal inclusion probabilities, error
// family probabilities, BMA coefficients).

namespace tpsel {

struct VisitedModel {
  ModelGamma gamma;
  double log_joint = 0.0;     // log p(y|gamma) + log p(gamma)
  double log_evidence = 0.0;  // log p(y|gamma)
  long visits = 0;            // chain visit count after burn-in (Gibbs only)
  TransformedParams mode;     // posterior mode (Laplace center)
};

struct SelectionResult {
  std::vector<VisitedModel> visited;  // sorted by posterior probability
  std::vector<double> post_probs;    // renormalized over visited, same order
  VectorXd inclusion_probs;          // length p
  Eigen::Vector4d family_probs;      // Normal, TP-Normal, Laplace, TP-Laplace
  VectorXd bma_theta;                // length p (posterior-mode surrogate)
};

struct SearchConfig {
  bool infer_family = false;
  bool skew = false;   // family flags when infer_family is false
  bool thick = false;
  std::vector<Eigen::Index> forced;  // always-included columns
  EvidenceOptions evidence;
  // Importance sampling instead of plain Laplace evidence (B > 0 enables).
  long importance_B = 0;
  unsigned long long importance_seed = 12345;
};

namespace detail {

inline int family_index(const ModelGamma& g) {
  return (g.thick ? 2 : 0) + (g.skew ? 1 : 0);
}

// Evidence evaluator with memoization.  Models whose selected design is
// unusable (rank-deficient, e.g. degenerate rows) or whose optimizer fails
// get -inf joint probability and are skipped rather than aborting the search.
class ModelEvaluator {
 public:
  ModelEvaluator(const Dataset& data, const PriorSpec& spec,
                 const SearchConfig& cfg)
      : data_(data), spec_(spec), cfg_(cfg), rng_(cfg.importance_seed) {}

  double log_joint(const ModelGamma& g) {
    const std::string key = EvidenceCache::key(g, spec_.fixed_alpha);
    ModelEvidence ev;
    if (!cache_.lookup(key, ev)) {
      try {
        if (cfg_.importance_B > 0)
          ev = importance_evidence(data_, g, spec_, cfg_.importance_B, rng_,
                                   cfg_.evidence);
        else
          ev = laplace_evidence(data_, g, spec_, cfg_.evidence);
      } catch (const DataError&) {
        ev = failed(g);
      } catch (const NumericalError&) {
        ev = failed(g);
      }
      cache_.insert(key, ev);
    }
    if (!std::isfinite(ev.log_marginal))
      return -std::numeric_limits<double>::infinity();
    return ev.log_marginal +
           model_logprior(g, data_.p(), data_.n(), spec_, !cfg_.infer_family);
  }

  bool get(const ModelGamma& g, ModelEvidence& out) const {
    return cache_.lookup(EvidenceCache::key(g, spec_.fixed_alpha), out);
  }

  // All finite-evidence models evaluated so far, as VisitedModel records.
  std::vector<VisitedModel> evaluated(const std::vector<ModelGamma>& keys) {
    std::vector<VisitedModel> out;
    for (const auto& g : keys) {
      ModelEvidence ev;
      if (!get(g, ev) || !std::isfinite(ev.log_marginal)) continue;
      VisitedModel vm;
      vm.gamma = g;
      vm.log_evidence = ev.log_marginal;
      vm.log_joint = ev.log_marginal + model_logprior(g, data_.p(), data_.n(),
                                                      spec_, !cfg_.infer_family);
      vm.mode = ev.mode;
      out.push_back(std::move(vm));
    }
    return out;
  }

 private:
  static ModelEvidence failed(const ModelGamma& g) {
    ModelEvidence ev;
    ev.gamma = g;
    ev.log_marginal = -std::numeric_limits<double>::infinity();
    return ev;
  }

  const Dataset& data_;
  const PriorSpec& spec_;
  const SearchConfig& cfg_;
  std::mt19937_64 rng_;
  EvidenceCache cache_;
};

}  // namespace detail

// Build summaries from a set of evaluated models: renormalized posterior
// probabilities, marginal inclusion probabilities, error-family
// probabilities, and BMA coefficients using each model's posterior mode as
// the within-model estimator.
inline SelectionResult summarize(std::vector<VisitedModel> visited,
                                 Eigen::Index p) {
  if (visited.empty()) throw std::invalid_argument("summarize: nothing visited");
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& v : visited) mx = std::max(mx, v.log_joint);
  double total = 0.0;
  std::vector<double> w(visited.size());
  for (std::size_t i = 0; i < visited.size(); ++i) {
    w[i] = std::exp(visited[i].log_joint - mx);
    total += w[i];
  }
  SelectionResult res;
  res.inclusion_probs = VectorXd::Zero(p);
  res.bma_theta = VectorXd::Zero(p);
  res.family_probs.setZero();
  for (std::size_t i = 0; i < visited.size(); ++i) {
    const double prob = w[i] / total;
    const auto& g = visited[i].gamma;
    res.family_probs(detail::family_index(g)) += prob;
    const auto idx = g.active();
    for (std::size_t j = 0; j < idx.size(); ++j) {
      res.inclusion_probs(idx[j]) += prob;
      if (visited[i].mode.theta.size() == (Eigen::Index)idx.size())
        res.bma_theta(idx[j]) += prob * visited[i].mode.theta((Eigen::Index)j);
    }
  }
  std::vector<std::size_t> order(visited.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  res.visited.reserve(visited.size());
  res.post_probs.reserve(visited.size());
  for (std::size_t i : order) {
    res.visited.push_back(visited[i]);
    res.post_probs.push_back(w[i] / total);
  }
  return res;
}

// Exact posterior over all admissible models by exhaustive enumeration.
inline SelectionResult enumerate_models(const Dataset& data, const PriorSpec& spec,
                                        const SearchConfig& cfg = {}) {
  const Eigen::Index p = data.p();
  if (p + 2 > 20) throw DataError("enumerate_models: p + 2 must be <= 20");
  std::vector<Eigen::Index> sel;
  std::vector<bool> base(p, false);
  for (Eigen::Index j : cfg.forced) base[(std::size_t)j] = true;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!base[(std::size_t)j]) sel.push_back(j);

  detail::ModelEvaluator eval(data, spec, cfg);
  std::vector<ModelGamma> keys;
  const std::size_t m = sel.size();
  for (std::size_t bits = 0; bits < (1ull << m); ++bits) {
    ModelGamma g;
    g.include = base;
    for (std::size_t j = 0; j < m; ++j)
      if (bits & (1ull << j)) g.include[(std::size_t)sel[j]] = true;
    const int nfam = cfg.infer_family ? 4 : 1;
    for (int f = 0; f < nfam; ++f) {
      if (cfg.infer_family) {
        g.skew = (f & 1) != 0;
        g.thick = (f & 2) != 0;
      } else {
        g.skew = cfg.skew;
        g.thick = cfg.thick;
      }
      if (model_logprior(g, p, data.n(), spec, !cfg.infer_family) ==
          -std::numeric_limits<double>::infinity())
        continue;
      eval.log_joint(g);
      keys.push_back(g);
    }
  }
  return summarize(eval.evaluated(keys), p);
}

// Gibbs sampler over the model space: greedy forward-backward initialization
// from the null model, then T sweeps of per-coordinate inclusion flips with
// the exact conditional ratio, plus a joint error-family update when the
// family is inferred.  Summaries renormalize evidence over all models
// evaluated along the way; chain visit counts (after a 10% burn-in) are kept
// for diagnostics.
inline SelectionResult gibbs_search(const Dataset& data, const PriorSpec& spec,
                                    long T, std::mt19937_64& rng,
                                    const SearchConfig& cfg = {}) {
  if (T < 1) throw std::invalid_argument("gibbs_search: T >= 1 required");
  const Eigen::Index p = data.p();
  std::vector<Eigen::Index> sel;
  std::vector<bool> base(p, false);
  for (Eigen::Index j : cfg.forced) base[(std::size_t)j] = true;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!base[(std::size_t)j]) sel.push_back(j);

  detail::ModelEvaluator eval(data, spec, cfg);
  std::vector<ModelGamma> keys;
  auto remember = [&](const ModelGamma& g) { keys.push_back(g); };

  ModelGamma cur;
  cur.include = base;
  cur.skew = cfg.infer_family ? false : cfg.skew;
  cur.thick = cfg.infer_family ? false : cfg.thick;
  double cur_lp = eval.log_joint(cur);
  remember(cur);

  // Greedy forward-backward initialization.
  bool improved = true;
  while (improved) {
    improved = false;
    for (Eigen::Index j : sel) {
      ModelGamma cand = cur;
      cand.include[(std::size_t)j] = !cand.include[(std::size_t)j];
      const double lp = eval.log_joint(cand);
      remember(cand);
      if (lp > cur_lp) {
        cur = cand;
        cur_lp = lp;
        improved = true;
      }
    }
  }

  // Saturating forward pass: keep adding the best available variable even
  // through shallow dips (the strict pass above stops at the first
  // single-flip local optimum, which can hide better models behind small
  // barriers), remembering the best model seen.  Then refine from that model
  // with another strict forward-backward pass.
  {
    ModelGamma best = cur;
    double best_lp = cur_lp;
    ModelGamma walk = cur;
    for (std::size_t step = 0; step < sel.size(); ++step) {
      Eigen::Index arg = -1;
      double arg_lp = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j : sel) {
        if (walk.include[(std::size_t)j]) continue;
        ModelGamma cand = walk;
        cand.include[(std::size_t)j] = true;
        const double lp = eval.log_joint(cand);
        remember(cand);
        if (lp > arg_lp) {
          arg_lp = lp;
          arg = j;
        }
      }
      if (arg < 0 || !std::isfinite(arg_lp)) break;
      walk.include[(std::size_t)arg] = true;
      if (arg_lp > best_lp) {
        best_lp = arg_lp;
        best = walk;
      }
    }
    // Backward elimination from the saturated end of the walk, again
    // tracking the best model seen: the forward path can overshoot a peak
    // that sits just below the feasibility (rank) limit.
    for (std::size_t step = 0; step < sel.size(); ++step) {
      Eigen::Index arg = -1;
      double arg_lp = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j : sel) {
        if (!walk.include[(std::size_t)j]) continue;
        ModelGamma cand = walk;
        cand.include[(std::size_t)j] = false;
        const double lp = eval.log_joint(cand);
        remember(cand);
        if (lp > arg_lp) {
          arg_lp = lp;
          arg = j;
        }
      }
      if (arg < 0) break;
      walk.include[(std::size_t)arg] = false;
      if (arg_lp > best_lp) {
        best_lp = arg_lp;
        best = walk;
      }
    }
    cur = best;
    cur_lp = best_lp;
    improved = true;
    while (improved) {
      improved = false;
      for (Eigen::Index j : sel) {
        ModelGamma cand = cur;
        cand.include[(std::size_t)j] = !cand.include[(std::size_t)j];
        const double lp = eval.log_joint(cand);
        remember(cand);
        if (lp > cur_lp) {
          cur = cand;
          cur_lp = lp;
          improved = true;
        }
      }
    }
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::unordered_map<std::string, long> visits;
  const long burnin = T / 10;
  for (long t = 1; t <= T; ++t) {
    for (Eigen::Index j : sel) {
      ModelGamma g1 = cur, g0 = cur;
      g1.include[(std::size_t)j] = true;
      g0.include[(std::size_t)j] = false;
      const double l1 = eval.log_joint(g1);
      const double l0 = eval.log_joint(g0);
      remember(g1);
      remember(g0);
      double p1;
      if (l1 == -std::numeric_limits<double>::infinity()) p1 = 0.0;
      else if (l0 == -std::numeric_limits<double>::infinity()) p1 = 1.0;
      else p1 = 1.0 / (1.0 + std::exp(l0 - l1));
      const bool on = unif(rng) < p1;
      cur = on ? g1 : g0;
      cur_lp = on ? l1 : l0;
    }
    if (cfg.infer_family) {
      double lp[4];
      ModelGamma cand[4];
      double mx = -std::numeric_limits<double>::infinity();
      for (int f = 0; f < 4; ++f) {
        cand[f] = cur;
        cand[f].skew = (f & 1) != 0;
        cand[f].thick = (f & 2) != 0;
        lp[f] = eval.log_joint(cand[f]);
        remember(cand[f]);
        mx = std::max(mx, lp[f]);
      }
      double tot = 0.0, c[4];
      for (int f = 0; f < 4; ++f) {
        c[f] = std::isfinite(lp[f]) ? std::exp(lp[f] - mx) : 0.0;
        tot += c[f];
      }
      double u = unif(rng) * tot;
      int pick = 0;
      for (int f = 0; f < 4; ++f) {
        if (u <= c[f]) { pick = f; break; }
        u -= c[f];
        pick = f;
      }
      cur = cand[pick];
      cur_lp = lp[pick];
    }
    if (t > burnin) visits[EvidenceCache::key(cur, spec.fixed_alpha)] += 1;
  }

  // De-duplicate evaluated keys preserving first occurrence.
  std::vector<ModelGamma> uniq;
  {
    std::unordered_map<std::string, bool> seen;
    for (const auto& g : keys) {
      const std::string k = EvidenceCache::key(g, spec.fixed_alpha);
      if (!seen[k]) {
        seen[k] = true;
        uniq.push_back(g);
      }
    }
  }
  std::vector<VisitedModel> vm = eval.evaluated(uniq);
  for (auto& v : vm) {
    auto it = visits.find(EvidenceCache::key(v.gamma, spec.fixed_alpha));
    if (it != visits.end()) v.visits = it->second;
  }
  return summarize(std::move(vm), p);
}

}  // namespace tpsel

#endif  // TPSEL_SEARCH_HPP
