#include "miaudit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace miaudit {

void SamplerConfig::validate() const {
  if (prior <= 0.0 || prior >= 1.0) {
    // model-independent bits at rate 0 or 1 are legal corner cases
    if (prior < 0.0 || prior > 1.0) throw std::invalid_argument("sampler: prior must lie in [0,1]");
  }
  if (num_samples < 1) throw std::invalid_argument("sampler: need at least one sample");
  if (flip_fraction < 0.0 || flip_fraction > 1.0)
    throw std::invalid_argument("sampler: flip fraction must lie in [0,1]");
  if (burn_in < 0 || thinning < 1) throw std::invalid_argument("sampler: bad chain parameters");
}

MembershipMask sample_model_independent(const SamplerConfig& cfg, int n, int target, Rng& rng) {
  cfg.validate();
  if (target < 0 || target >= n) throw std::invalid_argument("sampler: target out of range");
  MembershipMask m(n, 0);
  for (int v = 0; v < n; ++v) {
    if (v == target) continue;
    m.set(v, rng.next_bernoulli(cfg.prior));
  }
  return m;
}

namespace {

// Loss-sum machinery shared by the public log-target, the chain, and the
// exact enumeration, so all three agree bit for bit. Holds one evaluator
// per model; X*W0 rows are cached across configurations.
class ConfigurationScorer {
 public:
  ConfigurationScorer(const ModelParams& model, const ShadowPool& pool, const Graph& g)
      : g_(g), model_eval_(model, g.features) {
    if (pool.num_models() == 0) throw std::invalid_argument("mcmc: empty shadow pool");
    shadow_evals_.reserve(static_cast<size_t>(pool.num_models()));
    for (const ModelParams& m : pool.models) shadow_evals_.emplace_back(m, g.features);
  }

  double log_target(const MembershipMask& others) {
    MaskedAdjacency adj = masked_adjacency(g_, others);
    PropagationMatrix prop(adj);
    std::vector<int> members;
    for (int v = 0; v < g_.n; ++v)
      if (others.test(v)) members.push_back(v);

    double target_sum = loss_sum(model_eval_, prop, members);
    std::vector<double> neg_sums(shadow_evals_.size());
    for (size_t k = 0; k < shadow_evals_.size(); ++k)
      neg_sums[k] = -loss_sum(shadow_evals_[k], prop, members);
    return -target_sum -
           (logsumexp(neg_sums) - std::log(static_cast<double>(shadow_evals_.size())));
  }

 private:
  double loss_sum(NodeLossEvaluator& eval, const PropagationMatrix& prop,
                  std::span<const int> members) {
    double s = 0.0;
    for (int v : members) s += eval.loss(&prop, v, g_.labels[static_cast<size_t>(v)]);
    return s;
  }

  const Graph& g_;
  NodeLossEvaluator model_eval_;
  std::vector<NodeLossEvaluator> shadow_evals_;
};

void check_others_mask(const MembershipMask& others, int target, int n) {
  if (others.size() != n) throw std::invalid_argument("mcmc: mask length mismatch");
  if (target < 0 || target >= n) throw std::invalid_argument("mcmc: target out of range");
  if (others.test(target)) throw std::invalid_argument("mcmc: target bit must be clear");
}

}  // namespace

double mcmc_log_target(const MembershipMask& others, int target, const ModelParams& model,
                       const ShadowPool& pool, const Graph& g) {
  check_others_mask(others, target, g.n);
  ConfigurationScorer scorer(model, pool, g);
  return scorer.log_target(others);
}

uint64_t mask_code(const MembershipMask& others, int target) {
  int n = others.size();
  if (n - 1 > 64) throw std::invalid_argument("mask_code: too many nodes");
  uint64_t code = 0;
  int j = 0;
  for (int v = 0; v < n; ++v) {
    if (v == target) continue;
    if (others.test(v)) code |= (uint64_t{1} << j);
    ++j;
  }
  return code;
}

MembershipMask mask_from_code(uint64_t code, int n, int target) {
  MembershipMask m(n, 0);
  int j = 0;
  for (int v = 0; v < n; ++v) {
    if (v == target) continue;
    m.set(v, (code >> j) & 1);
    ++j;
  }
  return m;
}

std::vector<MembershipMask> sample_mcmc(const SamplerConfig& cfg, int target,
                                        const ModelParams& model, const ShadowPool& pool,
                                        const Graph& g, Rng& rng) {
  cfg.validate();
  if (target < 0 || target >= g.n) throw std::invalid_argument("mcmc: target out of range");
  int n = g.n;
  int free_bits = n - 1;
  if (free_bits < 1) throw std::invalid_argument("mcmc: graph too small");

  int flips = (cfg.flip_fraction == 0.0)
                  ? 1
                  : static_cast<int>(std::ceil(cfg.flip_fraction * free_bits));
  flips = std::max(1, std::min(flips, free_bits));

  ConfigurationScorer scorer(model, pool, g);
  // Small state spaces revisit configurations constantly; memoize by code.
  bool memoize = free_bits <= 64;
  std::unordered_map<uint64_t, double> memo;
  auto log_target = [&](const MembershipMask& m) {
    if (!memoize) return scorer.log_target(m);
    uint64_t code = mask_code(m, target);
    auto it = memo.find(code);
    if (it != memo.end()) return it->second;
    double lt = scorer.log_target(m);
    memo.emplace(code, lt);
    return lt;
  };

  MembershipMask state(n, 0);
  for (int v = 0; v < n; ++v)
    if (v != target) state.set(v, rng.next_bernoulli(0.5));
  double state_lt = log_target(state);

  std::vector<int> non_target;
  non_target.reserve(static_cast<size_t>(free_bits));
  for (int v = 0; v < n; ++v)
    if (v != target) non_target.push_back(v);

  auto step = [&]() {
    for (int i = 0; i < flips; ++i) {
      int j = static_cast<int>(rng.next_int(i, free_bits - 1));
      std::swap(non_target[static_cast<size_t>(i)], non_target[static_cast<size_t>(j)]);
    }
    MembershipMask proposal = state;
    for (int i = 0; i < flips; ++i) {
      int v = non_target[static_cast<size_t>(i)];
      proposal.set(v, !proposal.test(v));
    }
    double proposal_lt = log_target(proposal);
    double u = rng.next_double();
    if (u < std::exp(proposal_lt - state_lt)) {
      state = std::move(proposal);
      state_lt = proposal_lt;
    }
  };

  for (int s = 0; s < cfg.burn_in; ++s) step();
  std::vector<MembershipMask> out;
  out.reserve(static_cast<size_t>(cfg.num_samples));
  for (int i = 0; i < cfg.num_samples; ++i) {
    for (int s = 0; s < cfg.thinning; ++s) step();
    out.push_back(state);
  }
  return out;
}

std::vector<MembershipMask> sample_zero_hop_mia(const SamplerConfig& cfg, int target,
                                                const SignalMatrix& signals, Rng& rng) {
  cfg.validate();
  int n = signals.num_samples();
  if (target < 0 || target >= n) throw std::invalid_argument("sampler: target out of range");
  std::vector<double> prob(static_cast<size_t>(n), -1.0);
  AttackConfig base_cfg;
  base_cfg.method = AttackMethod::kBase;
  base_cfg.mode = AttackMode::kOnline;
  base_cfg.prior = (cfg.prior > 0.0 && cfg.prior < 1.0) ? cfg.prior : 0.5;
  ScoreVector sv = attack_base(signals, base_cfg);
  for (int i = 0; i < n; ++i) {
    int id = sv.sample_ids[static_cast<size_t>(i)];
    if (id < 0 || id >= n || prob[static_cast<size_t>(id)] >= 0.0)
      throw std::invalid_argument("sampler: signals must cover each node exactly once");
    prob[static_cast<size_t>(id)] = sv.scores[static_cast<size_t>(i)];
  }

  std::vector<MembershipMask> out;
  out.reserve(static_cast<size_t>(cfg.num_samples));
  for (int s = 0; s < cfg.num_samples; ++s) {
    MembershipMask m(n, 0);
    for (int v = 0; v < n; ++v) {
      if (v == target) continue;
      m.set(v, rng.next_bernoulli(prob[static_cast<size_t>(v)]));
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<double> enumerate_exact(int target, const ModelParams& model, const ShadowPool& pool,
                                    const Graph& g) {
  if (g.n > 14) throw std::invalid_argument("enumerate_exact: node count too large");
  if (target < 0 || target >= g.n) throw std::invalid_argument("enumerate_exact: target out of range");
  ConfigurationScorer scorer(model, pool, g);
  uint64_t count = uint64_t{1} << (g.n - 1);
  std::vector<double> log_targets(static_cast<size_t>(count));
  for (uint64_t code = 0; code < count; ++code)
    log_targets[static_cast<size_t>(code)] = scorer.log_target(mask_from_code(code, g.n, target));
  double lse = logsumexp(log_targets);
  std::vector<double> prob(static_cast<size_t>(count));
  double total = 0.0;
  for (size_t i = 0; i < prob.size(); ++i) {
    prob[i] = std::exp(log_targets[i] - lse);
    total += prob[i];
  }
  for (double& p : prob) p /= total;
  return prob;
}

MaskSampler make_mask_sampler(const SamplerConfig& cfg, const Graph& g, const ModelParams& target,
                              const ShadowPool& pool, const SignalMatrix* zero_hop_signals,
                              uint64_t seed) {
  cfg.validate();
  switch (cfg.kind) {
    case SamplerKind::kModelIndependent:
      return [cfg, &g, seed](int v) {
        Rng rng(seed, static_cast<uint64_t>(v));
        std::vector<MembershipMask> out;
        out.reserve(static_cast<size_t>(cfg.num_samples));
        for (int i = 0; i < cfg.num_samples; ++i)
          out.push_back(sample_model_independent(cfg, g.n, v, rng));
        return out;
      };
    case SamplerKind::kMcmc:
      return [cfg, &g, &target, &pool, seed](int v) {
        Rng rng(seed, static_cast<uint64_t>(v));
        return sample_mcmc(cfg, v, target, pool, g, rng);
      };
    case SamplerKind::kZeroHopMia: {
      if (zero_hop_signals == nullptr)
        throw std::invalid_argument("sampler: zero-hop sampling needs a signal matrix");
      if (zero_hop_signals->num_samples() != g.n)
        throw std::invalid_argument("sampler: zero-hop signals must cover every node");
      // Membership probabilities depend only on the signals; draw them once.
      auto signals = *zero_hop_signals;
      return [cfg, signals, seed](int v) {
        Rng rng(seed, static_cast<uint64_t>(v));
        return sample_zero_hop_mia(cfg, v, signals, rng);
      };
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace miaudit
