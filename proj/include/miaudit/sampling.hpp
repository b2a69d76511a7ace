#pragma once

#include <cstdint>
#include <vector>

#include "miaudit/attacks.hpp"
#include "miaudit/graph.hpp"
#include "miaudit/models.hpp"
#include "miaudit/rng.hpp"
#include "miaudit/shadow.hpp"

namespace miaudit {

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kModelIndependent;
  double prior = 0.5;          // Bernoulli rate for model-independent bits
  int num_samples = 8;         // masks drawn per target
  double flip_fraction = 0.0;  // 0 selects the single-bit default 1/(n-1)
  int burn_in = 1000;
  int thinning = 500;

  void validate() const;
};

/// Each non-target bit drawn independently Bernoulli(prior); the target
/// bit stays clear.
MembershipMask sample_model_independent(const SamplerConfig& cfg, int n, int target, Rng& rng);

/// Log of the unnormalized stationary mass of a membership configuration
/// given the target model: minus the members' loss sum under the masked
/// adjacency, minus the log-mean shadow likelihood of the same sum.
double mcmc_log_target(const MembershipMask& others, int target, const ModelParams& model,
                       const ShadowPool& pool, const Graph& g);

/// Metropolis chain over configurations: flip ceil(flip_fraction*(n-1))
/// uniformly chosen non-target bits per step, accept with min(1, exp(d)).
/// Emits one mask per `thinning` steps after `burn_in` steps.
std::vector<MembershipMask> sample_mcmc(const SamplerConfig& cfg, int target,
                                        const ModelParams& model, const ShadowPool& pool,
                                        const Graph& g, Rng& rng);

/// Per-node membership probabilities from the posterior-probability attack
/// on feature-only signals, then independent Bernoulli draws. The signal
/// matrix must cover every node of the graph.
std::vector<MembershipMask> sample_zero_hop_mia(const SamplerConfig& cfg, int target,
                                                const SignalMatrix& signals, Rng& rng);

/// Integer code of a configuration: bit j of the code is the mask bit of
/// the j-th non-target node (nodes ordered by index, target skipped).
uint64_t mask_code(const MembershipMask& others, int target);
MembershipMask mask_from_code(uint64_t code, int n, int target);

/// Normalized stationary distribution over all 2^(n-1) configurations,
/// indexed by mask_code. Only feasible for small n (at most 14 nodes).
std::vector<double> enumerate_exact(int target, const ModelParams& model, const ShadowPool& pool,
                                    const Graph& g);

/// Wires a SamplerConfig into the callable the graph attack consumes.
/// zero_hop_signals is required for kZeroHopMia and ignored otherwise;
/// per-target randomness is derived from (seed, target node).
MaskSampler make_mask_sampler(const SamplerConfig& cfg, const Graph& g, const ModelParams& target,
                              const ShadowPool& pool, const SignalMatrix* zero_hop_signals,
                              uint64_t seed);

}  // namespace miaudit
