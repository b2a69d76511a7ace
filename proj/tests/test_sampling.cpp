#include "doctest.h"

#include <cmath>
#include <numeric>

#include "miaudit/sampling.hpp"
#include "miaudit/synthgen.hpp"

using namespace miaudit;

namespace {

Graph tiny_graph(int n = 6, uint64_t seed = 21) {
  SbmSpec s;
  s.n = n;
  s.num_classes = 2;
  s.p_in = 0.5;
  s.p_out = 0.2;
  s.feature_dim = 3;
  s.class_radius = 1.5;
  s.noise_std = 1.0;
  s.seed = seed;
  return gen_sbm_graph(s);
}

TrainConfig quick_cfg() {
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.epochs = 20;
  cfg.hidden = 4;
  return cfg;
}

/// Pool whose only model is the target itself (not trainable via the pool
/// builder, which insists on even counts).
ShadowPool self_pool(const ModelParams& target, int n) {
  ShadowPool pool;
  pool.models = {target};
  pool.train_masks = {MembershipMask(n, 1)};
  return pool;
}

// Log target recomputed naively: full forwards, plain sums, no
// log-sum-exp rearrangement.
double naive_log_target(const MembershipMask& others, const ModelParams& target,
                        const ShadowPool& pool, const Graph& g) {
  auto member_loss_sum = [&](const ModelParams& m) {
    MaskedAdjacency adj = masked_adjacency(g, others);
    PropagationMatrix prop(adj);
    Matrix probs = forward_probs(m, g.features, &prop);
    double s = 0.0;
    for (int v = 0; v < g.n; ++v)
      if (others.test(v)) s += nll_loss(probs.row(v), g.labels[static_cast<size_t>(v)]);
    return s;
  };
  double mean_conf = 0.0;
  for (const ModelParams& m : pool.models) mean_conf += std::exp(-member_loss_sum(m));
  mean_conf /= static_cast<double>(pool.models.size());
  return -member_loss_sum(target) - std::log(mean_conf);
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("model-independent sampler obeys the rate and clears the target bit") {
  SamplerConfig cfg;
  cfg.prior = 1.0;
  Rng rng(5, 0);
  MembershipMask ones = sample_model_independent(cfg, 9, 4, rng);
  CHECK(ones.count() == 8);
  CHECK_FALSE(ones.test(4));

  cfg.prior = 0.0;
  MembershipMask zeros = sample_model_independent(cfg, 9, 4, rng);
  CHECK(zeros.count() == 0);

  cfg.prior = 0.5;
  MembershipMask big = sample_model_independent(cfg, 10001, 0, rng);
  double sd = std::sqrt(10000 * 0.25);
  CHECK(std::fabs(big.count() - 5000.0) < 3 * sd);
}

TEST_CASE("log target vanishes on the empty configuration and for a self-shadow") {
  Graph g = tiny_graph();
  MembershipMask members(g.n, 1);
  members.set(0, false);
  TrainConfig cfg = quick_cfg();
  cfg.init_seed = 3;
  ModelParams target = train(Arch::kGcn2, g, members, cfg);

  ShadowPool pool = self_pool(target, g.n);
  CHECK(mcmc_log_target(MembershipMask(g.n, 0), 0, target, pool, g) == 0.0);

  Rng rng(9, 1);
  for (int trial = 0; trial < 5; ++trial) {
    SamplerConfig scfg;
    MembershipMask m = sample_model_independent(scfg, g.n, 0, rng);
    CHECK(std::fabs(mcmc_log_target(m, 0, target, pool, g)) < 1e-12);
  }
}

TEST_CASE("log target matches the naive oracle") {
  Graph g = tiny_graph();
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 4, 7);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 10;
  MembershipMask half(g.n, 0);
  for (int v = 0; v < g.n / 2; ++v) half.set(v, true);
  ModelParams target = train(Arch::kGcn2, g, half, tcfg);

  Rng rng(31, 2);
  SamplerConfig scfg;
  for (int trial = 0; trial < 10; ++trial) {
    MembershipMask m = sample_model_independent(scfg, g.n, 1, rng);
    double fast = mcmc_log_target(m, 1, target, pool, g);
    double naive = naive_log_target(m, target, pool, g);
    CHECK(fast == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("log target is invariant under shadow permutation") {
  Graph g = tiny_graph();
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 4, 8);
  ShadowPool shuffled = subset_pool(pool, std::vector<int>{2, 0, 3, 1});
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 12;
  ModelParams target = train(Arch::kGcn2, g, pool.train_masks[0], tcfg);

  Rng rng(77, 0);
  SamplerConfig scfg;
  for (int trial = 0; trial < 5; ++trial) {
    MembershipMask m = sample_model_independent(scfg, g.n, 2, rng);
    CHECK(mcmc_log_target(m, 2, target, pool, g) ==
          doctest::Approx(mcmc_log_target(m, 2, target, shuffled, g)).epsilon(1e-12));
  }
}

TEST_CASE("log target rejects a set target bit") {
  Graph g = tiny_graph();
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 2, 3);
  CHECK_THROWS_AS(mcmc_log_target(MembershipMask(g.n, 1), 0, pool.models[0], pool, g),
                  std::invalid_argument);
}

TEST_CASE("mask codes round-trip") {
  for (uint64_t code = 0; code < 32; ++code) {
    MembershipMask m = mask_from_code(code, 6, 2);
    CHECK_FALSE(m.test(2));
    CHECK(mask_code(m, 2) == code);
  }
}

TEST_CASE("chain with a flat target accepts every single-bit proposal") {
  Graph g = tiny_graph();
  MembershipMask members(g.n, 1);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 4;
  ModelParams target = train(Arch::kGcn2, g, members, tcfg);
  ShadowPool pool = self_pool(target, g.n);  // log target is identically zero

  SamplerConfig scfg;
  scfg.kind = SamplerKind::kMcmc;
  scfg.num_samples = 50;
  scfg.burn_in = 0;
  scfg.thinning = 1;
  Rng rng(15, 0);
  std::vector<MembershipMask> chain = sample_mcmc(scfg, 0, target, pool, g, rng);
  for (size_t i = 1; i < chain.size(); ++i) {
    int hamming = 0;
    for (int v = 0; v < g.n; ++v)
      hamming += chain[i].test(v) != chain[i - 1].test(v) ? 1 : 0;
    CHECK(hamming == 1);  // accepted single-bit flip every step
  }
}

TEST_CASE("chain is deterministic given the seed") {
  Graph g = tiny_graph();
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 2, 5);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 6;
  ModelParams target = train(Arch::kGcn2, g, pool.train_masks[0], tcfg);

  SamplerConfig scfg;
  scfg.num_samples = 20;
  scfg.burn_in = 50;
  scfg.thinning = 5;
  Rng rng_a(123, 9), rng_b(123, 9);
  std::vector<MembershipMask> a = sample_mcmc(scfg, 1, target, pool, g, rng_a);
  std::vector<MembershipMask> b = sample_mcmc(scfg, 1, target, pool, g, rng_b);
  CHECK(a == b);
}

TEST_CASE("exact enumeration is a probability table, uniform for a self-shadow") {
  Graph g = tiny_graph(6, 33);
  MembershipMask members(g.n, 1);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 14;
  ModelParams target = train(Arch::kGcn2, g, members, tcfg);

  ShadowPool pool = self_pool(target, g.n);
  std::vector<double> probs = enumerate_exact(0, target, pool, g);
  CHECK(probs.size() == 32);
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  CHECK(std::fabs(total - 1.0) < 1e-12);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / 32.0).epsilon(1e-12));

  Graph big = tiny_graph(16, 1);
  CHECK_THROWS_AS(enumerate_exact(0, target, pool, big), std::invalid_argument);
}

TEST_CASE("chain frequencies approach the exact distribution") {
  SbmSpec spec;
  spec.n = 8;
  spec.num_classes = 2;
  spec.p_in = 0.5;
  spec.p_out = 0.15;
  spec.feature_dim = 3;
  spec.class_radius = 2.0;
  spec.noise_std = 0.8;
  spec.seed = 40;
  Graph g = gen_sbm_graph(spec);
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 4, 41);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 42;
  MembershipMask half(g.n, 0);
  for (int v = 0; v < g.n / 2; ++v) half.set(v, true);
  ModelParams target = train(Arch::kGcn2, g, half, tcfg);

  int v = 0;
  std::vector<double> exact = enumerate_exact(v, target, pool, g);

  SamplerConfig scfg;
  scfg.kind = SamplerKind::kMcmc;
  scfg.num_samples = 20000;
  scfg.burn_in = 500;
  scfg.thinning = 50;
  Rng rng(43, 0);
  std::vector<MembershipMask> samples = sample_mcmc(scfg, v, target, pool, g, rng);
  std::vector<double> freq(exact.size(), 0.0);
  for (const MembershipMask& m : samples) freq[static_cast<size_t>(mask_code(m, v))] += 1.0;
  double tv = 0.0;
  for (size_t i = 0; i < exact.size(); ++i)
    tv += std::fabs(exact[i] - freq[i] / samples.size());
  tv *= 0.5;
  CHECK(tv < 0.05);
}

TEST_CASE("zero-hop sampler follows the attack probabilities") {
  // Saturated signals: target losses of zero against hopeless shadows give
  // membership probability one, so every mask is all-ones.
  SignalMatrix s;
  int n = 7;
  s.sample_ids.resize(static_cast<size_t>(n));
  std::iota(s.sample_ids.begin(), s.sample_ids.end(), 0);
  s.member.assign(static_cast<size_t>(n), 0);
  s.target_loss.assign(static_cast<size_t>(n), 0.0);
  s.shadow_loss = Matrix(n, 2, 69.0);
  s.in_bits.assign(static_cast<size_t>(n) * 2, 0);

  SamplerConfig cfg;
  cfg.num_samples = 4;
  Rng rng(3, 3);
  std::vector<MembershipMask> masks = sample_zero_hop_mia(cfg, 2, s, rng);
  CHECK(masks.size() == 4);
  for (const MembershipMask& m : masks) {
    CHECK(m.count() == n - 1);
    CHECK_FALSE(m.test(2));
  }

  // Equal losses give probability one half; bit frequency concentrates.
  for (double& x : s.target_loss) x = 1.0;
  s.shadow_loss = Matrix(n, 2, 1.0);
  cfg.num_samples = 2000;
  Rng rng2(4, 4);
  std::vector<MembershipMask> coin = sample_zero_hop_mia(cfg, 0, s, rng2);
  double bits = 0.0;
  for (const MembershipMask& m : coin) bits += m.count();
  double rate = bits / (2000.0 * (n - 1));
  CHECK(std::fabs(rate - 0.5) < 3 * std::sqrt(0.25 / (2000.0 * (n - 1))));
}

TEST_CASE("sampler factory produces the configured kind deterministically") {
  Graph g = tiny_graph();
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 2, 50);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 51;
  ModelParams target = train(Arch::kGcn2, g, pool.train_masks[0], tcfg);

  SamplerConfig cfg;
  cfg.num_samples = 3;
  MaskSampler sampler = make_mask_sampler(cfg, g, target, pool, nullptr, 99);
  std::vector<MembershipMask> a = sampler(2);
  std::vector<MembershipMask> b = sampler(2);
  CHECK(a == b);
  CHECK(a.size() == 3);
  for (const MembershipMask& m : a) CHECK_FALSE(m.test(2));

  cfg.kind = SamplerKind::kZeroHopMia;
  CHECK_THROWS_AS(make_mask_sampler(cfg, g, target, pool, nullptr, 99), std::invalid_argument);
}

}  // TEST_SUITE
