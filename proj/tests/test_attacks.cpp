#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "miaudit/attacks.hpp"
#include "miaudit/sampling.hpp"
#include "miaudit/synthgen.hpp"

using namespace miaudit;

namespace {

SignalMatrix random_signals(int n, int k, uint64_t seed, bool balanced_bits = true) {
  SignalMatrix s;
  Rng rng(seed, 0);
  s.sample_ids.resize(static_cast<size_t>(n));
  std::iota(s.sample_ids.begin(), s.sample_ids.end(), 0);
  s.member.resize(static_cast<size_t>(n));
  s.target_loss.resize(static_cast<size_t>(n));
  s.shadow_loss = Matrix(n, k);
  s.in_bits.assign(static_cast<size_t>(n) * static_cast<size_t>(k), 0);
  for (int i = 0; i < n; ++i) {
    s.member[static_cast<size_t>(i)] = (i % 2 == 0) ? 1 : 0;
    s.target_loss[static_cast<size_t>(i)] = std::fabs(rng.next_normal()) + 0.05;
    for (int j = 0; j < k; ++j) s.shadow_loss(i, j) = std::fabs(rng.next_normal()) + 0.05;
    if (balanced_bits) {
      std::vector<int> order(static_cast<size_t>(k));
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      for (int j = 0; j < k / 2; ++j)
        s.in_bits[static_cast<size_t>(i) * k + static_cast<size_t>(order[static_cast<size_t>(j)])] = 1;
    }
  }
  return s;
}

Graph small_sbm(int n, uint64_t seed, double p_in = 0.5, double p_out = 0.15) {
  SbmSpec s;
  s.n = n;
  s.num_classes = 2;
  s.p_in = p_in;
  s.p_out = p_out;
  s.feature_dim = 3;
  s.class_radius = 2.0;
  s.noise_std = 0.8;
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

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_SUITE("attacks") {

TEST_CASE("base score on hand-checked inputs") {
  std::vector<double> equal{0.7, 0.7, 0.7};
  CHECK(base_score(0.7, equal, 0.5, 1.0) == 0.5);

  std::vector<double> ln2{std::log(2.0), std::log(2.0)};
  CHECK(base_score(0.0, ln2, 0.5, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // zero scaling removes the shadow term entirely
  std::vector<double> shadows{3.0, 1.0};
  CHECK(base_score(0.4, shadows, 0.5, 0.0) == doctest::Approx(sigmoid(-0.4)).epsilon(1e-15));

  CHECK_THROWS_AS(base_score(1.0, std::vector<double>{}, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(base_score(1.0, shadows, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("base score is monotone in its losses") {
  std::vector<double> shadows{0.5, 1.2, 2.0};
  double prev = 1.0;
  for (double lt = 0.0; lt <= 3.0; lt += 0.25) {
    double s = base_score(lt, shadows, 0.5, 1.0);
    CHECK(s < prev);
    prev = s;
  }
  double lo = base_score(1.0, std::vector<double>{0.5, 0.5}, 0.5, 1.0);
  double hi = base_score(1.0, std::vector<double>{0.5, 2.5}, 0.5, 1.0);
  CHECK(hi > lo);
}

TEST_CASE("attack_base equals the per-row oracle an both modes filter correctly") {
  SignalMatrix s = random_signals(200, 8, 5);
  AttackConfig cfg;
  cfg.method = AttackMethod::kBase;
  cfg.prior = 0.4;

  ScoreVector online = attack_base(s, cfg);
  for (int i = 0; i < s.num_samples(); ++i) {
    std::vector<double> row(8);
    for (int j = 0; j < 8; ++j) row[static_cast<size_t>(j)] = s.shadow_loss(i, j);
    CHECK(online.scores[static_cast<size_t>(i)] ==
          base_score(s.target_loss[static_cast<size_t>(i)], row, 0.4, 1.0));
    CHECK(online.scores[static_cast<size_t>(i)] > 0.0);
    CHECK(online.scores[static_cast<size_t>(i)] < 1.0);
  }

  cfg.mode = AttackMode::kOffline;
  cfg.alpha = 0.7;
  ScoreVector offline = attack_base(s, cfg);
  for (int i = 0; i < s.num_samples(); ++i) {
    std::vector<double> outs;
    for (int j = 0; j < 8; ++j)
      if (!s.in_model(i, j)) outs.push_back(s.shadow_loss(i, j));
    CHECK(outs.size() == 4);
    CHECK(offline.scores[static_cast<size_t>(i)] ==
          base_score(s.target_loss[static_cast<size_t>(i)], outs, 0.4, 0.7));
  }
}

TEST_CASE("identical losses across the board score one half") {
  SignalMatrix s = random_signals(10, 2, 6);
  for (int i = 0; i < 10; ++i) {
    s.target_loss[static_cast<size_t>(i)] = 1.3;
    s.shadow_loss(i, 0) = 1.3;
    s.shadow_loss(i, 1) = 1.3;
  }
  AttackConfig cfg;
  ScoreVector sv = attack_base(s, cfg);
  for (double x : sv.scores) CHECK(x == 0.5);
}

TEST_CASE("mca score and its relation to the posterior score") {
  std::vector<double> equal{0.9, 0.9};
  CHECK(mca_score(0.9, equal) == 1.0);

  SignalMatrix s = random_signals(100, 6, 7);
  AttackConfig cfg;
  ScoreVector base = attack_base(s, cfg);
  cfg.method = AttackMethod::kMca;
  ScoreVector mca = attack_mca(s, cfg);
  for (int i = 0; i < 100; ++i) {
    // log of the confidence ratio equals the posterior's log odds at a flat prior
    CHECK(std::fabs(logit(base.scores[static_cast<size_t>(i)]) -
                    std::log(mca.scores[static_cast<size_t>(i)])) < 1e-10);
  }

  // identical ranking
  std::vector<int> order_base(100), order_mca(100);
  std::iota(order_base.begin(), order_base.end(), 0);
  order_mca = order_base;
  std::sort(order_base.begin(), order_base.end(),
            [&](int a, int b) { return base.scores[static_cast<size_t>(a)] < base.scores[static_cast<size_t>(b)]; });
  std::sort(order_mca.begin(), order_mca.end(),
            [&](int a, int b) { return mca.scores[static_cast<size_t>(a)] < mca.scores[static_cast<size_t>(b)]; });
  CHECK(order_base == order_mca);
}

TEST_CASE("rmia corner cases and pairwise oracle") {
  SignalMatrix s = random_signals(50, 4, 8);
  AttackConfig cfg;
  cfg.method = AttackMethod::kRmia;

  cfg.gamma = 0.0;
  ScoreVector all_ones = attack_rmia(s, cfg);
  for (double x : all_ones.scores) CHECK(x == 1.0);

  cfg.gamma = 1.0;
  for (int i = 0; i < 5; ++i) {
    std::vector<int> self{i};
    ScoreVector sv = attack_rmia(s, cfg, self);
    CHECK(sv.scores[static_cast<size_t>(i)] == 1.0);
  }

  ScoreVector sv = attack_rmia(s, cfg);
  std::vector<double> mca(50);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row(4);
    for (int j = 0; j < 4; ++j) row[static_cast<size_t>(j)] = s.shadow_loss(i, j);
    mca[static_cast<size_t>(i)] = mca_score(s.target_loss[static_cast<size_t>(i)], row, 1.0);
  }
  for (int i = 0; i < 50; ++i) {
    int count = 0;
    for (int j = 0; j < 50; ++j)
      if (mca[static_cast<size_t>(i)] / mca[static_cast<size_t>(j)] >= 1.0) ++count;
    CHECK(sv.scores[static_cast<size_t>(i)] == doctest::Approx(count / 50.0).epsilon(1e-12));
    CHECK(sv.scores[static_cast<size_t>(i)] >= 0.0);
    CHECK(sv.scores[static_cast<size_t>(i)] <= 1.0);
  }
}

TEST_CASE("lira matches the density oracle and handles degenerate gaps") {
  SignalMatrix s = random_signals(60, 8, 9);
  AttackConfig cfg;
  cfg.method = AttackMethod::kLira;

  ScoreVector online = attack_lira(s, cfg);
  for (int i = 0; i < 60; ++i) {
    std::vector<double> in_phi, out_phi;
    for (int j = 0; j < 8; ++j) {
      double p = std::exp(-s.shadow_loss(i, j));
      p = std::min(std::max(p, 1e-12), 1.0 - 1e-7);
      double phi = std::log(p) - std::log(1.0 - p);
      (s.in_model(i, j) ? in_phi : out_phi).push_back(phi);
    }
    auto moments = [](const std::vector<double>& xs) {
      double m = 0.0;
      for (double x : xs) m += x;
      m /= xs.size();
      double v = 0.0;
      for (double x : xs) v += (x - m) * (x - m);
      return std::pair<double, double>{m, std::max(v / xs.size(), 1e-8)};
    };
    auto [mi, vi] = moments(in_phi);
    auto [mo, vo] = moments(out_phi);
    double pt = std::exp(-s.target_loss[static_cast<size_t>(i)]);
    pt = std::min(std::max(pt, 1e-12), 1.0 - 1e-7);
    double phi_t = std::log(pt) - std::log(1.0 - pt);
    auto logpdf = [](double x, double m, double v) {
      return -0.5 * std::log(2.0 * M_PI * v) - (x - m) * (x - m) / (2.0 * v);
    };
    double expected = logpdf(phi_t, mi, vi) - logpdf(phi_t, mo, vo);
    CHECK(online.scores[static_cast<size_t>(i)] == doctest::Approx(expected).epsilon(1e-10));
  }

  // identical in/out populations give a zero log ratio
  SignalMatrix flat = random_signals(4, 4, 10);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) flat.shadow_loss(i, j) = 0.8;
  ScoreVector zero = attack_lira(flat, cfg);
  for (double x : zero.scores) CHECK(x == 0.0);

  // offline score vanishes when the target sits on the out mean
  cfg.mode = AttackMode::kOffline;
  for (int i = 0; i < 4; ++i) flat.target_loss[static_cast<size_t>(i)] = 0.8;
  ScoreVector centered = attack_lira(flat, cfg);
  for (double x : centered.scores) CHECK(x == 0.0);

  SignalMatrix thin = random_signals(5, 2, 11);
  cfg.mode = AttackMode::kOnline;
  CHECK_THROWS_AS(attack_lira(thin, cfg), std::invalid_argument);
}

TEST_CASE("graph signal reduces to the plain loss without structure") {
  Graph g = small_sbm(10, 60, 0.0, 0.0);  // edgeless
  ModelParams p = init_params(Arch::kGcn2, g.feature_dim, g.num_classes, 4, 3);
  MembershipMask others(g.n, 1);
  others.set(2, false);
  double sig = graph_signal(p, g, 2, others, 2);
  std::vector<int> v{2};
  CHECK(sig == per_node_losses(p, g, MaskedAdjacency::edgeless(g.n), v)[0]);

  // all-zero configuration: no member neighbors, loss of v in isolation
  Graph wired = small_sbm(10, 61);
  MembershipMask none(wired.n, 0);
  double isolated = graph_signal(p, wired, 2, none, 2);
  CHECK(isolated == per_node_losses(p, wired, MaskedAdjacency::edgeless(wired.n), v)[0]);

  CHECK_THROWS_AS(graph_signal(p, wired, 2, MembershipMask(wired.n, 1), 2), std::invalid_argument);
}

TEST_CASE("graph signal matches the double-forward oracle on a path") {
  Graph g;
  g.n = 5;
  g.feature_dim = 3;
  g.num_classes = 2;
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  g.features = Matrix(5, 3);
  Rng rng(8, 0);
  for (double& x : g.features.data) x = rng.next_normal();
  g.labels = {0, 1, 0, 1, 0};
  g.finalize();

  for (uint64_t seed = 0; seed < 6; ++seed) {
    ModelParams p = init_params(Arch::kGcn2, 3, 2, 4, seed);
    MembershipMask others(5, 0);
    others.set(1, true);
    others.set(2, true);
    others.set(4, seed % 2 == 1);
    int v = 0;
    double got = graph_signal(p, g, v, others, 2);

    MaskedAdjacency with_v = masked_adjacency(g, others.with(v));
    MaskedAdjacency without_v = masked_adjacency(g, others);
    PropagationMatrix pw(with_v), po(without_v);
    Matrix probs_with = forward_probs(p, g.features, &pw);
    Matrix probs_without = forward_probs(p, g.features, &po);
    double expected = nll_loss(probs_with.row(v), g.labels[static_cast<size_t>(v)]);
    for (int u : l_hop_neighborhood(g, v, 2)) {
      if (!others.test(u)) continue;
      expected += nll_loss(probs_with.row(u), g.labels[static_cast<size_t>(u)]) -
                  nll_loss(probs_without.row(u), g.labels[static_cast<size_t>(u)]);
    }
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("graph attack collapses to the feature-only attack on edgeless data") {
  SbmSpec spec;
  spec.n = 30;
  spec.num_classes = 2;
  spec.feature_dim = 3;
  spec.class_radius = 2.0;
  spec.noise_std = 1.0;
  spec.seed = 70;
  Graph g = gen_iid_dataset(spec);
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 4, 71);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 72;
  ModelParams target = train(Arch::kGcn2, g, pool.train_masks[0], tcfg);

  std::vector<int> targets(static_cast<size_t>(g.n));
  std::iota(targets.begin(), targets.end(), 0);
  SignalMatrix sig = build_signal_matrix(target, pool.train_masks[0], pool, g, targets,
                                         SignalMode::kZeroHop);
  AttackConfig cfg;
  ScoreVector base = attack_base(sig, cfg);

  cfg.method = AttackMethod::kGBase;
  cfg.mask_samples = 3;
  SamplerConfig scfg;
  scfg.num_samples = 3;
  MaskSampler sampler = make_mask_sampler(scfg, g, target, pool, nullptr, 73);
  ScoreVector gbase = attack_gbase(target, pool, g, targets, cfg, sampler);
  for (int i = 0; i < g.n; ++i)
    CHECK(std::fabs(gbase.scores[static_cast<size_t>(i)] - base.scores[static_cast<size_t>(i)]) < 1e-12);
}

TEST_CASE("graph attack scores one half when the only shadow is the target") {
  Graph g = small_sbm(12, 80);
  MembershipMask members(g.n, 0);
  for (int v = 0; v < g.n / 2; ++v) members.set(v, true);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 81;
  ModelParams target = train(Arch::kGcn2, g, members, tcfg);
  ShadowPool pool;
  pool.models = {target};
  pool.train_masks = {members};

  AttackConfig cfg;
  cfg.method = AttackMethod::kGBase;
  cfg.mask_samples = 4;
  SamplerConfig scfg;
  scfg.num_samples = 4;
  MaskSampler sampler = make_mask_sampler(scfg, g, target, pool, nullptr, 82);
  std::vector<int> targets{0, 3, 7, 11};
  ScoreVector sv = attack_gbase(target, pool, g, targets, cfg, sampler);
  for (double x : sv.scores) CHECK(x == 0.5);
}

TEST_CASE("sampled graph attack approaches the enumerated expectation") {
  Graph g = small_sbm(8, 90);
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 4, 91);
  TrainConfig tcfg = quick_cfg();
  tcfg.init_seed = 92;
  MembershipMask half(g.n, 0);
  for (int v = 0; v < g.n / 2; ++v) half.set(v, true);
  ModelParams target = train(Arch::kGcn2, g, half, tcfg);

  double lambda = 0.5;
  std::vector<int> targets{0, 3, 6};
  AttackConfig cfg;
  cfg.method = AttackMethod::kGBase;
  cfg.prior = lambda;

  // Exact expectation over all 2^(n-1) configurations under independent
  // Bernoulli(lambda) weights.
  std::vector<double> exact(targets.size(), 0.0);
  for (size_t ti = 0; ti < targets.size(); ++ti) {
    int v = targets[ti];
    for (uint64_t code = 0; code < (uint64_t{1} << (g.n - 1)); ++code) {
      MembershipMask others = mask_from_code(code, g.n, v);
      double weight = 1.0;
      for (int u = 0; u < g.n; ++u) {
        if (u == v) continue;
        weight *= others.test(u) ? lambda : (1.0 - lambda);
      }
      double st = graph_signal(target, g, v, others, 2);
      std::vector<double> neg(static_cast<size_t>(pool.num_models()));
      for (int k = 0; k < pool.num_models(); ++k)
        neg[static_cast<size_t>(k)] = -graph_signal(pool.models[static_cast<size_t>(k)], g, v, others, 2);
      double shadow_term = logsumexp(neg) - std::log(4.0);
      exact[ti] += weight * sigmoid(-st - shadow_term + std::log(lambda / (1 - lambda)));
    }
  }

  cfg.mask_samples = 10000;
  SamplerConfig scfg;
  scfg.prior = lambda;
  scfg.num_samples = 10000;
  MaskSampler sampler = make_mask_sampler(scfg, g, target, pool, nullptr, 93);
  ScoreVector sv = attack_gbase(target, pool, g, targets, cfg, sampler);
  for (size_t ti = 0; ti < targets.size(); ++ti)
    CHECK(std::fabs(sv.scores[ti] - exact[ti]) < 0.02);
}

TEST_CASE("graph attack validates its sampler") {
  Graph g = small_sbm(8, 95);
  ShadowPool pool = train_shadow_pool(g, Arch::kGcn2, quick_cfg(), 2, 96);
  AttackConfig cfg;
  cfg.method = AttackMethod::kGBase;
  cfg.mask_samples = 2;
  MaskSampler bad = [&](int) { return std::vector<MembershipMask>{MembershipMask(g.n, 0)}; };
  std::vector<int> targets{1};
  CHECK_THROWS_AS(attack_gbase(pool.models[0], pool, g, targets, cfg, bad),
                  std::invalid_argument);
}

}  // TEST_SUITE
