#include "miaudit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "miaudit/metrics.hpp"
#include "miaudit/rng.hpp"
#include "miaudit/sampling.hpp"
#include "miaudit/util.hpp"

namespace miaudit {

namespace {

constexpr uint64_t kPoolSalt = 0x706f6f6cULL;
constexpr uint64_t kTargetSplitStream = 0x73706c6900000000ULL;
constexpr uint64_t kTargetInitSalt = 0x7461726700000000ULL;
constexpr uint64_t kEvalStream = 0x6576616c00000000ULL;
constexpr uint64_t kSamplerSalt = 0x73616d7000000000ULL;
constexpr uint64_t kZSetStream = 0x7a73657400000000ULL;
constexpr uint64_t kFreshSplitStream = 0x6672736800000000ULL;
constexpr uint64_t kFreshInitSalt = 0x6669747400000000ULL;
constexpr uint64_t kMcmcStream = 0x6d636d63ULL;

MembershipMask sample_split(int n, double fraction, Rng& rng) {
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  int members = std::max(1, std::min(n - 1, static_cast<int>(std::llround(fraction * n))));
  MembershipMask mask(n, 0);
  for (int i = 0; i < members; ++i) mask.set(order[static_cast<size_t>(i)], true);
  return mask;
}

std::vector<int> nodes_with_bit(const MembershipMask& mask, bool value) {
  std::vector<int> out;
  for (int v = 0; v < mask.size(); ++v)
    if (mask.test(v) == value) out.push_back(v);
  return out;
}

/// Equal numbers of members and non-members, seeded subsample, sorted ids.
std::vector<int> balanced_eval_set(const MembershipMask& truth, int per_side, Rng& rng) {
  std::vector<int> members = nodes_with_bit(truth, true);
  std::vector<int> outsiders = nodes_with_bit(truth, false);
  int take = static_cast<int>(std::min(members.size(), outsiders.size()));
  if (per_side > 0) take = std::min(take, per_side);
  if (take < 1) throw std::invalid_argument("evaluation set would be empty");
  rng.shuffle(members);
  rng.shuffle(outsiders);
  std::vector<int> eval(members.begin(), members.begin() + take);
  eval.insert(eval.end(), outsiders.begin(), outsiders.begin() + take);
  std::sort(eval.begin(), eval.end());
  return eval;
}

struct TargetModel {
  ModelParams params;
  MembershipMask train_mask;
  uint64_t init_seed = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

TargetModel train_target(const ExperimentConfig& cfg, const Graph& g, uint64_t split_stream,
                         uint64_t init_salt) {
  TargetModel t;
  Rng split_rng(cfg.run.seed, split_stream);
  t.train_mask = sample_split(g.n, cfg.train_fraction, split_rng);
  t.init_seed = derive_seed(cfg.run.seed, init_salt);
  t.params = train(cfg.challenger.arch, g, t.train_mask,
                   cfg.challenger.to_train_config(t.init_seed));

  MaskedAdjacency train_adj = masked_adjacency(g, t.train_mask);
  PropagationMatrix train_prop(train_adj);
  MembershipMask full(g.n, 1);
  MaskedAdjacency full_adj = masked_adjacency(g, full);
  PropagationMatrix full_prop(full_adj);
  std::vector<int> members = nodes_with_bit(t.train_mask, true);
  std::vector<int> outsiders = nodes_with_bit(t.train_mask, false);
  const PropagationMatrix* p_train = cfg.challenger.arch == Arch::kGcn2 ? &train_prop : nullptr;
  const PropagationMatrix* p_full = cfg.challenger.arch == Arch::kGcn2 ? &full_prop : nullptr;
  t.train_acc = accuracy(t.params, g.features, p_train, members, g.labels);
  t.test_acc = outsiders.empty() ? 0.0 : accuracy(t.params, g.features, p_full, outsiders, g.labels);
  return t;
}

std::vector<uint8_t> member_bits(const MembershipMask& truth, std::span<const int> nodes) {
  std::vector<uint8_t> out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = truth.test(nodes[i]) ? 1 : 0;
  return out;
}

/// Offline scaling grid search with pool model 0 as the simulated target,
/// attacked by the remaining models.
double select_offline_alpha(const ShadowPool& pool, const Graph& g, const AttackConfig& base_cfg) {
  std::vector<int> keep;
  for (int k = 1; k < pool.num_models(); ++k) keep.push_back(k);
  ShadowPool attackers = subset_pool(pool, keep);
  std::vector<int> all_nodes(static_cast<size_t>(g.n));
  std::iota(all_nodes.begin(), all_nodes.end(), 0);
  SignalMatrix sig = build_signal_matrix(pool.models[0], pool.train_masks[0], attackers, g,
                                         all_nodes, SignalMode::kZeroHop);
  std::vector<uint8_t> member = member_bits(pool.train_masks[0], all_nodes);

  double best_alpha = 0.0;
  double best_auc = -1.0;
  for (int step = 0; step <= 10; ++step) {
    AttackConfig cfg = base_cfg;
    cfg.alpha = 0.1 * step;
    ScoreVector sv = run_signal_attack(sig, cfg);
    double auc = roc_auc(sv.scores, member).auc;
    if (auc > best_auc) {
      best_auc = auc;
      best_alpha = cfg.alpha;
    }
  }
  return best_alpha;
}

std::vector<int> rmia_population(int n_rows, double z_fraction, Rng& rng) {
  std::vector<int> rows(static_cast<size_t>(n_rows));
  std::iota(rows.begin(), rows.end(), 0);
  if (z_fraction >= 1.0) return rows;
  rng.shuffle(rows);
  int take = std::max(1, static_cast<int>(std::llround(z_fraction * n_rows)));
  rows.resize(static_cast<size_t>(take));
  std::sort(rows.begin(), rows.end());
  return rows;
}

struct SummaryRow {
  std::string attack;
  std::string mode;
  double auc = 0.0;
  double tpr1 = 0.0;
  double tpr01 = 0.0;
  int n = 0;
  int k = 0;
  uint64_t seed = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> xs) {
  MeanStd ms;
  for (double x : xs) ms.mean += x;
  ms.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - ms.mean) * (x - ms.mean);
  ms.std = std::sqrt(ss / static_cast<double>(xs.size()));  // population std
  return ms;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

void preflight(const ExperimentConfig& cfg) {
  if (cfg.attacks.empty()) throw ConfigError("audit needs at least one [attack ...] section");
  for (const AttackEntry& e : cfg.attacks) {
    if (e.cfg.method == AttackMethod::kLira && cfg.shadow_models < 4)
      throw ConfigError("lira needs at least 4 shadow models");
    if (e.alpha_auto && e.cfg.mode == AttackMode::kOnline)
      throw ConfigError("attack " + e.name + ": alpha=auto only applies to offline mode");
  }
}

}  // namespace

void run_gen(const ExperimentConfig& cfg, const std::string& path, std::ostream& log) {
  if (!cfg.data.file.empty()) throw ConfigError("gen: [data] must describe a generator, not a file");
  Graph g = cfg.make_graph();
  save_graph(path, g);
  log << "wrote " << path << ": n=" << g.n << " d=" << g.feature_dim << " c=" << g.num_classes
      << " edges=" << g.edges.size() << "\n";
}

void run_audit(const ExperimentConfig& cfg, std::ostream& log) {
  preflight(cfg);
  Graph g = cfg.make_graph();
  std::filesystem::create_directories(cfg.run.output);
  auto out_path = [&](const std::string& name) {
    return (std::filesystem::path(cfg.run.output) / name).string();
  };

  uint64_t pool_seed = derive_seed(cfg.run.seed, kPoolSalt);
  ShadowPool pool = train_shadow_pool(g, cfg.adversary.arch,
                                      cfg.adversary.to_train_config(0), cfg.shadow_models,
                                      pool_seed, cfg.run.jobs);

  std::ostringstream manifest;
  manifest << "dataset: kind=" << cfg.data.kind << " n=" << g.n << " d=" << g.feature_dim
           << " c=" << g.num_classes << " edges=" << g.edges.size()
           << " seed=" << cfg.data.spec.seed << "\n";
  manifest << "challenger: arch=" << arch_name(cfg.challenger.arch)
           << " hidden=" << cfg.challenger.hidden << " lr=" << cfg.challenger.learning_rate
           << " epochs=" << cfg.challenger.epochs << " wd=" << cfg.challenger.weight_decay
           << " train_fraction=" << cfg.train_fraction << "\n";
  manifest << "adversary: arch=" << arch_name(cfg.adversary.arch)
           << " hidden=" << cfg.adversary.hidden << " lr=" << cfg.adversary.learning_rate
           << " epochs=" << cfg.adversary.epochs << " wd=" << cfg.adversary.weight_decay
           << " shadow_models=" << cfg.shadow_models << " pool_seed=" << pool_seed << "\n";
  manifest << "evaluation: all nodes, balanced member/non-member subsample"
           << (cfg.run.eval_per_side > 0
                   ? " capped at " + std::to_string(cfg.run.eval_per_side) + " per side"
                   : "")
           << "\n";

  // Offline scaling for signal attacks depends only on the pool; resolve once.
  std::vector<double> resolved_alpha(cfg.attacks.size(), -1.0);
  for (size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
    const AttackEntry& e = cfg.attacks[ai];
    if (e.alpha_auto && e.cfg.method != AttackMethod::kGBase) {
      resolved_alpha[ai] = select_offline_alpha(pool, g, e.cfg);
      manifest << "attack " << e.name << ": alpha=" << resolved_alpha[ai]
               << " (grid search on simulated target)\n";
    }
  }

  std::vector<SummaryRow> rows;
  for (int rep = 0; rep < cfg.run.repetitions; ++rep) {
    TargetModel target = train_target(cfg, g, kTargetSplitStream + static_cast<uint64_t>(rep),
                                      kTargetInitSalt + static_cast<uint64_t>(rep));
    Rng eval_rng(cfg.run.seed, kEvalStream + static_cast<uint64_t>(rep));
    std::vector<int> eval_nodes = balanced_eval_set(target.train_mask, cfg.run.eval_per_side, eval_rng);
    std::vector<uint8_t> member = member_bits(target.train_mask, eval_nodes);

    manifest << "rep " << rep << ": target_seed=" << target.init_seed
             << " members=" << target.train_mask.count() << " train_acc=" << fmt(target.train_acc)
             << " test_acc=" << fmt(target.test_acc)
             << " gap=" << fmt(target.train_acc - target.test_acc)
             << " eval_nodes=" << eval_nodes.size() << "\n";

    SignalMatrix eval_signals = build_signal_matrix(target.params, target.train_mask, pool, g,
                                                    eval_nodes, SignalMode::kZeroHop);
    // Full-node signals, built on demand for the zero-hop mask sampler.
    SignalMatrix full_signals;
    bool full_built = false;

    for (size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
      const AttackEntry& entry = cfg.attacks[ai];
      AttackConfig acfg = entry.cfg;
      if (resolved_alpha[ai] >= 0.0) acfg.alpha = resolved_alpha[ai];

      ScoreVector sv;
      if (acfg.method == AttackMethod::kGBase) {
        const SignalMatrix* sampler_signals = nullptr;
        if (acfg.sampler == SamplerKind::kZeroHopMia) {
          if (!full_built) {
            std::vector<int> all_nodes(static_cast<size_t>(g.n));
            std::iota(all_nodes.begin(), all_nodes.end(), 0);
            full_signals = build_signal_matrix(target.params, target.train_mask, pool, g,
                                               all_nodes, SignalMode::kZeroHop);
            full_built = true;
          }
          sampler_signals = &full_signals;
        }
        uint64_t sampler_seed = derive_seed(cfg.run.seed, kSamplerSalt + static_cast<uint64_t>(rep));
        SamplerConfig scfg;
        scfg.kind = acfg.sampler;
        scfg.prior = acfg.prior;
        scfg.num_samples = acfg.mask_samples;
        MaskSampler sampler =
            make_mask_sampler(scfg, g, target.params, pool, sampler_signals, sampler_seed);
        if (entry.alpha_auto && acfg.mode == AttackMode::kOffline) {
          // Evaluate both candidate scalings and keep the better one.
          double best_auc = -1.0;
          for (double alpha : {0.9, 1.0}) {
            AttackConfig candidate = acfg;
            candidate.alpha = alpha;
            ScoreVector trial = attack_gbase(target.params, pool, g, eval_nodes, candidate, sampler);
            double auc = roc_auc(trial.scores, member).auc;
            if (auc > best_auc) {
              best_auc = auc;
              sv = std::move(trial);
              acfg.alpha = alpha;
            }
          }
          manifest << "rep " << rep << " attack " << entry.name << ": alpha=" << acfg.alpha
                   << " (best of {0.9, 1.0})\n";
        } else {
          sv = attack_gbase(target.params, pool, g, eval_nodes, acfg, sampler);
        }
      } else if (acfg.method == AttackMethod::kRmia && acfg.z_fraction < 1.0) {
        Rng z_rng(cfg.run.seed, kZSetStream + static_cast<uint64_t>(rep));
        std::vector<int> z = rmia_population(eval_signals.num_samples(), acfg.z_fraction, z_rng);
        sv = attack_rmia(eval_signals, acfg, z);
      } else {
        sv = run_signal_attack(eval_signals, acfg);
      }

      RocCurve roc = roc_auc(sv.scores, member);
      OperatingPoint at1 = tpr_at_fpr(sv.scores, member, 0.01);
      OperatingPoint at01 = tpr_at_fpr(sv.scores, member, 0.001);

      std::string stem = entry.name + "_" + mode_name(acfg.mode) + "_rep" + std::to_string(rep);
      write_scores_csv(out_path("scores_" + stem + ".csv"), sv, member);
      write_roc_csv(out_path("roc_" + stem + ".csv"), roc);

      rows.push_back({entry.name, mode_name(acfg.mode), roc.auc, at1.tpr, at01.tpr,
                      static_cast<int>(eval_nodes.size()), cfg.shadow_models, target.init_seed});
    }
  }

  {
    std::ofstream f(out_path("summary.csv"));
    if (!f) throw std::runtime_error("cannot open summary.csv for writing");
    f << "attack,mode,auc,tpr_at_1pct,tpr_at_0.1pct,n,k,seed\n";
    for (const SummaryRow& r : rows) {
      f << r.attack << ',' << r.mode << ',' << format_double(r.auc) << ','
        << format_double(r.tpr1) << ',' << format_double(r.tpr01) << ',' << r.n << ',' << r.k
        << ',' << r.seed << '\n';
    }
  }
  {
    std::ofstream f(out_path("manifest.txt"));
    if (!f) throw std::runtime_error("cannot open manifest.txt for writing");
    f << manifest.str();
  }

  // Aggregate table: mean +/- population std over repetitions.
  log << "attack       mode     AUC                TPR@1%             TPR@0.1%\n";
  for (const AttackEntry& entry : cfg.attacks) {
    for (const char* mode : {"online", "offline"}) {
      std::vector<double> aucs, t1s, t01s;
      for (const SummaryRow& r : rows) {
        if (r.attack == entry.name && r.mode == mode) {
          aucs.push_back(r.auc);
          t1s.push_back(r.tpr1);
          t01s.push_back(r.tpr01);
        }
      }
      if (aucs.empty()) continue;
      MeanStd a = mean_std(aucs), t1 = mean_std(t1s), t01 = mean_std(t01s);
      char line[160];
      std::snprintf(line, sizeof(line), "%-12s %-8s %s +/- %s  %s +/- %s  %s +/- %s\n",
                    entry.name.c_str(), mode, fmt(a.mean).c_str(), fmt(a.std).c_str(),
                    fmt(t1.mean).c_str(), fmt(t1.std).c_str(), fmt(t01.mean).c_str(),
                    fmt(t01.std).c_str());
      log << line;
    }
  }
}

double run_mcmc_check(const ExperimentConfig& cfg, std::ostream& log) {
  Graph g = cfg.make_graph();
  if (g.n > 14) throw ConfigError("mcmc-check: graph must have at most 14 nodes");
  if (cfg.mcmc.target_node >= g.n) throw ConfigError("mcmc-check: target node out of range");

  uint64_t pool_seed = derive_seed(cfg.run.seed, kPoolSalt);
  ShadowPool pool = train_shadow_pool(g, cfg.adversary.arch, cfg.adversary.to_train_config(0),
                                      cfg.shadow_models, pool_seed, cfg.run.jobs);
  TargetModel target = train_target(cfg, g, kTargetSplitStream, kTargetInitSalt);

  int v = cfg.mcmc.target_node;
  std::vector<double> exact = enumerate_exact(v, target.params, pool, g);

  SamplerConfig scfg;
  scfg.kind = SamplerKind::kMcmc;
  scfg.num_samples = cfg.mcmc.samples;
  scfg.flip_fraction = cfg.mcmc.flip_fraction;
  scfg.burn_in = cfg.mcmc.burn_in;
  scfg.thinning = cfg.mcmc.thinning;
  Rng rng(cfg.run.seed, kMcmcStream);
  std::vector<MembershipMask> samples = sample_mcmc(scfg, v, target.params, pool, g, rng);

  std::vector<double> freq(exact.size(), 0.0);
  for (const MembershipMask& m : samples) freq[static_cast<size_t>(mask_code(m, v))] += 1.0;
  for (double& f : freq) f /= static_cast<double>(samples.size());
  double tv = 0.0;
  for (size_t i = 0; i < exact.size(); ++i) tv += std::fabs(exact[i] - freq[i]);
  tv *= 0.5;

  log << "configurations=" << exact.size() << " samples=" << samples.size()
      << " burn_in=" << cfg.mcmc.burn_in << " thinning=" << cfg.mcmc.thinning << "\n";
  log << "total_variation=" << format_double(tv) << "\n";
  return tv;
}

void run_threshold(const ExperimentConfig& cfg, std::ostream& log) {
  preflight(cfg);
  int total = cfg.threshold.simulated_targets + cfg.shadow_models;
  if (total % 2 != 0)
    throw ConfigError("threshold: simulated_targets + shadow_models must be even");
  Graph g = cfg.make_graph();

  uint64_t pool_seed = derive_seed(cfg.run.seed, kPoolSalt);
  ShadowPool pool = train_shadow_pool(g, cfg.adversary.arch, cfg.adversary.to_train_config(0),
                                      total, pool_seed, cfg.run.jobs);
  std::vector<int> attacker_ids;
  for (int k = cfg.threshold.simulated_targets; k < total; ++k) attacker_ids.push_back(k);
  ShadowPool attackers = subset_pool(pool, attacker_ids);

  std::vector<TargetModel> fresh(static_cast<size_t>(cfg.threshold.fresh_targets));
  parallel_for(cfg.threshold.fresh_targets, cfg.run.jobs, [&](int t) {
    fresh[static_cast<size_t>(t)] =
        train_target(cfg, g, kFreshSplitStream + static_cast<uint64_t>(t),
                     kFreshInitSalt + static_cast<uint64_t>(t));
  });

  std::vector<int> all_nodes(static_cast<size_t>(g.n));
  std::iota(all_nodes.begin(), all_nodes.end(), 0);

  for (const AttackEntry& entry : cfg.attacks) {
    AttackConfig acfg = entry.cfg;
    if (entry.alpha_auto && acfg.method != AttackMethod::kGBase)
      acfg.alpha = select_offline_alpha(attackers, g, acfg);

    ThresholdEstimate est = estimate_threshold(pool, g, acfg, cfg.threshold.target_fpr,
                                               cfg.threshold.simulated_targets, cfg.run.seed);
    double tau = (cfg.threshold.rule == "max") ? est.max : est.mean;

    double fpr_sum = 0.0, tpr_sum = 0.0;
    for (int t = 0; t < cfg.threshold.fresh_targets; ++t) {
      const TargetModel& target = fresh[static_cast<size_t>(t)];
      SignalMatrix sig = build_signal_matrix(target.params, target.train_mask, attackers, g,
                                             all_nodes, SignalMode::kZeroHop);
      ScoreVector sv;
      if (acfg.method == AttackMethod::kGBase) {
        SamplerConfig scfg;
        scfg.kind = acfg.sampler;
        scfg.prior = acfg.prior;
        scfg.num_samples = acfg.mask_samples;
        MaskSampler sampler = make_mask_sampler(scfg, g, target.params, attackers, &sig,
                                                derive_seed(cfg.run.seed, kSamplerSalt));
        sv = attack_gbase(target.params, attackers, g, all_nodes, acfg, sampler);
      } else {
        sv = run_signal_attack(sig, acfg);
      }
      int64_t tp = 0, fp = 0, pos = 0, neg = 0;
      for (int i = 0; i < g.n; ++i) {
        bool is_member = target.train_mask.test(i);
        (is_member ? pos : neg) += 1;
        if (sv.scores[static_cast<size_t>(i)] > tau) (is_member ? tp : fp) += 1;
      }
      fpr_sum += static_cast<double>(fp) / static_cast<double>(neg);
      tpr_sum += static_cast<double>(tp) / static_cast<double>(pos);
    }
    double mean_fpr = fpr_sum / cfg.threshold.fresh_targets;
    double mean_tpr = tpr_sum / cfg.threshold.fresh_targets;

    log << "attack " << entry.name << " " << mode_name(acfg.mode)
        << ": threshold mean=" << format_double(est.mean) << " max=" << format_double(est.max)
        << " (rule=" << cfg.threshold.rule << ", target_fpr=" << cfg.threshold.target_fpr << ")\n";
    log << "  realized over " << cfg.threshold.fresh_targets
        << " fresh targets: fpr=" << format_double(mean_fpr) << " tpr=" << format_double(mean_tpr)
        << "\n";
  }
}

void run_attack_signals(const std::string& signals_path, const AttackEntry& attack,
                        const std::string& out_path, std::ostream& log) {
  if (attack.cfg.method == AttackMethod::kGBase)
    throw ConfigError("attack-signals: this attack needs graph access, not just signals");
  if (attack.alpha_auto)
    throw ConfigError("attack-signals: alpha=auto needs a shadow pool; give alpha explicitly");
  SignalMatrix s = read_signals_csv(signals_path);
  ScoreVector sv = run_signal_attack(s, attack.cfg);
  write_scores_csv(out_path, sv, s.member);
  log << "scored " << s.num_samples() << " samples with " << attack.name << " ("
      << mode_name(attack.cfg.mode) << ") -> " << out_path << "\n";
}

}  // namespace miaudit
