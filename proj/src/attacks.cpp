#include "miaudit/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace miaudit {

const char* attack_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::kBase: return "base";
    case AttackMethod::kGBase: return "gbase";
    case AttackMethod::kRmia: return "rmia";
    case AttackMethod::kLira: return "lira";
    case AttackMethod::kMca: return "mca";
  }
  return "?";
}

AttackMethod parse_attack(const std::string& name) {
  if (name == "base") return AttackMethod::kBase;
  if (name == "gbase") return AttackMethod::kGBase;
  if (name == "rmia") return AttackMethod::kRmia;
  if (name == "lira") return AttackMethod::kLira;
  if (name == "mca") return AttackMethod::kMca;
  throw std::invalid_argument("unknown attack: " + name);
}

const char* mode_name(AttackMode m) { return m == AttackMode::kOnline ? "online" : "offline"; }

AttackMode parse_mode(const std::string& name) {
  if (name == "online") return AttackMode::kOnline;
  if (name == "offline") return AttackMode::kOffline;
  throw std::invalid_argument("unknown attack mode: " + name);
}

const char* sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::kModelIndependent: return "model_independent";
    case SamplerKind::kMcmc: return "mcmc";
    case SamplerKind::kZeroHopMia: return "zero_hop_mia";
  }
  return "?";
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "model_independent") return SamplerKind::kModelIndependent;
  if (name == "mcmc") return SamplerKind::kMcmc;
  if (name == "zero_hop_mia") return SamplerKind::kZeroHopMia;
  throw std::invalid_argument("unknown sampler: " + name);
}

void AttackConfig::validate() const {
  if (prior <= 0.0 || prior >= 1.0) throw std::invalid_argument("attack: prior must lie in (0,1)");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("attack: alpha must lie in [0,1]");
  if (gamma < 0.0) throw std::invalid_argument("attack: gamma must be nonnegative");
  if (z_fraction <= 0.0 || z_fraction > 1.0)
    throw std::invalid_argument("attack: z_fraction must lie in (0,1]");
  if (mask_samples < 1) throw std::invalid_argument("attack: mask_samples must be >= 1");
  if (lira_variance_floor <= 0.0)
    throw std::invalid_argument("attack: variance floor must be positive");
  if (neighborhood_depth < 1) throw std::invalid_argument("attack: depth must be >= 1");
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("logsumexp: empty input");
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

/// log((1/K) sum_k exp(-loss_k)), the Monte-Carlo shadow term.
double log_mean_shadow_conf(std::span<const double> shadow_losses) {
  if (shadow_losses.empty()) throw std::invalid_argument("attack: empty shadow set");
  std::vector<double> neg(shadow_losses.size());
  for (size_t i = 0; i < shadow_losses.size(); ++i) neg[i] = -shadow_losses[i];
  return logsumexp(neg) - std::log(static_cast<double>(shadow_losses.size()));
}

double log_odds(double prior) { return std::log(prior / (1.0 - prior)); }

}  // namespace

double base_score(double target_loss, std::span<const double> shadow_losses, double prior,
                  double alpha) {
  if (prior <= 0.0 || prior >= 1.0) throw std::invalid_argument("base_score: prior must lie in (0,1)");
  return sigmoid(-target_loss - alpha * log_mean_shadow_conf(shadow_losses) + log_odds(prior));
}

double mca_score(double target_loss, std::span<const double> shadow_losses, double alpha) {
  return std::exp(-target_loss - alpha * log_mean_shadow_conf(shadow_losses));
}

namespace {

/// Shadow losses for one row, restricted to out-models when offline.
std::vector<double> row_shadow_losses(const SignalMatrix& s, int i, AttackMode mode) {
  int k = s.num_shadows();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (mode == AttackMode::kOffline && s.in_model(i, j)) continue;
    out.push_back(s.shadow_loss(i, j));
  }
  return out;
}

double effective_alpha(const AttackConfig& cfg) {
  return cfg.mode == AttackMode::kOnline ? 1.0 : cfg.alpha;
}

ScoreVector make_scores(const SignalMatrix& s, const AttackConfig& cfg, bool probability) {
  ScoreVector sv;
  sv.method = cfg.method;
  sv.mode = cfg.mode;
  sv.probability = probability;
  sv.sample_ids = s.sample_ids;
  sv.scores.resize(static_cast<size_t>(s.num_samples()));
  return sv;
}

}  // namespace

ScoreVector attack_base(const SignalMatrix& s, const AttackConfig& cfg) {
  s.check();
  cfg.validate();
  double alpha = effective_alpha(cfg);
  ScoreVector sv = make_scores(s, cfg, true);
  for (int i = 0; i < s.num_samples(); ++i) {
    std::vector<double> shadows = row_shadow_losses(s, i, cfg.mode);
    sv.scores[static_cast<size_t>(i)] =
        base_score(s.target_loss[static_cast<size_t>(i)], shadows, cfg.prior, alpha);
  }
  return sv;
}

ScoreVector attack_mca(const SignalMatrix& s, const AttackConfig& cfg) {
  s.check();
  cfg.validate();
  double alpha = effective_alpha(cfg);
  ScoreVector sv = make_scores(s, cfg, false);
  for (int i = 0; i < s.num_samples(); ++i) {
    std::vector<double> shadows = row_shadow_losses(s, i, cfg.mode);
    sv.scores[static_cast<size_t>(i)] =
        mca_score(s.target_loss[static_cast<size_t>(i)], shadows, alpha);
  }
  return sv;
}

ScoreVector attack_rmia(const SignalMatrix& s, const AttackConfig& cfg,
                        std::span<const int> population) {
  s.check();
  cfg.validate();
  double alpha = effective_alpha(cfg);
  int n = s.num_samples();

  std::vector<int> all;
  if (population.empty()) {
    all.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    population = all;
  }
  for (int j : population)
    if (j < 0 || j >= n) throw std::invalid_argument("rmia: population index out of range");

  // Everything happens on log confidence ratios: ratio >= gamma becomes
  // log_mca_j <= log_mca_i - log(gamma).
  std::vector<double> log_mca(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> shadows = row_shadow_losses(s, i, cfg.mode);
    log_mca[static_cast<size_t>(i)] =
        -s.target_loss[static_cast<size_t>(i)] - alpha * log_mean_shadow_conf(shadows);
  }

  ScoreVector sv = make_scores(s, cfg, false);
  if (cfg.gamma == 0.0) {  // any positive ratio clears a zero threshold
    std::fill(sv.scores.begin(), sv.scores.end(), 1.0);
    return sv;
  }
  std::vector<double> pop_sorted;
  pop_sorted.reserve(population.size());
  for (int j : population) pop_sorted.push_back(log_mca[static_cast<size_t>(j)]);
  std::sort(pop_sorted.begin(), pop_sorted.end());
  double log_gamma = std::log(cfg.gamma);
  double inv = 1.0 / static_cast<double>(pop_sorted.size());
  for (int i = 0; i < n; ++i) {
    double t = log_mca[static_cast<size_t>(i)] - log_gamma;
    auto it = std::upper_bound(pop_sorted.begin(), pop_sorted.end(), t);
    sv.scores[static_cast<size_t>(i)] = static_cast<double>(it - pop_sorted.begin()) * inv;
  }
  return sv;
}

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

MeanVar mean_var(std::span<const double> xs) {
  MeanVar mv;
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
  mv.var /= static_cast<double>(xs.size());
  return mv;
}

double logit_confidence(double loss) {
  double p = std::exp(-loss);
  p = std::min(std::max(p, 1e-12), 1.0 - 1e-7);
  return std::log(p) - std::log(1.0 - p);
}

double gaussian_log_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * 3.14159265358979323846 * var) - (x - mean) * (x - mean) / (2.0 * var);
}

}  // namespace

ScoreVector attack_lira(const SignalMatrix& s, const AttackConfig& cfg) {
  s.check();
  cfg.validate();
  int k = s.num_shadows();
  ScoreVector sv = make_scores(s, cfg, false);
  for (int i = 0; i < s.num_samples(); ++i) {
    std::vector<double> in_phi, out_phi;
    for (int j = 0; j < k; ++j) {
      double phi = logit_confidence(s.shadow_loss(i, j));
      (s.in_model(i, j) ? in_phi : out_phi).push_back(phi);
    }
    if (static_cast<int>(out_phi.size()) < 2)
      throw std::invalid_argument("lira: need at least 2 out-models per sample");
    if (cfg.mode == AttackMode::kOnline && static_cast<int>(in_phi.size()) < 2)
      throw std::invalid_argument("lira: online needs at least 2 in-models per sample");

    double phi_t = logit_confidence(s.target_loss[static_cast<size_t>(i)]);
    MeanVar out = mean_var(out_phi);
    double out_var = std::max(out.var, cfg.lira_variance_floor);
    if (cfg.mode == AttackMode::kOnline) {
      MeanVar in = mean_var(in_phi);
      double in_var = std::max(in.var, cfg.lira_variance_floor);
      sv.scores[static_cast<size_t>(i)] =
          gaussian_log_pdf(phi_t, in.mean, in_var) - gaussian_log_pdf(phi_t, out.mean, out_var);
    } else {
      sv.scores[static_cast<size_t>(i)] = -(phi_t - out.mean) / std::sqrt(out_var);
    }
  }
  return sv;
}

ScoreVector run_signal_attack(const SignalMatrix& s, const AttackConfig& cfg) {
  switch (cfg.method) {
    case AttackMethod::kBase: return attack_base(s, cfg);
    case AttackMethod::kMca: return attack_mca(s, cfg);
    case AttackMethod::kRmia: return attack_rmia(s, cfg);
    case AttackMethod::kLira: return attack_lira(s, cfg);
    case AttackMethod::kGBase: break;
  }
  throw std::invalid_argument("run_signal_attack: method needs graph access");
}

namespace {

/// Signal of one model for target v: loss of v under the with-v adjacency
/// plus the member-neighborhood loss differences between the with-v and
/// without-v adjacencies.
double signal_core(NodeLossEvaluator& eval, const Graph& g, const PropagationMatrix* with_v,
                   const PropagationMatrix* without_v, int v,
                   std::span<const int> member_neighborhood) {
  double s = eval.loss(with_v, v, g.labels[static_cast<size_t>(v)]);
  for (int u : member_neighborhood) {
    int y = g.labels[static_cast<size_t>(u)];
    s += eval.loss(with_v, u, y) - eval.loss(without_v, u, y);
  }
  return s;
}

}  // namespace

double graph_signal(const ModelParams& params, const Graph& g, int v, const MembershipMask& others,
                    int depth) {
  if (others.size() != g.n) throw std::invalid_argument("graph_signal: mask length mismatch");
  if (others.test(v)) throw std::invalid_argument("graph_signal: target bit must be clear");
  MaskedAdjacency with_v = masked_adjacency(g, others.with(v));
  MaskedAdjacency without_v = drop_node(with_v, v);
  PropagationMatrix prop_with(with_v), prop_without(without_v);
  std::vector<int> nbhd;
  for (int u : l_hop_neighborhood(g, v, depth))
    if (others.test(u)) nbhd.push_back(u);
  NodeLossEvaluator eval(params, g.features);
  return signal_core(eval, g, &prop_with, &prop_without, v, nbhd);
}

ScoreVector attack_gbase(const ModelParams& target, const ShadowPool& pool, const Graph& g,
                         std::span<const int> targets, const AttackConfig& cfg,
                         const MaskSampler& sampler) {
  cfg.validate();
  if (pool.num_models() == 0) throw std::invalid_argument("gbase: empty shadow pool");
  if (!sampler) throw std::invalid_argument("gbase: no sampler");
  double alpha = effective_alpha(cfg);
  double prior_term = log_odds(cfg.prior);

  NodeLossEvaluator target_eval(target, g.features);
  std::vector<NodeLossEvaluator> shadow_evals;
  shadow_evals.reserve(static_cast<size_t>(pool.num_models()));
  for (const ModelParams& m : pool.models) shadow_evals.emplace_back(m, g.features);

  ScoreVector sv;
  sv.method = AttackMethod::kGBase;
  sv.mode = cfg.mode;
  sv.probability = true;
  sv.sample_ids.assign(targets.begin(), targets.end());
  sv.scores.resize(targets.size());

  std::vector<int> all_shadows(static_cast<size_t>(pool.num_models()));
  for (int j = 0; j < pool.num_models(); ++j) all_shadows[static_cast<size_t>(j)] = j;

  for (size_t ti = 0; ti < targets.size(); ++ti) {
    int v = targets[ti];
    std::vector<int> shadows =
        (cfg.mode == AttackMode::kOnline) ? all_shadows : out_model_indices(pool, v);
    if (shadows.empty()) throw std::invalid_argument("gbase: no usable shadow models");
    std::vector<int> nbhd_full = l_hop_neighborhood(g, v, cfg.neighborhood_depth);

    std::vector<MembershipMask> masks = sampler(v);
    if (static_cast<int>(masks.size()) != cfg.mask_samples)
      throw std::invalid_argument("gbase: sampler returned wrong mask count");

    double acc = 0.0;
    std::vector<double> neg_shadow_signals(shadows.size());
    for (const MembershipMask& others : masks) {
      if (others.size() != g.n || others.test(v))
        throw std::invalid_argument("gbase: sampler produced an invalid mask");
      MaskedAdjacency with_v = masked_adjacency(g, others.with(v));
      MaskedAdjacency without_v = drop_node(with_v, v);
      PropagationMatrix prop_with(with_v), prop_without(without_v);
      std::vector<int> nbhd;
      for (int u : nbhd_full)
        if (others.test(u)) nbhd.push_back(u);

      double target_signal = signal_core(target_eval, g, &prop_with, &prop_without, v, nbhd);
      for (size_t j = 0; j < shadows.size(); ++j) {
        neg_shadow_signals[j] = -signal_core(shadow_evals[static_cast<size_t>(shadows[j])], g,
                                             &prop_with, &prop_without, v, nbhd);
      }
      double shadow_term =
          logsumexp(neg_shadow_signals) - std::log(static_cast<double>(shadows.size()));
      acc += sigmoid(-target_signal - alpha * shadow_term + prior_term);
    }
    sv.scores[ti] = acc / static_cast<double>(cfg.mask_samples);
  }
  return sv;
}

void write_scores_csv(std::ostream& out, const ScoreVector& sv, std::span<const uint8_t> member) {
  if (member.size() != sv.scores.size())
    throw std::invalid_argument("scores csv: member bits length mismatch");
  out << "sample_id,member,score,method,mode\n";
  for (size_t i = 0; i < sv.scores.size(); ++i) {
    out << sv.sample_ids[i] << ',' << int(member[i]) << ',' << format_double(sv.scores[i]) << ','
        << attack_name(sv.method) << ',' << mode_name(sv.mode) << '\n';
  }
}

void write_scores_csv(const std::string& path, const ScoreVector& sv,
                      std::span<const uint8_t> member) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_scores_csv(f, sv, member);
}

}  // namespace miaudit
