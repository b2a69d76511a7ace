#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "miaudit/graph.hpp"
#include "miaudit/models.hpp"
#include "miaudit/shadow.hpp"

namespace miaudit {

enum class AttackMethod { kBase, kGBase, kRmia, kLira, kMca };
enum class AttackMode { kOnline, kOffline };
enum class SamplerKind { kModelIndependent, kMcmc, kZeroHopMia };

const char* attack_name(AttackMethod m);
AttackMethod parse_attack(const std::string& name);
const char* mode_name(AttackMode m);
AttackMode parse_mode(const std::string& name);
const char* sampler_name(SamplerKind k);
SamplerKind parse_sampler(const std::string& name);

struct AttackConfig {
  AttackMethod method = AttackMethod::kBase;
  AttackMode mode = AttackMode::kOnline;
  double prior = 0.5;        // membership prior, in (0,1)
  double alpha = 1.0;        // offline shadow-term scaling, in [0,1]
  double gamma = 1.0;        // pairwise ratio threshold (rmia), >= 0
  double z_fraction = 1.0;   // fraction of samples used as the rmia population
  int mask_samples = 8;      // membership-configuration samples (gbase)
  SamplerKind sampler = SamplerKind::kModelIndependent;
  double lira_variance_floor = 1e-8;
  int neighborhood_depth = 2;  // matches the model's layer count

  void validate() const;
};

/// Per-target attack scores. probability is true when scores are posterior
/// membership probabilities (base/gbase) rather than free-scale statistics.
struct ScoreVector {
  AttackMethod method = AttackMethod::kBase;
  AttackMode mode = AttackMode::kOnline;
  bool probability = false;
  std::vector<int> sample_ids;
  std::vector<double> scores;
};

double logsumexp(std::span<const double> xs);
double sigmoid(double x);

/// Posterior membership probability from one target loss and the shadow
/// losses: sigmoid of -loss minus the scaled log-mean of exp(-shadow
/// losses) plus the prior log-odds.
double base_score(double target_loss, std::span<const double> shadow_losses, double prior,
                  double alpha);

/// Ratio of the target confidence to the mean shadow confidence,
/// exp(-target_loss - alpha * log-mean-exp(-shadow losses)).
double mca_score(double target_loss, std::span<const double> shadow_losses, double alpha = 1.0);

ScoreVector attack_base(const SignalMatrix& s, const AttackConfig& cfg);
ScoreVector attack_mca(const SignalMatrix& s, const AttackConfig& cfg);

/// population holds row indices forming the comparison set Z; empty means
/// all rows. Scores are the fraction of Z whose confidence ratio against
/// the row is at least gamma.
ScoreVector attack_rmia(const SignalMatrix& s, const AttackConfig& cfg,
                        std::span<const int> population = {});

/// Gaussian likelihood-ratio scores on logit-scaled confidences. Online
/// needs >= 2 in- and out-models per sample; offline >= 2 out-models.
ScoreVector attack_lira(const SignalMatrix& s, const AttackConfig& cfg);

/// Runs any signal-based method (base/mca/rmia/lira) on a signal matrix.
ScoreVector run_signal_attack(const SignalMatrix& s, const AttackConfig& cfg);

/// Loss-based signal of a model for target v under the membership
/// configuration `others` (whose bit v must be clear): the loss of v with
/// v included, plus the change the inclusion causes in the losses of
/// member nodes within `depth` hops of v.
double graph_signal(const ModelParams& params, const Graph& g, int v, const MembershipMask& others,
                    int depth);

/// Draws membership configurations over the non-target nodes; bit
/// `target_node` is always clear in every returned mask.
using MaskSampler = std::function<std::vector<MembershipMask>(int target_node)>;

ScoreVector attack_gbase(const ModelParams& target, const ShadowPool& pool, const Graph& g,
                         std::span<const int> targets, const AttackConfig& cfg,
                         const MaskSampler& sampler);

// Scores CSV: sample_id,member,score,method,mode
void write_scores_csv(std::ostream& out, const ScoreVector& sv, std::span<const uint8_t> member);
void write_scores_csv(const std::string& path, const ScoreVector& sv,
                      std::span<const uint8_t> member);

}  // namespace miaudit
