#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "miaudit/attacks.hpp"
#include "miaudit/shadow.hpp"

namespace miaudit {

/// Staircase ROC from sweeping every distinct score threshold, with
/// endpoints (0,0) and (1,1). No interpolation. AUC counts tied
/// positive/negative pairs half.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// Predictions are positive when score > threshold.
RocCurve roc_auc(std::span<const double> scores, std::span<const uint8_t> member);

struct OperatingPoint {
  double tpr = 0.0;
  double fpr = 0.0;
  double threshold = 0.0;
};

/// Among thresholds whose realized false-positive rate does not exceed
/// target_fpr, returns the one with the largest realized rate.
OperatingPoint tpr_at_fpr(std::span<const double> scores, std::span<const uint8_t> member,
                          double target_fpr);

struct ThresholdEstimate {
  std::vector<double> thresholds;  // one per simulated target
  double mean = 0.0;
  double max = 0.0;
  double target_fpr = 0.0;
};

/// Designates the first `simulated_targets` pool models as targets with
/// known ground truth and attacks each with the remaining models, reading
/// off the threshold that realizes the wanted false-positive rate.
ThresholdEstimate estimate_threshold(const ShadowPool& pool, const Graph& g,
                                     const AttackConfig& cfg, double target_fpr,
                                     int simulated_targets, uint64_t seed);

struct EquivalenceResult {
  bool equivalent = false;
  double max_violation = 0.0;  // largest b-gap over discordant pairs
};

/// True when no pair of samples is strictly ordered one way by a and the
/// other way by b (ties are compatible with anything). Equivalent score
/// functions produce identical hard predictions under matched thresholds.
EquivalenceResult check_equivalence(std::span<const double> a, std::span<const double> b);

/// Upper bound on the membership posterior achievable against an
/// epsilon-differentially-private trainer, given membership prior lambda.
double dp_bound(double epsilon, double lambda);

// ROC CSV: "fpr,tpr" rows.
void write_roc_csv(std::ostream& out, const RocCurve& roc);
void write_roc_csv(const std::string& path, const RocCurve& roc);

}  // namespace miaudit
