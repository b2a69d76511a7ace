#include "miaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "miaudit/rng.hpp"
#include "miaudit/sampling.hpp"

namespace miaudit {

namespace {

struct SweepPoint {
  double threshold;  // predictions positive strictly above this value
  int64_t tp;
  int64_t fp;
};

// Walks distinct score values descending. Point k has threshold equal to
// the next lower score (or just below the minimum for the final all-
// positive point).
std::vector<SweepPoint> threshold_sweep(std::span<const double> scores,
                                        std::span<const uint8_t> member, int64_t* positives,
                                        int64_t* negatives) {
  if (scores.size() != member.size() || scores.empty())
    throw std::invalid_argument("roc: scores and labels must align and be nonempty");
  int64_t p = 0, q = 0;
  for (uint8_t m : member) (m ? p : q) += 1;
  if (p == 0 || q == 0) throw std::invalid_argument("roc: both classes must be present");
  *positives = p;
  *negatives = q;

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  std::vector<SweepPoint> points;
  points.push_back({scores[order[0]], 0, 0});  // threshold at max: nothing positive
  int64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (member[order[i]] ? tp : fp) += 1;
      ++i;
    }
    double next = (i < order.size())
                      ? scores[order[i]]
                      : std::nextafter(s, -std::numeric_limits<double>::infinity());
    points.push_back({next, tp, fp});
  }
  return points;
}

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const uint8_t> member) {
  int64_t p = 0, q = 0;
  std::vector<SweepPoint> points = threshold_sweep(scores, member, &p, &q);

  RocCurve roc;
  roc.fpr.reserve(points.size());
  roc.tpr.reserve(points.size());
  for (const SweepPoint& pt : points) {
    roc.fpr.push_back(static_cast<double>(pt.fp) / static_cast<double>(q));
    roc.tpr.push_back(static_cast<double>(pt.tp) / static_cast<double>(p));
  }

  // Integer-exact AUC: 2*concordant + tied positive/negative pairs.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  int64_t numerator2 = 0;
  int64_t negatives_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    double s = scores[order[i]];
    int64_t pos_tied = 0, neg_tied = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (member[order[i]] ? pos_tied : neg_tied) += 1;
      ++i;
    }
    numerator2 += pos_tied * (2 * negatives_below + neg_tied);
    negatives_below += neg_tied;
  }
  roc.auc = static_cast<double>(numerator2) / (2.0 * static_cast<double>(p) * static_cast<double>(q));
  return roc;
}

OperatingPoint tpr_at_fpr(std::span<const double> scores, std::span<const uint8_t> member,
                          double target_fpr) {
  if (target_fpr <= 0.0 || target_fpr > 1.0)
    throw std::invalid_argument("tpr_at_fpr: target rate must lie in (0,1]");
  int64_t p = 0, q = 0;
  std::vector<SweepPoint> points = threshold_sweep(scores, member, &p, &q);
  OperatingPoint best{0.0, 0.0, points.front().threshold};
  for (const SweepPoint& pt : points) {
    double fpr = static_cast<double>(pt.fp) / static_cast<double>(q);
    if (fpr > target_fpr) break;  // sweep is nondecreasing in fpr
    best = {static_cast<double>(pt.tp) / static_cast<double>(p), fpr, pt.threshold};
  }
  return best;
}

ThresholdEstimate estimate_threshold(const ShadowPool& pool, const Graph& g,
                                     const AttackConfig& cfg, double target_fpr,
                                     int simulated_targets, uint64_t seed) {
  if (simulated_targets < 1) throw std::invalid_argument("estimate_threshold: need >= 1 targets");
  int attackers = pool.num_models() - simulated_targets;
  if (attackers < 2)
    throw std::invalid_argument("estimate_threshold: pool too small for the simulated targets");

  std::vector<int> keep;
  for (int k = simulated_targets; k < pool.num_models(); ++k) keep.push_back(k);
  ShadowPool attack_pool = subset_pool(pool, keep);

  std::vector<int> all_nodes(static_cast<size_t>(g.n));
  std::iota(all_nodes.begin(), all_nodes.end(), 0);

  ThresholdEstimate est;
  est.target_fpr = target_fpr;
  for (int s = 0; s < simulated_targets; ++s) {
    const ModelParams& target = pool.models[static_cast<size_t>(s)];
    const MembershipMask& truth = pool.train_masks[static_cast<size_t>(s)];
    ScoreVector scores;
    SignalMatrix sig =
        build_signal_matrix(target, truth, attack_pool, g, all_nodes, SignalMode::kZeroHop);
    if (cfg.method == AttackMethod::kGBase) {
      SamplerConfig scfg;
      scfg.kind = cfg.sampler;
      scfg.prior = cfg.prior;
      scfg.num_samples = cfg.mask_samples;
      MaskSampler sampler = make_mask_sampler(scfg, g, target, attack_pool, &sig,
                                              derive_seed(seed, static_cast<uint64_t>(s)));
      scores = attack_gbase(target, attack_pool, g, all_nodes, cfg, sampler);
    } else {
      scores = run_signal_attack(sig, cfg);
    }
    std::vector<uint8_t> member(static_cast<size_t>(g.n));
    for (int v = 0; v < g.n; ++v) member[static_cast<size_t>(v)] = truth.test(v) ? 1 : 0;
    est.thresholds.push_back(tpr_at_fpr(scores.scores, member, target_fpr).threshold);
  }
  est.mean = std::accumulate(est.thresholds.begin(), est.thresholds.end(), 0.0) /
             static_cast<double>(est.thresholds.size());
  est.max = *std::max_element(est.thresholds.begin(), est.thresholds.end());
  return est;
}

EquivalenceResult check_equivalence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("check_equivalence: length mismatch");
  EquivalenceResult res{true, 0.0};
  if (a.empty()) return res;

  std::vector<size_t> order(a.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return a[i] < a[j]; });

  // Group by equal a; concordance requires every earlier block's max b to
  // stay at or below every later block's min b.
  std::vector<double> block_min, block_max;
  size_t i = 0;
  while (i < order.size()) {
    double av = a[order[i]];
    double mn = b[order[i]], mx = b[order[i]];
    while (i < order.size() && a[order[i]] == av) {
      mn = std::min(mn, b[order[i]]);
      mx = std::max(mx, b[order[i]]);
      ++i;
    }
    block_min.push_back(mn);
    block_max.push_back(mx);
  }
  // Suffix minimum over later blocks gives the worst partner per block.
  double suffix_min = std::numeric_limits<double>::infinity();
  for (size_t k = block_min.size(); k-- > 1;) {
    suffix_min = std::min(suffix_min, block_min[k]);
    double gap = block_max[k - 1] - suffix_min;
    if (gap > 0.0) {
      res.equivalent = false;
      res.max_violation = std::max(res.max_violation, gap);
    }
  }
  return res;
}

double dp_bound(double epsilon, double lambda) {
  if (epsilon < 0.0) throw std::invalid_argument("dp_bound: epsilon must be nonnegative");
  if (lambda <= 0.0 || lambda >= 1.0) throw std::invalid_argument("dp_bound: lambda must lie in (0,1)");
  // sigmoid(epsilon + log-odds(lambda)) in a form that is exact at
  // epsilon = 0 and never overflows.
  return lambda / (lambda + std::exp(-epsilon) * (1.0 - lambda));
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "fpr,tpr\n";
  for (size_t i = 0; i < roc.fpr.size(); ++i)
    out << format_double(roc.fpr[i]) << ',' << format_double(roc.tpr[i]) << '\n';
}

void write_roc_csv(const std::string& path, const RocCurve& roc) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_roc_csv(f, roc);
}

}  // namespace miaudit
