#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "miaudit/graph.hpp"
#include "miaudit/models.hpp"

namespace miaudit {

// K models trained on complementary uniform half-splits of the node
// population: split j yields models 2j (on the half) and 2j+1 (on the
// complement), so every node is a training member of exactly K/2 models.
struct ShadowPool {
  Arch arch = Arch::kLinear;
  TrainConfig cfg;
  uint64_t seed = 0;
  std::vector<ModelParams> models;
  std::vector<MembershipMask> train_masks;  // one per model

  int num_models() const { return static_cast<int>(models.size()); }
  bool in_model(int k, int v) const { return train_masks[static_cast<size_t>(k)].test(v); }
};

ShadowPool train_shadow_pool(const Graph& g, Arch arch, const TrainConfig& cfg, int num_models,
                             uint64_t seed, int jobs = 1);

/// Indices k with node v outside model k's training set; always K/2 of them.
std::vector<int> out_model_indices(const ShadowPool& pool, int v);
std::vector<int> in_model_indices(const ShadowPool& pool, int v);

/// Pool restricted to the given model indices (order preserved).
ShadowPool subset_pool(const ShadowPool& pool, std::span<const int> keep);

enum class SignalMode {
  kZeroHop,     // losses on the edgeless adjacency (node in isolation)
  kTrainGraph,  // each model queried on its own training-mask adjacency
};

const char* signal_mode_name(SignalMode m);

/// Per-sample target loss, shadow losses, in/out flags and ground-truth
/// membership: the interchange format between model training and the
/// score functions.
struct SignalMatrix {
  SignalMode mode = SignalMode::kZeroHop;
  std::vector<int> sample_ids;
  std::vector<uint8_t> member;       // ground truth per sample
  std::vector<double> target_loss;   // per sample
  Matrix shadow_loss;                // num_samples x num_shadows
  std::vector<uint8_t> in_bits;      // num_samples x num_shadows, row-major

  int num_samples() const { return static_cast<int>(sample_ids.size()); }
  int num_shadows() const { return shadow_loss.cols; }
  bool in_model(int i, int k) const {
    return in_bits[static_cast<size_t>(i) * static_cast<size_t>(num_shadows()) + static_cast<size_t>(k)] != 0;
  }
  void check() const;
};

/// Queries the target and every pool model on the requested nodes. The
/// ground-truth mask doubles as the target model's training mask when
/// mode is kTrainGraph.
SignalMatrix build_signal_matrix(const ModelParams& target, const MembershipMask& ground_truth,
                                 const ShadowPool& pool, const Graph& g,
                                 std::span<const int> targets, SignalMode mode);

// CSV header: sample_id,member,target_loss,sh0,...,sh{K-1},in0,...,in{K-1}
void write_signals_csv(std::ostream& out, const SignalMatrix& s);
void write_signals_csv(const std::string& path, const SignalMatrix& s);
SignalMatrix read_signals_csv(std::istream& in);
SignalMatrix read_signals_csv(const std::string& path);

}  // namespace miaudit
