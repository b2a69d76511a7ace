#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "miaudit/graph.hpp"
#include "miaudit/linalg.hpp"

namespace miaudit {

enum class Arch { kGcn2, kLinear, kMlp1 };

const char* arch_name(Arch a);
Arch parse_arch(const std::string& name);

/// Weights of a two-layer GCN, a softmax-linear classifier, or a
/// one-hidden-layer MLP. For kLinear only w0 (d x c) and b0 are used and
/// hidden_dim is 0.
struct ModelParams {
  Arch arch = Arch::kLinear;
  int input_dim = 0;
  int hidden_dim = 0;
  int num_classes = 0;
  Matrix w0, w1;
  std::vector<double> b0, b1;

  void check_shapes() const;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 100;
  double weight_decay = 0.0;
  int hidden = 16;
  uint64_t init_seed = 0;
};

/// Glorot-uniform weights, zero biases, seeded.
ModelParams init_params(Arch arch, int input_dim, int num_classes, int hidden, uint64_t seed);

// Symmetric-normalized propagation operator with self-loops over a masked
// adjacency: entry (u,w) = 1/sqrt(deg~(u) * deg~(w)) with deg~ = degree + 1,
// degrees taken from the masked edge set. Isolated nodes reduce to the
// identity row, so feature-only semantics fall out of an edgeless mask.
class PropagationMatrix {
 public:
  struct Entry {
    int node;
    double coef;
  };

  explicit PropagationMatrix(const MaskedAdjacency& a);
  static PropagationMatrix identity(int n);

  int num_nodes() const { return n_; }
  std::span<const Entry> row(int u) const {
    return {entries_.data() + offsets_[static_cast<size_t>(u)],
            static_cast<size_t>(offsets_[static_cast<size_t>(u) + 1] - offsets_[static_cast<size_t>(u)])};
  }
  /// out = P * m
  Matrix propagate(const Matrix& m) const;

 private:
  PropagationMatrix() = default;
  int n_ = 0;
  std::vector<int> offsets_;
  std::vector<Entry> entries_;
};

/// -log of the label's probability, clamped below at 1e-30 so downstream
/// log-sum-exp stays finite.
double nll_loss(std::span<const double> prob_row, int label);

// Per-node inference bound to one model and one feature matrix. Rows of
// X*W0 are cached lazily and reused across propagation operators, which is
// what makes mask-resampled signal evaluation cheap. The restricted
// computation reproduces the full forward bit for bit.
class NodeLossEvaluator {
 public:
  NodeLossEvaluator(const ModelParams& params, const Matrix& features);

  /// Probability rows for the requested nodes (gcn2 requires prop).
  Matrix probs(const PropagationMatrix* prop, std::span<const int> nodes);
  std::vector<double> losses(const PropagationMatrix* prop, std::span<const int> nodes,
                             const std::vector<int>& labels);
  double loss(const PropagationMatrix* prop, int v, int label);

 private:
  std::vector<double> logits_row(const PropagationMatrix* prop, int v);
  std::span<const double> xw0_row(int z);
  std::vector<double> hidden_row(const PropagationMatrix* prop, int w);

  const ModelParams& params_;
  const Matrix& feats_;
  Matrix xw0_cache_;
  std::vector<uint8_t> xw0_ready_;
};

/// Softmax-normalized prediction rows for all nodes. Pass the propagation
/// operator for gcn2; linear/mlp1 ignore it.
Matrix forward_probs(const ModelParams& params, const Matrix& features,
                     const PropagationMatrix* prop = nullptr);

/// Losses for the requested nodes, equal to indexing the full forward.
std::vector<double> per_node_losses(const ModelParams& params, const Graph& g,
                                    const MaskedAdjacency& a, std::span<const int> nodes);

struct ParamGradients {
  Matrix w0, w1;
  std::vector<double> b0, b1;
};

/// Sum of member losses plus (wd/2)*||params||^2; the objective train()
/// descends.
double training_loss(const ModelParams& params, const Graph& g, const PropagationMatrix* prop,
                     const MembershipMask& members, double weight_decay);
ParamGradients loss_gradients(const ModelParams& params, const Graph& g,
                              const PropagationMatrix* prop, const MembershipMask& members,
                              double weight_decay);

/// Full-batch gradient descent on the member nodes over the masked
/// adjacency the mask induces. Deterministic given cfg.init_seed.
ModelParams train(Arch arch, const Graph& g, const MembershipMask& train_mask,
                  const TrainConfig& cfg);

/// Fraction of the given nodes whose argmax prediction matches the label.
double accuracy(const ModelParams& params, const Matrix& features, const PropagationMatrix* prop,
                std::span<const int> nodes, const std::vector<int>& labels);

// Text format: header "arch d h c", then row-major matrices w0, b0 (and
// w1, b1 when the arch has them), 17 significant digits per value.
void save_params(std::ostream& out, const ModelParams& p);
void save_params(const std::string& path, const ModelParams& p);
ModelParams load_params(std::istream& in);
ModelParams load_params(const std::string& path);

}  // namespace miaudit
