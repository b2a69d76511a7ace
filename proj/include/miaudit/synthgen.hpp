#pragma once

#include <cstdint>

#include "miaudit/graph.hpp"

namespace miaudit {

/// Stochastic block model with Gaussian class-mean features. Class k's mean
/// sits at radius * e_k on the k-th coordinate axis, so separation is
/// controlled independently of the feature dimension.
struct SbmSpec {
  int n = 0;
  int num_classes = 2;
  double p_in = 0.0;       // intra-class edge probability
  double p_out = 0.0;      // inter-class edge probability
  int feature_dim = 2;
  double class_radius = 1.0;
  double noise_std = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

/// Balanced labels in contiguous blocks; every unordered pair drawn
/// independently. Fully determined by spec.seed.
Graph gen_sbm_graph(const SbmSpec& spec);

/// Same node set and features as gen_sbm_graph, empty edge set.
Graph gen_iid_dataset(const SbmSpec& spec);

}  // namespace miaudit
