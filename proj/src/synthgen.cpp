#include "miaudit/synthgen.hpp"

#include <stdexcept>

#include "miaudit/rng.hpp"

namespace miaudit {

namespace {
constexpr uint64_t kFeatureStream = 1;
constexpr uint64_t kEdgeStream = 2;
}  // namespace

void SbmSpec::validate() const {
  if (n <= 0) throw std::invalid_argument("sbm: n must be positive");
  if (num_classes <= 0) throw std::invalid_argument("sbm: class count must be positive");
  if (n % num_classes != 0) throw std::invalid_argument("sbm: n must be divisible by class count");
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0)
    throw std::invalid_argument("sbm: edge probabilities must lie in [0,1]");
  if (feature_dim < num_classes)
    throw std::invalid_argument("sbm: feature_dim must be >= class count for axis-aligned means");
  if (noise_std < 0.0) throw std::invalid_argument("sbm: noise_std must be nonnegative");
}

namespace {

Graph gen_nodes(const SbmSpec& spec) {
  Graph g;
  g.n = spec.n;
  g.feature_dim = spec.feature_dim;
  g.num_classes = spec.num_classes;
  int block = spec.n / spec.num_classes;
  g.labels.resize(static_cast<size_t>(spec.n));
  for (int v = 0; v < spec.n; ++v) g.labels[static_cast<size_t>(v)] = v / block;

  Rng rng(spec.seed, kFeatureStream);
  g.features = Matrix(spec.n, spec.feature_dim);
  for (int v = 0; v < spec.n; ++v) {
    int y = g.labels[static_cast<size_t>(v)];
    for (int j = 0; j < spec.feature_dim; ++j) {
      double mean = (j == y) ? spec.class_radius : 0.0;
      g.features(v, j) = mean + spec.noise_std * rng.next_normal();
    }
  }
  return g;
}

}  // namespace

Graph gen_sbm_graph(const SbmSpec& spec) {
  spec.validate();
  Graph g = gen_nodes(spec);
  Rng rng(spec.seed, kEdgeStream);
  for (int u = 0; u < spec.n; ++u) {
    for (int w = u + 1; w < spec.n; ++w) {
      double p = (g.labels[static_cast<size_t>(u)] == g.labels[static_cast<size_t>(w)]) ? spec.p_in
                                                                                        : spec.p_out;
      if (rng.next_bernoulli(p)) g.edges.emplace_back(u, w);
    }
  }
  g.finalize();
  return g;
}

Graph gen_iid_dataset(const SbmSpec& spec) {
  spec.validate();
  Graph g = gen_nodes(spec);
  g.finalize();
  return g;
}

}  // namespace miaudit
