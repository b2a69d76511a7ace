#include "doctest.h"

#include <cmath>

#include "miaudit/synthgen.hpp"

using namespace miaudit;

namespace {

SbmSpec base_spec() {
  SbmSpec s;
  s.n = 40;
  s.num_classes = 2;
  s.p_in = 0.3;
  s.p_out = 0.02;
  s.feature_dim = 4;
  s.class_radius = 2.0;
  s.noise_std = 0.5;
  s.seed = 7;
  return s;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("degenerate edge probabilities") {
  SbmSpec s = base_spec();
  s.p_in = s.p_out = 0.0;
  CHECK(gen_sbm_graph(s).edges.empty());

  s.p_in = s.p_out = 1.0;
  Graph complete = gen_sbm_graph(s);
  CHECK(static_cast<int>(complete.edges.size()) == s.n * (s.n - 1) / 2);
}

TEST_CASE("generation is a pure function of the spec") {
  SbmSpec s = base_spec();
  Graph a = gen_sbm_graph(s);
  Graph b = gen_sbm_graph(s);
  CHECK(a.edges == b.edges);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);

  s.seed = 8;
  Graph c = gen_sbm_graph(s);
  CHECK(a.edges != c.edges);
}

TEST_CASE("iid dataset shares features with the graph variant") {
  SbmSpec s = base_spec();
  Graph g = gen_sbm_graph(s);
  Graph d = gen_iid_dataset(s);
  CHECK(d.edges.empty());
  CHECK(d.features.data == g.features.data);
  CHECK(d.labels == g.labels);
}

TEST_CASE("labels are balanced") {
  SbmSpec s = base_spec();
  s.num_classes = 4;
  s.feature_dim = 4;
  Graph g = gen_iid_dataset(s);
  std::vector<int> counts(4, 0);
  for (int y : g.labels) counts[static_cast<size_t>(y)]++;
  for (int c : counts) CHECK(c == s.n / 4);
}

TEST_CASE("intra-class density lands within three binomial deviations") {
  SbmSpec s = base_spec();
  s.n = 300;
  s.p_in = 0.25;
  s.p_out = 0.05;
  Graph g = gen_sbm_graph(s);
  int64_t intra = 0, inter = 0;
  for (const Edge& e : g.edges)
    (g.labels[static_cast<size_t>(e.first)] == g.labels[static_cast<size_t>(e.second)] ? intra : inter)++;
  int64_t block = s.n / 2;
  int64_t intra_pairs = 2 * block * (block - 1) / 2;
  int64_t inter_pairs = block * block;
  double sd_in = std::sqrt(static_cast<double>(intra_pairs) * s.p_in * (1 - s.p_in));
  double sd_out = std::sqrt(static_cast<double>(inter_pairs) * s.p_out * (1 - s.p_out));
  CHECK(std::fabs(static_cast<double>(intra) - static_cast<double>(intra_pairs) * s.p_in) < 3 * sd_in);
  CHECK(std::fabs(static_cast<double>(inter) - static_cast<double>(inter_pairs) * s.p_out) < 3 * sd_out);
}

TEST_CASE("class means sit on the first coordinate axes") {
  SbmSpec s = base_spec();
  s.n = 2000;
  s.noise_std = 0.1;
  s.class_radius = 3.0;
  Graph g = gen_iid_dataset(s);
  double mean00 = 0.0, mean11 = 0.0;
  int c0 = 0, c1 = 0;
  for (int v = 0; v < g.n; ++v) {
    if (g.labels[static_cast<size_t>(v)] == 0) {
      mean00 += g.features(v, 0);
      ++c0;
    } else {
      mean11 += g.features(v, 1);
      ++c1;
    }
  }
  CHECK(mean00 / c0 == doctest::Approx(3.0).epsilon(0.01));
  CHECK(mean11 / c1 == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("spec validation") {
  SbmSpec s = base_spec();
  s.p_in = 1.5;
  CHECK_THROWS_AS(gen_sbm_graph(s), std::invalid_argument);
  s = base_spec();
  s.n = 41;  // not divisible by class count
  CHECK_THROWS_AS(gen_sbm_graph(s), std::invalid_argument);
  s = base_spec();
  s.feature_dim = 1;  // fewer axes than classes
  CHECK_THROWS_AS(gen_iid_dataset(s), std::invalid_argument);
}

}  // TEST_SUITE
