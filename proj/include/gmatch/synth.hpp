#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmatch/assignment.hpp"
#include "gmatch/graph.hpp"

namespace gmatch {

// A matching instance: source graph, target graph and the planted injection.
struct GraphPair {
  Graph source;
  Graph target;
  PermutationMatrix gt;
  std::string category;
};

enum class EdgeModel { ERDOS_RENYI, RANDOM_GEOMETRIC };

struct PairGenConfig {
  int n = 10;
  int m = 10;
  EdgeModel edge_model = EdgeModel::ERDOS_RENYI;
  double er_p = 0.3;
  double geo_radius = 0.4;
  int feat_dim = 16;
  double feature_noise_sigma = 0.0;
  double edge_flip_prob = 0.0;
  uint64_t seed = 0;
};

// Source sampled from the edge model (resampled until connected, at most 100
// tries), features iid standard normal. The target is a planted random
// injection of the source with Gaussian feature noise, independent edge flips
// and m - n outlier nodes carrying fresh features and density-matched edges.
GraphPair gen_pair(const PairGenConfig& cfg);

// A pair built to be ambiguous without position information: a spine path with
// two feature-twin pairs placed at structurally equivalent but positionally
// distinct spots. The target is a noiseless permuted copy. n must be even and
// at least 6.
GraphPair gen_ambiguous_pair(int n, uint64_t seed);

// Twin node indices of the construction above, for tests and ablations:
// {leaf_a, leaf_b}, {spine_a, spine_b}.
struct AmbiguousTwins {
  int leaf_a, leaf_b;
  int spine_a, spine_b;
};
AmbiguousTwins ambiguous_twins(int n);

struct Dataset {
  std::vector<GraphPair> pairs;

  bool empty() const { return pairs.empty(); }
  int size() const { return static_cast<int>(pairs.size()); }
};

struct CategorySpec {
  std::string label;
  PairGenConfig config;
};

// One labeled block per category; category k draws its pairs with seeds
// seed + k + sample_index, so each block regenerates independently.
Dataset gen_category_dataset(const std::vector<CategorySpec>& specs, int pairs_per_category,
                             uint64_t seed);

// Default synthetic category families for the cross-category harness: labels
// and configs vary edge model, density and size; the feature width is shared.
std::vector<CategorySpec> default_category_specs(int k, int feat_dim);

// JSON-lines dataset file, one pair per line; numeric round trip is exact.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

bool datasets_equal(const Dataset& a, const Dataset& b);

}  // namespace gmatch
