#include "gmatch/synth.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gmatch/error.hpp"
#include "gmatch/rng.hpp"

namespace gmatch {

namespace {

using nlohmann::json;

bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  int visited = 1;
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++visited;
        queue.push_back(u);
      }
  }
  return visited == n;
}

std::vector<std::pair<int, int>> draw_structure(const PairGenConfig& cfg, RngEngine& rng) {
  std::vector<std::pair<int, int>> edges;
  if (cfg.edge_model == EdgeModel::ERDOS_RENYI) {
    for (int i = 0; i < cfg.n; ++i)
      for (int j = i + 1; j < cfg.n; ++j)
        if (runif(rng) < cfg.er_p) edges.emplace_back(i, j);
  } else {
    std::vector<double> x(cfg.n), y(cfg.n);
    for (int v = 0; v < cfg.n; ++v) {
      x[v] = runif(rng);
      y[v] = runif(rng);
    }
    const double r2 = cfg.geo_radius * cfg.geo_radius;
    for (int i = 0; i < cfg.n; ++i)
      for (int j = i + 1; j < cfg.n; ++j) {
        const double dx = x[i] - x[j];
        const double dy = y[i] - y[j];
        if (dx * dx + dy * dy < r2) edges.emplace_back(i, j);
      }
  }
  return edges;
}

std::vector<int> random_permutation(int m, RngEngine& rng) {
  std::vector<int> perm(m);
  for (int i = 0; i < m; ++i) perm[i] = i;
  for (int i = m - 1; i >= 1; --i) {
    const int j = std::uniform_int_distribution<int>(0, i)(rng);
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

void check_pair_config(const PairGenConfig& cfg) {
  if (cfg.n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  if (cfg.m < cfg.n) throw Error(ErrorCode::InvalidArgument, "m must be at least n");
  if (cfg.feat_dim < 1) throw Error(ErrorCode::InvalidArgument, "feat_dim must be at least 1");
  if (cfg.er_p < 0.0 || cfg.er_p > 1.0)
    throw Error(ErrorCode::InvalidArgument, "er_p must lie in [0, 1]");
  if (!(cfg.geo_radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "geo_radius must be positive");
  if (cfg.feature_noise_sigma < 0.0)
    throw Error(ErrorCode::InvalidArgument, "feature_noise_sigma must be non-negative");
  if (cfg.edge_flip_prob < 0.0 || cfg.edge_flip_prob > 1.0)
    throw Error(ErrorCode::InvalidArgument, "edge_flip_prob must lie in [0, 1]");
}

}  // namespace

// Draw order, one engine seeded with cfg.seed: (1) source structure, redrawn
// whole until connected, at most 100 attempts; (2) source features, row by
// row; (3) the planted injection, a Fisher-Yates shuffle of 0..m-1 truncated
// to n; (4) per mapped node a full row of feature noise, in source order;
// (5) fresh features per outlier slot, ascending; (6) one flip draw per
// source pair when edge_flip_prob > 0; (7) one density draw per target pair
// touching an outlier when m > n.
GraphPair gen_pair(const PairGenConfig& cfg) {
  check_pair_config(cfg);
  RngEngine rng(cfg.seed);

  std::vector<std::pair<int, int>> edges_s;
  bool ok = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    edges_s = draw_structure(cfg, rng);
    if (connected(cfg.n, edges_s)) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw Error(ErrorCode::ConnectivityRetryExceeded,
                "no connected source graph in 100 attempts for seed " + std::to_string(cfg.seed));

  Matrix xs(cfg.n, cfg.feat_dim);
  for (double& v : xs.data) v = rnorm(rng);

  std::vector<int> mapping = random_permutation(cfg.m, rng);
  mapping.resize(cfg.n);

  Matrix xt(cfg.m, cfg.feat_dim);
  for (int i = 0; i < cfg.n; ++i) {
    double* dst = xt.row(mapping[i]);
    const double* src = xs.row(i);
    for (int k = 0; k < cfg.feat_dim; ++k) dst[k] = src[k] + cfg.feature_noise_sigma * rnorm(rng);
  }
  std::vector<char> mapped(cfg.m, 0);
  for (int i = 0; i < cfg.n; ++i) mapped[mapping[i]] = 1;
  for (int slot = 0; slot < cfg.m; ++slot) {
    if (mapped[slot]) continue;
    double* dst = xt.row(slot);
    for (int k = 0; k < cfg.feat_dim; ++k) dst[k] = rnorm(rng);
  }

  std::vector<std::vector<char>> adj_t(cfg.m, std::vector<char>(cfg.m, 0));
  for (const auto& [i, j] : edges_s) adj_t[mapping[i]][mapping[j]] = adj_t[mapping[j]][mapping[i]] = 1;
  if (cfg.edge_flip_prob > 0.0) {
    for (int i = 0; i < cfg.n; ++i)
      for (int j = i + 1; j < cfg.n; ++j)
        if (runif(rng) < cfg.edge_flip_prob) {
          const int a = mapping[i];
          const int b = mapping[j];
          adj_t[a][b] = adj_t[b][a] = !adj_t[a][b];
        }
  }
  if (cfg.m > cfg.n) {
    const double density =
        cfg.n >= 2 ? 2.0 * static_cast<double>(edges_s.size()) / (cfg.n * (cfg.n - 1.0)) : 0.0;
    for (int a = 0; a < cfg.m; ++a)
      for (int b = a + 1; b < cfg.m; ++b) {
        if (mapped[a] && mapped[b]) continue;
        if (runif(rng) < density) adj_t[a][b] = adj_t[b][a] = 1;
      }
  }
  std::vector<std::pair<int, int>> edges_t;
  for (int a = 0; a < cfg.m; ++a)
    for (int b = a + 1; b < cfg.m; ++b)
      if (adj_t[a][b]) edges_t.emplace_back(a, b);

  GraphPair pair;
  pair.source = make_graph(cfg.n, edges_s, std::move(xs));
  pair.target = make_graph(cfg.m, edges_t, std::move(xt));
  pair.gt = make_permutation(std::move(mapping), cfg.m);
  return pair;
}

AmbiguousTwins ambiguous_twins(int n) {
  if (n < 6 || n % 2 != 0)
    throw Error(ErrorCode::InvalidArgument, "ambiguous family needs even n >= 6");
  const int k = n - 2;
  return AmbiguousTwins{k, k + 1, 2, k - 1};
}

// Spine path 0..n-3 with a leaf on spine node 1 and a leaf on the far spine
// end. The two leaves share one feature vector, spine nodes 2 and n-3 share
// another; everything else draws fresh features. Either pair is invisible to
// an aggregation that ignores where the anchors sit, but their capped
// distance profiles differ, and no automorphism swaps a pair.
GraphPair gen_ambiguous_pair(int n, uint64_t seed) {
  const AmbiguousTwins twins = ambiguous_twins(n);
  const int k = n - 2;
  std::vector<std::pair<int, int>> edges;
  for (int t = 0; t + 1 < k; ++t) edges.emplace_back(t, t + 1);
  edges.emplace_back(1, twins.leaf_a);
  edges.emplace_back(k - 1, twins.leaf_b);

  constexpr int kFeatDim = 8;
  RngEngine rng(seed);
  Matrix xs(n, kFeatDim);
  for (double& v : xs.data) v = rnorm(rng);
  for (int c = 0; c < kFeatDim; ++c) {
    xs(twins.leaf_b, c) = xs(twins.leaf_a, c);
    xs(twins.spine_b, c) = xs(twins.spine_a, c);
  }

  std::vector<int> mapping = random_permutation(n, rng);
  Matrix xt(n, kFeatDim);
  std::vector<std::pair<int, int>> edges_t;
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < kFeatDim; ++c) xt(mapping[v], c) = xs(v, c);
  for (const auto& [i, j] : edges) {
    const int a = std::min(mapping[i], mapping[j]);
    const int b = std::max(mapping[i], mapping[j]);
    edges_t.emplace_back(a, b);
  }

  GraphPair pair;
  pair.source = make_graph(n, edges, std::move(xs));
  pair.target = make_graph(n, edges_t, std::move(xt));
  pair.gt = make_permutation(std::move(mapping), n);
  pair.category = "ambiguous";
  return pair;
}

Dataset gen_category_dataset(const std::vector<CategorySpec>& specs, int pairs_per_category,
                             uint64_t seed) {
  if (specs.empty()) throw Error(ErrorCode::InvalidArgument, "no category specs");
  if (pairs_per_category < 1)
    throw Error(ErrorCode::InvalidArgument, "pairs_per_category must be at least 1");
  Dataset ds;
  ds.pairs.reserve(static_cast<size_t>(specs.size()) * pairs_per_category);
  for (size_t k = 0; k < specs.size(); ++k) {
    for (int s = 0; s < pairs_per_category; ++s) {
      PairGenConfig cfg = specs[k].config;
      cfg.seed = seed + k + static_cast<uint64_t>(s);
      GraphPair pair = gen_pair(cfg);
      pair.category = specs[k].label;
      ds.pairs.push_back(std::move(pair));
    }
  }
  return ds;
}

std::vector<CategorySpec> default_category_specs(int k, int feat_dim) {
  if (k < 1 || k > 5) throw Error(ErrorCode::InvalidArgument, "between 1 and 5 categories");
  if (feat_dim < 1) throw Error(ErrorCode::InvalidArgument, "feat_dim must be at least 1");
  std::vector<CategorySpec> specs;
  auto add = [&](const std::string& label, EdgeModel model, double p_or_radius, int n) {
    PairGenConfig cfg;
    cfg.n = cfg.m = n;
    cfg.edge_model = model;
    if (model == EdgeModel::ERDOS_RENYI)
      cfg.er_p = p_or_radius;
    else
      cfg.geo_radius = p_or_radius;
    cfg.feat_dim = feat_dim;
    cfg.feature_noise_sigma = 0.05;
    specs.push_back(CategorySpec{label, cfg});
  };
  add("er-sparse", EdgeModel::ERDOS_RENYI, 0.2, 10);
  if (k >= 2) add("er-dense", EdgeModel::ERDOS_RENYI, 0.5, 10);
  if (k >= 3) add("geo", EdgeModel::RANDOM_GEOMETRIC, 0.5, 10);
  if (k >= 4) add("er-large", EdgeModel::ERDOS_RENYI, 0.3, 14);
  if (k >= 5) add("geo-dense", EdgeModel::RANDOM_GEOMETRIC, 0.7, 12);
  return specs;
}

namespace {

json edges_to_json(const Graph& g) {
  json arr = json::array();
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.edge(i, j)) arr.push_back(json::array({i, j}));
  return arr;
}

json features_to_json(const Matrix& x) {
  json arr = json::array();
  for (int i = 0; i < x.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < x.cols; ++j) row.push_back(x(i, j));
    arr.push_back(std::move(row));
  }
  return arr;
}

std::vector<std::pair<int, int>> edges_from_json(const json& arr) {
  std::vector<std::pair<int, int>> edges;
  for (const json& e : arr) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return edges;
}

Matrix features_from_json(const json& arr) {
  const int rows = static_cast<int>(arr.size());
  const int cols = rows > 0 ? static_cast<int>(arr.at(0).size()) : 0;
  Matrix x(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = arr.at(i);
    if (static_cast<int>(row.size()) != cols)
      throw Error(ErrorCode::FeatureShapeMismatch, "ragged feature rows");
    for (int j = 0; j < cols; ++j) x(i, j) = row.at(j).get<double>();
  }
  return x;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  for (const GraphPair& pair : ds.pairs) {
    json line;
    line["format_version"] = 1;
    line["category"] = pair.category;
    line["n"] = pair.source.n;
    line["m"] = pair.target.n;
    line["edges_s"] = edges_to_json(pair.source);
    line["edges_t"] = edges_to_json(pair.target);
    line["x_s"] = features_to_json(pair.source.features);
    line["x_t"] = features_to_json(pair.target.features);
    line["gt"] = pair.gt.mapping;
    os << line.dump() << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  Dataset ds;
  std::string text;
  int line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    json line;
    try {
      line = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const int version = line.at("format_version").get<int>();
      if (version != 1)
        throw Error(ErrorCode::VersionMismatch,
                    "line " + std::to_string(line_no) + ": format_version " +
                        std::to_string(version));
      GraphPair pair;
      const int n = line.at("n").get<int>();
      const int m = line.at("m").get<int>();
      pair.category = line.at("category").get<std::string>();
      pair.source = make_graph(n, edges_from_json(line.at("edges_s")),
                               features_from_json(line.at("x_s")));
      pair.target = make_graph(m, edges_from_json(line.at("edges_t")),
                               features_from_json(line.at("x_t")));
      pair.gt = make_permutation(line.at("gt").get<std::vector<int>>(), m);
      ds.pairs.push_back(std::move(pair));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ds;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (int p = 0; p < a.size(); ++p) {
    const GraphPair& x = a.pairs[p];
    const GraphPair& y = b.pairs[p];
    if (x.category != y.category) return false;
    if (x.source.n != y.source.n || x.target.n != y.target.n) return false;
    if (x.source.adj != y.source.adj || x.target.adj != y.target.adj) return false;
    if (!(x.source.features == y.source.features)) return false;
    if (!(x.target.features == y.target.features)) return false;
    if (x.gt.mapping != y.gt.mapping || x.gt.m != y.gt.m) return false;
  }
  return true;
}

}  // namespace gmatch
