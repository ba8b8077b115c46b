#pragma once

#include <array>
#include <string>
#include <vector>

#include "clc/ball_tree.hpp"
#include "clc/common.hpp"
#include "clc/features.hpp"
#include "clc/kv_cache.hpp"
#include "clc/numerics.hpp"

namespace clc {

struct KmeansResult {
  Matrix centroids;             // k x d
  std::vector<int> assignments;  // per point
};

// Mini-batch k-means with k-means++ seeding and 1/(count seen) per-center
// rates; final assignments are nearest-centroid over all points.
KmeansResult minibatch_kmeans(const Matrix& points, int k, int batch, int iters,
                              Rng& rng, Exec exec = Exec::parallel);

double kmeans_inertia(const Matrix& points, const Matrix& centroids,
                      const std::vector<int>& assignments);

// Per cluster, the member point closest to its centroid (ties -> lowest
// index). Empty clusters are re-seeded from the globally farthest points
// first; `assignments` is updated accordingly.
std::vector<int> select_representatives(const Matrix& points, Matrix& centroids,
                                        std::vector<int>& assignments);

struct DictionaryEntry {
  std::uint32_t id = 0;
  std::vector<double> key;
  ImagePatch payload;
  std::string source_tag;
};

struct DictionaryBuildConfig {
  std::uint32_t clusters = 256;
  std::uint32_t pca_dim = 64;
  std::uint32_t batch = 256;
  std::uint32_t iters = 50;
  std::uint64_t seed = 0;
};

struct Dictionary {
  std::vector<DictionaryEntry> entries;
  PcaBasis pca;
  DictionaryBuildConfig config;
  std::array<std::uint8_t, 32> content_hash{};

  int feature_dim() const {
    return entries.empty() ? 0 : static_cast<int>(entries[0].key.size());
  }
  Matrix key_matrix() const;
};

Dictionary build_dictionary(const std::vector<ImagePatch>& patches,
                            const DictionaryBuildConfig& config,
                            Exec exec = Exec::parallel);

// "CLCD" v1 byte format with a trailing SHA-256 over everything before it.
std::vector<std::uint8_t> dict_serialize(const Dictionary& dict);
void dict_save(const Dictionary& dict, const std::string& path);
Dictionary dict_deserialize(std::span<const std::uint8_t> bytes);
Dictionary dict_load(const std::string& path);

struct RetrieveResult {
  std::vector<int> ids;         // best-first
  std::vector<double> distances;
  bool cache_hit = false;
  bool cache_mutated = false;
};

// Queries with the patch and its 90-degree rotation, merges and dedups by
// best distance, truncates to m. `cache` may be null; when present it is
// consulted for exact repeats and updated, which requires external
// serialization of concurrent callers.
RetrieveResult retrieve(const Dictionary& dict, const BallTree& tree,
                        KvCache* cache, const ImagePatch& image, int m,
                        Exec exec = Exec::parallel);

}  // namespace clc
