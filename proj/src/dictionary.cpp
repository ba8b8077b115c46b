#include "clc/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace clc {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  int best = 0;
  double best_d = dist2(centroids.row(0), x);
  for (int j = 1; j < centroids.rows; ++j) {
    double d = dist2(centroids.row(j), x);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Matrix kmeanspp_seed(const Matrix& points, int k, Rng& rng) {
  const int n = points.rows;
  const int d = points.cols;
  Matrix centroids(k, d);
  std::vector<bool> taken(n, false);

  int first = rng.uniform_int(0, n - 1);
  taken[first] = true;
  for (int j = 0; j < d; ++j) centroids(0, j) = points(first, j);

  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) d2[i] = dist2(points.row(i), centroids.row(0));

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += d2[i];
    int pick = -1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    }
    if (pick < 0 || taken[pick]) {
      // Degenerate mass (duplicates); take the lowest untaken index.
      pick = 0;
      while (pick < n && taken[pick]) ++pick;
      if (pick == n) pick = n - 1;
    }
    taken[pick] = true;
    for (int j = 0; j < d; ++j) centroids(c, j) = points(pick, j);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], dist2(points.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace

KmeansResult minibatch_kmeans(const Matrix& points, int k, int batch, int iters,
                              Rng& rng, Exec exec) {
  const int n = points.rows;
  if (k < 1 || k > n) throw std::invalid_argument("minibatch_kmeans: k out of range");
  if (batch < 1) throw std::invalid_argument("minibatch_kmeans: batch must be positive");

  KmeansResult out;
  out.centroids = kmeanspp_seed(points, k, rng);
  std::vector<std::uint64_t> seen(k, 0);

  const int b = std::min(batch, n);
  std::vector<int> sample(n);
  std::iota(sample.begin(), sample.end(), 0);
  std::vector<int> nearest(b);

  for (int it = 0; it < iters; ++it) {
    if (b < n) {
      // Partial Fisher-Yates draw without replacement.
      std::iota(sample.begin(), sample.end(), 0);
      for (int i = 0; i < b; ++i)
        std::swap(sample[i], sample[rng.uniform_int(i, n - 1)]);
    }
    parallel_for(b, exec, [&](std::int64_t i) {
      nearest[i] = nearest_centroid(out.centroids, points.row(sample[i]));
    });
    for (int i = 0; i < b; ++i) {
      int c = nearest[i];
      double eta = 1.0 / static_cast<double>(++seen[c]);
      auto x = points.row(sample[i]);
      for (int j = 0; j < points.cols; ++j)
        out.centroids(c, j) += eta * (x[j] - out.centroids(c, j));
    }
  }

  out.assignments.resize(n);
  parallel_for(n, exec, [&](std::int64_t i) {
    out.assignments[i] = nearest_centroid(out.centroids, points.row(i));
  });
  return out;
}

double kmeans_inertia(const Matrix& points, const Matrix& centroids,
                      const std::vector<int>& assignments) {
  double s = 0.0;
  for (int i = 0; i < points.rows; ++i)
    s += dist2(points.row(i), centroids.row(assignments[i]));
  return s;
}

std::vector<int> select_representatives(const Matrix& points, Matrix& centroids,
                                        std::vector<int>& assignments) {
  const int k = centroids.rows;
  const int n = points.rows;

  std::vector<int> counts(k, 0);
  for (int a : assignments) ++counts[a];

  // Re-seed empty clusters from the points farthest from their centroids.
  for (int j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    int far = -1;
    double far_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (counts[assignments[i]] < 2) continue;
      double d = dist2(points.row(i), centroids.row(assignments[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) throw std::invalid_argument("select_representatives: cannot repair empty cluster");
    --counts[assignments[far]];
    assignments[far] = j;
    ++counts[j];
    for (int c = 0; c < points.cols; ++c) centroids(j, c) = points(far, c);
  }

  std::vector<int> reps(k, -1);
  std::vector<double> best(k, 0.0);
  for (int i = 0; i < n; ++i) {
    int j = assignments[i];
    double d = dist2(points.row(i), centroids.row(j));
    if (reps[j] < 0 || d < best[j]) {
      reps[j] = i;
      best[j] = d;
    }
  }
  return reps;
}

Matrix Dictionary::key_matrix() const {
  Matrix m(static_cast<int>(entries.size()), feature_dim());
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (int j = 0; j < m.cols; ++j) m(static_cast<int>(i), j) = entries[i].key[j];
  return m;
}

namespace {

double f32_round(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

Dictionary build_dictionary(const std::vector<ImagePatch>& patches,
                            const DictionaryBuildConfig& config,
                            Exec exec) {
  const int n = static_cast<int>(patches.size());
  if (n < static_cast<int>(config.clusters))
    throw std::invalid_argument("build_dictionary: fewer patches than clusters");

  Matrix raw(n, kRawFeatureDim);
  parallel_for(n, exec, [&](std::int64_t i) {
    FeatureVector f = extract_feature(patches[i], nullptr, Exec::serial);
    for (int j = 0; j < kRawFeatureDim; ++j) raw(static_cast<int>(i), j) = f.data[j];
  });

  // The requested PCA dim cannot exceed what the data supports.
  int pca_dim = std::min<int>(static_cast<int>(config.pca_dim), std::min(n, kRawFeatureDim));
  PcaBasis pca = pca_fit(raw, pca_dim);
  // Keys live on the f32 grid of the persisted format so that a built
  // dictionary and its save/load round trip are interchangeable.
  for (double& v : pca.mean) v = f32_round(v);
  for (double& v : pca.components.data) v = f32_round(v);

  Matrix projected(n, pca_dim);
  parallel_for(n, exec, [&](std::int64_t i) {
    std::vector<double> pr = pca_project(pca, raw.row(static_cast<int>(i)));
    double nrm = 0.0;
    for (double v : pr) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (int j = 0; j < pca_dim; ++j)
      projected(static_cast<int>(i), j) = nrm > 0.0 ? pr[j] / nrm : 0.0;
  });

  Rng rng(config.seed);
  KmeansResult km = minibatch_kmeans(projected, static_cast<int>(config.clusters),
                                     static_cast<int>(config.batch),
                                     static_cast<int>(config.iters), rng, exec);
  std::vector<int> reps = select_representatives(projected, km.centroids, km.assignments);

  Dictionary dict;
  dict.config = config;
  dict.config.pca_dim = static_cast<std::uint32_t>(pca_dim);
  dict.pca = std::move(pca);
  dict.entries.resize(config.clusters);
  for (std::uint32_t j = 0; j < config.clusters; ++j) {
    DictionaryEntry& e = dict.entries[j];
    e.id = j;
    e.key.resize(pca_dim);
    for (int c = 0; c < pca_dim; ++c) e.key[c] = f32_round(projected(reps[j], c));
    e.payload = patches[reps[j]];
    e.source_tag = "patch:" + std::to_string(reps[j]);
  }

  dict.content_hash = sha256(dict_serialize(dict));
  return dict;
}

namespace {

constexpr char kDictMagic[4] = {'C', 'L', 'C', 'D'};
constexpr std::uint16_t kDictVersion = 1;

}  // namespace

std::vector<std::uint8_t> dict_serialize(const Dictionary& dict) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kDictMagic), 4});
  w.u16(kDictVersion);
  w.u32(static_cast<std::uint32_t>(dict.entries.size()));
  w.u32(static_cast<std::uint32_t>(dict.feature_dim()));
  w.u32(static_cast<std::uint32_t>(dict.pca.input_dim()));
  for (double v : dict.pca.mean) w.f32(static_cast<float>(v));
  for (double v : dict.pca.components.data) w.f32(static_cast<float>(v));
  for (const auto& e : dict.entries) {
    w.u32(e.id);
    for (double v : e.key) w.f32(static_cast<float>(v));
    w.u16(static_cast<std::uint16_t>(e.payload.width));
    w.u16(static_cast<std::uint16_t>(e.payload.height));
    w.u8(static_cast<std::uint8_t>(e.payload.channels));
    w.bytes(e.payload.data);
    w.u16(static_cast<std::uint16_t>(e.source_tag.size()));
    w.str(e.source_tag);
  }
  return w.take();
}

void dict_save(const Dictionary& dict, const std::string& path) {
  std::vector<std::uint8_t> body = dict_serialize(dict);
  std::array<std::uint8_t, 32> digest = sha256(body);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("dict_save: cannot open " + path);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  out.write(reinterpret_cast<const char*>(digest.data()), static_cast<std::streamsize>(digest.size()));
  if (!out) throw ParseError("dict_save: write failed for " + path);
}

Dictionary dict_deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 32 + 4) throw ParseError("dictionary file truncated");
  std::span<const std::uint8_t> body = bytes.first(bytes.size() - 32);
  std::span<const std::uint8_t> trailer = bytes.last(32);

  ByteReader r(body);
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), kDictMagic, 4) != 0)
    throw BadMagicError("dictionary: bad magic");
  std::uint16_t version = r.u16();
  if (version != kDictVersion)
    throw VersionMismatchError("dictionary: unsupported version " + std::to_string(version));

  std::array<std::uint8_t, 32> digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), trailer.begin()))
    throw HashMismatchError("dictionary: content hash mismatch");

  Dictionary dict;
  std::uint32_t count = r.u32();
  std::uint32_t feature_dim = r.u32();
  std::uint32_t pca_input = r.u32();
  if (feature_dim == 0 || feature_dim > pca_input || pca_input > (1u << 20))
    throw ParseError("dictionary: implausible dimensions");

  dict.pca.mean.resize(pca_input);
  for (auto& v : dict.pca.mean) v = r.f32();
  dict.pca.components = Matrix(static_cast<int>(feature_dim), static_cast<int>(pca_input));
  for (auto& v : dict.pca.components.data) v = r.f32();
  dict.pca.explained_variance.assign(feature_dim, 0.0);

  dict.entries.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DictionaryEntry& e = dict.entries[i];
    e.id = r.u32();
    if (e.id != i) throw ParseError("dictionary: entry ids not dense");
    e.key.resize(feature_dim);
    for (auto& v : e.key) v = r.f32();
    int w = r.u16();
    int h = r.u16();
    int ch = r.u8();
    if (w <= 0 || h <= 0 || (ch != 1 && ch != 3))
      throw ParseError("dictionary: bad payload header");
    e.payload = Image(w, h, ch);
    auto pix = r.bytes(e.payload.data.size());
    std::copy(pix.begin(), pix.end(), e.payload.data.begin());
    e.source_tag = r.str(r.u16());
  }
  if (r.remaining() != 0) throw ParseError("dictionary: trailing bytes");

  dict.config.clusters = count;
  dict.config.pca_dim = feature_dim;
  std::copy(trailer.begin(), trailer.end(), dict.content_hash.begin());
  return dict;
}

Dictionary dict_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("dict_load: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return dict_deserialize(bytes);
}

RetrieveResult retrieve(const Dictionary& dict, const BallTree& tree,
                        KvCache* cache, const ImagePatch& image, int m,
                        Exec exec) {
  if (dict.entries.empty()) throw std::invalid_argument("retrieve: empty dictionary");
  if (m < 1) throw std::invalid_argument("retrieve: m must be positive");
  m = std::min<int>(m, static_cast<int>(dict.entries.size()));

  FeatureVector q0 = extract_feature(image, &dict.pca, exec);

  RetrieveResult out;
  if (cache != nullptr) {
    auto hit = cache->lookup(q0.data, static_cast<std::size_t>(m));
    if (hit) {
      out.ids = *hit;
      out.distances.assign(out.ids.size(), 0.0);
      for (std::size_t i = 0; i < out.ids.size(); ++i)
        out.distances[i] = std::sqrt(dist2(dict.entries[out.ids[i]].key, q0.data));
      out.cache_hit = true;
      out.cache_mutated = true;  // hit counter bumped
      return out;
    }
  }

  FeatureVector q1 = extract_feature(rotate90(image), &dict.pca, exec);

  std::map<int, double> best;
  for (const FeatureVector* q : {&q0, &q1}) {
    for (const auto& nb : tree.knn(q->data, m)) {
      auto it = best.find(nb.id);
      if (it == best.end() || nb.distance < it->second) best[nb.id] = nb.distance;
    }
  }

  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(best.size());
  for (auto& [id, d] : best) ranked.emplace_back(d, id);
  std::sort(ranked.begin(), ranked.end());
  if (static_cast<int>(ranked.size()) > m) ranked.resize(m);

  for (auto& [d, id] : ranked) {
    out.ids.push_back(id);
    out.distances.push_back(d);
  }

  if (cache != nullptr) {
    // Value row: the best match's key, a usable attention payload.
    cache->insert(q0.data, dict.entries[out.ids[0]].key, out.ids);
    out.cache_mutated = true;
  }
  return out;
}

}  // namespace clc
