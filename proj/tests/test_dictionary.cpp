#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>

#include "clc/dictionary.hpp"
#include "test_support.hpp"

using namespace clc;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  return m;
}

// Oracle: exhaustive best 2-partition by inertia (for tiny point sets).
std::pair<Matrix, double> best_two_partition(const Matrix& pts) {
  const int n = pts.rows;
  double best = 1e300;
  Matrix best_centroids(2, pts.cols);
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    Matrix centroids(2, pts.cols);
    int c0 = 0, c1 = 0;
    for (int i = 0; i < n; ++i) {
      int g = (mask >> i) & 1;
      for (int j = 0; j < pts.cols; ++j) centroids(g, j) += pts(i, j);
      (g ? c1 : c0)++;
    }
    if (c0 == 0 || c1 == 0) continue;
    for (int j = 0; j < pts.cols; ++j) {
      centroids(0, j) /= c0;
      centroids(1, j) /= c1;
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int g = (mask >> i) & 1;
      for (int j = 0; j < pts.cols; ++j) {
        double d = pts(i, j) - centroids(g, j);
        inertia += d * d;
      }
    }
    if (inertia < best) {
      best = inertia;
      best_centroids = centroids;
    }
  }
  return {best_centroids, best};
}

bool centroid_sets_match(const Matrix& a, const Matrix& b, double tol) {
  std::vector<bool> used(b.rows, false);
  for (int i = 0; i < a.rows; ++i) {
    bool found = false;
    for (int j = 0; j < b.rows && !found; ++j) {
      if (used[j]) continue;
      double d = 0.0;
      for (int c = 0; c < a.cols; ++c) d = std::max(d, std::fabs(a(i, c) - b(j, c)));
      if (d <= tol) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("kmeans two separated pairs") {
  Matrix pts = from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  auto [oracle_centroids, oracle_inertia] = best_two_partition(pts);

  Rng rng(1);
  KmeansResult km = minibatch_kmeans(pts, 2, 4, 30, rng);
  CHECK(centroid_sets_match(km.centroids, oracle_centroids, 1e-6));
  CHECK(kmeans_inertia(pts, km.centroids, km.assignments) ==
        doctest::Approx(oracle_inertia).epsilon(1e-9));
}

TEST_CASE("kmeans k equals n") {
  Matrix pts = from_rows({{0, 0}, {3, 0}, {0, 3}, {5, 5}});
  Rng rng(2);
  KmeansResult km = minibatch_kmeans(pts, 4, 4, 10, rng);
  CHECK(kmeans_inertia(pts, km.centroids, km.assignments) == doctest::Approx(0.0));
  std::set<int> assigned(km.assignments.begin(), km.assignments.end());
  CHECK(assigned.size() == 4);
}

TEST_CASE("kmeans duplicated dataset reproduces centroids") {
  Matrix pts = from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1},
                          {0, 0}, {0, 1}, {10, 0}, {10, 1}});
  auto [oracle_centroids, _] = best_two_partition(pts);
  Rng rng(3);
  KmeansResult km = minibatch_kmeans(pts, 2, 8, 40, rng);
  CHECK(centroid_sets_match(km.centroids, oracle_centroids, 1e-6));
}

TEST_CASE("kmeans validates arguments and improves on seeding") {
  Matrix pts = from_rows({{0, 0}, {1, 1}});
  Rng rng(4);
  CHECK_THROWS_AS(minibatch_kmeans(pts, 3, 2, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(minibatch_kmeans(pts, 1, 0, 5, rng), std::invalid_argument);

  // Final inertia never exceeds the k-means++ seeding inertia.
  Rng data_rng(5);
  Matrix cloud(200, 3);
  for (auto& v : cloud.data) v = data_rng.normal();
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    Rng seed_rng(seed);
    KmeansResult init = minibatch_kmeans(cloud, 8, 64, 0, seed_rng);  // seeding only
    double init_inertia = kmeans_inertia(cloud, init.centroids, init.assignments);
    Rng run_rng(seed);
    KmeansResult fin = minibatch_kmeans(cloud, 8, 64, 25, run_rng);
    double fin_inertia = kmeans_inertia(cloud, fin.centroids, fin.assignments);
    CHECK(fin_inertia <= init_inertia + 1e-9);
  }
}

TEST_CASE("select_representatives basics") {
  Matrix pts = from_rows({{0, 0}, {0, 1}});
  Matrix centroids = from_rows({{0, 0.4}});
  std::vector<int> assign{0, 0};
  auto reps = select_representatives(pts, centroids, assign);
  CHECK(reps == std::vector<int>{0});

  // Singleton cluster returns its only member.
  Matrix pts2 = from_rows({{5, 5}, {0, 0}, {0, 1}});
  Matrix cents2 = from_rows({{5, 5}, {0, 0.5}});
  std::vector<int> assign2{0, 1, 1};
  auto reps2 = select_representatives(pts2, cents2, assign2);
  CHECK(reps2[0] == 0);
  CHECK(reps2[1] == 1);

  // Symmetric tie: lower index wins.
  Matrix pts3 = from_rows({{-1, 0}, {1, 0}});
  Matrix cents3 = from_rows({{0, 0}});
  std::vector<int> assign3{0, 0};
  auto reps3 = select_representatives(pts3, cents3, assign3);
  CHECK(reps3 == std::vector<int>{0});
}

TEST_CASE("select_representatives repairs empty clusters") {
  Matrix pts = from_rows({{0, 0}, {0.1, 0}, {9, 0}});
  Matrix cents = from_rows({{0.05, 0}, {50, 50}});
  std::vector<int> assign{0, 0, 0};  // cluster 1 empty; farthest point re-seeds it
  auto reps = select_representatives(pts, cents, assign);
  CHECK(assign[2] == 1);
  CHECK(reps[1] == 2);
  CHECK(cents(1, 0) == doctest::Approx(9.0));
}

TEST_CASE("ball tree single point and containment") {
  Matrix one = from_rows({{1, 2, 3}});
  BallTree t = BallTree::build(one);
  CHECK(t.nodes().size() == 1);
  auto nn = t.knn(std::vector<double>{0, 0, 0}, 1);
  CHECK(nn[0].id == 0);

  Rng rng(6);
  Matrix pts(300, 5);
  for (auto& v : pts.data) v = rng.normal();
  BallTree tree = BallTree::build(pts, 8);
  // Containment: every leaf point inside its node radius; internal nodes too.
  for (const auto& node : tree.nodes()) {
    for (int id : node.points) {
      double d2 = 0.0;
      for (int j = 0; j < 5; ++j) {
        double d = pts(id, j) - node.center[j];
        d2 += d * d;
      }
      CHECK(std::sqrt(d2) <= node.radius + 1e-9);
    }
  }
}

TEST_CASE("ball tree on a line has logarithmic depth") {
  Matrix pts(256, 1);
  for (int i = 0; i < 256; ++i) pts(i, 0) = i;
  BallTree t = BallTree::build(pts, 8);
  // Balanced splits: log2(256/8) = 5 levels of splits (+1 for the leaf level).
  CHECK(t.depth() >= 5);
  CHECK(t.depth() <= 8);
}

TEST_CASE("ball tree knn matches brute force") {
  Rng rng(7);
  Matrix pts(200, 16);
  for (auto& v : pts.data) v = rng.normal();
  BallTree t = BallTree::build(pts, 8);

  for (int q = 0; q < 25; ++q) {
    std::vector<double> query(16);
    for (auto& v : query) v = rng.normal();
    for (int m : {1, 3, 7}) {
      auto got = t.knn(query, m);
      auto want = test::brute_force_knn(pts, query, m);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-12));
      }
    }
  }

  // Query equal to a stored key comes back first at distance zero.
  auto exact = t.knn(pts.row(13), 3);
  CHECK(exact[0].id == 13);
  CHECK(exact[0].distance == doctest::Approx(0.0));

  // m = n returns everything ordered by distance.
  std::vector<double> q0(16, 0.0);
  auto all = t.knn(q0, 200);
  CHECK(all.size() == 200);
  for (std::size_t i = 1; i < all.size(); ++i)
    CHECK(all[i].distance >= all[i - 1].distance);

  CHECK_THROWS_AS(t.knn(q0, 201), std::invalid_argument);
}

TEST_CASE("ball tree survives duplicate points") {
  Matrix pts(20, 2);
  for (int i = 0; i < 20; ++i) {
    pts(i, 0) = 1.5;
    pts(i, 1) = -2.0;
  }
  BallTree t = BallTree::build(pts, 4);
  auto nn = t.knn(std::vector<double>{1.5, -2.0}, 5);
  CHECK(nn.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(nn[i].id == static_cast<int>(i));
}

TEST_CASE("kv_attend worked example") {
  KvCache cache(10);
  cache.insert({1.0, 0.0}, {1.0}, {0});
  cache.insert({0.0, 1.0}, {0.0}, {1});
  auto att = cache.attend(std::vector<double>{1.0, 0.0});
  double w = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
  CHECK(att.weights[0] == doctest::Approx(0.6698).epsilon(1e-4));
  CHECK(att.weights[0] == doctest::Approx(w).epsilon(1e-9));
  CHECK(att.value[0] == doctest::Approx(w).epsilon(1e-9));
  double sum = att.weights[0] + att.weights[1];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kv_attend identical keys average values") {
  KvCache cache(10);
  cache.insert({0.5, 0.5}, {2.0, 0.0}, {0});
  cache.insert({0.5, 0.5}, {4.0, 2.0}, {1});
  cache.insert({0.5, 0.5}, {0.0, 4.0}, {2});
  auto att = cache.attend(std::vector<double>{0.3, 0.9});
  CHECK(att.value[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(att.value[1] == doctest::Approx(2.0).epsilon(1e-9));

  KvCache single(10);
  single.insert({1.0}, {7.0}, {0});
  auto one = single.attend(std::vector<double>{0.2});
  CHECK(one.value[0] == doctest::Approx(7.0));

  KvCache empty(10);
  CHECK_THROWS_AS(empty.attend(std::vector<double>{1.0}), EmptyCacheError);
}

TEST_CASE("kv_compress preserves attention weights for low-rank rows") {
  // Keys spanning a 2-dim subspace of R^4.
  KvCache cache(10);
  std::vector<double> u{0.5, 0.5, 0.5, 0.5}, v{0.5, -0.5, 0.5, -0.5};
  auto mix = [&](double a, double b) {
    std::vector<double> k(4);
    for (int i = 0; i < 4; ++i) k[i] = a * u[i] + b * v[i];
    return k;
  };
  cache.insert(mix(1.0, 0.2), mix(0.3, 0.7), {0});
  cache.insert(mix(-0.4, 1.0), mix(1.0, 0.0), {1});
  cache.insert(mix(0.8, -0.6), mix(0.2, -0.5), {2});

  std::vector<double> q{0.9, -0.1, 0.4, 0.2};
  auto before = cache.attend(q);
  cache.compress(2);
  CHECK(cache.key_dim() == 2);
  auto after = cache.attend(q);
  for (std::size_t i = 0; i < before.weights.size(); ++i)
    CHECK(after.weights[i] == doctest::Approx(before.weights[i]).epsilon(1e-6));

  CHECK_THROWS_AS(cache.compress(2), std::invalid_argument);  // d' = d
  CHECK_THROWS_AS(cache.compress(5), std::invalid_argument);
}

TEST_CASE("kv_compress rank-1 single row") {
  KvCache cache(4);
  cache.insert({3.0, 4.0}, {1.0, 2.0}, {0});
  auto before = cache.attend(std::vector<double>{3.0, 4.0});
  cache.compress(1);
  auto after = cache.attend(std::vector<double>{3.0, 4.0});
  CHECK(after.weights[0] == doctest::Approx(before.weights[0]).epsilon(1e-9));
}

TEST_CASE("kv_evict by relevance") {
  KvCache cache(10);
  cache.insert({1.0}, {1.0}, {0});
  cache.insert({2.0}, {2.0}, {1});
  cache.insert({3.0}, {3.0}, {2});
  cache.set_hits(0, 5);
  cache.set_hits(1, 1);
  cache.set_hits(2, 3);
  cache.evict(2);
  CHECK(cache.size() == 2);
  CHECK(cache.hit_counts()[0] == 5);
  CHECK(cache.hit_counts()[1] == 3);

  // keep == size is the identity.
  cache.evict(2);
  CHECK(cache.size() == 2);

  CHECK_THROWS_AS(cache.evict(0), std::invalid_argument);
}

TEST_CASE("kv_evict keeps exactly the top relevance scores") {
  Rng rng(71);
  for (int round = 0; round < 20; ++round) {
    KvCache cache(64);
    int n = rng.uniform_int(3, 20);
    for (int i = 0; i < n; ++i) cache.insert({rng.normal()}, {0.0}, {i});
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) {
      cache.set_hits(i, rng.uniform_int(0, 6));
      // Insertion order == clock order here, so recency rank == index.
      rho[i] = static_cast<double>(cache.hit_counts()[i]) + 0.1 * i;
    }
    int keep = rng.uniform_int(1, n);
    std::vector<double> sorted = rho;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double threshold = sorted[keep - 1];

    cache.evict(keep);
    CHECK(cache.size() == static_cast<std::size_t>(keep));
    // Every retained score is at least every evicted score.
    for (std::size_t i = 0; i < cache.size(); ++i) {
      std::size_t orig = cache.result_ids()[i][0];
      CHECK(rho[orig] >= threshold);
    }
  }
}

TEST_CASE("kv_evict falls back to recency on zero hits") {
  KvCache cache(10);
  for (int i = 0; i < 5; ++i) cache.insert({static_cast<double>(i)}, {0.0}, {i});
  cache.evict(2);
  CHECK(cache.size() == 2);
  CHECK(cache.entry_keys()[0][0] == doctest::Approx(3.0));
  CHECK(cache.entry_keys()[1][0] == doctest::Approx(4.0));
}

TEST_CASE("build_dictionary tiny corpus k equals n") {
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 4; ++i) patches.push_back(test::natural_image(32, 32, 1, 50 + i));
  DictionaryBuildConfig cfg;
  cfg.clusters = 4;
  cfg.pca_dim = 16;
  cfg.seed = 0;
  Dictionary dict = build_dictionary(patches, cfg);
  CHECK(dict.entries.size() == 4);
  // Every patch became an entry payload.
  std::set<std::string> tags;
  for (const auto& e : dict.entries) tags.insert(e.source_tag);
  CHECK(tags.size() == 4);

  CHECK_THROWS_AS(build_dictionary(patches, DictionaryBuildConfig{5, 16, 256, 50, 0}),
                  std::invalid_argument);
}

TEST_CASE("build_dictionary groups visually distinct families") {
  // Two families: flat-ish patches vs high-contrast texture.
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 3; ++i) {
    Image flat(32, 32, 1);
    Rng rng(200 + i);
    for (auto& v : flat.data)
      v = static_cast<std::uint8_t>(120 + (rng.next_u64() % 5));
    patches.push_back(flat);
  }
  for (int i = 0; i < 3; ++i) patches.push_back(test::random_image(32, 32, 1, 300 + i));

  DictionaryBuildConfig cfg;
  cfg.clusters = 2;
  cfg.pca_dim = 4;
  cfg.seed = 1;
  Dictionary dict = build_dictionary(patches, cfg);

  // The two representatives come from different families.
  auto family = [](const std::string& tag) {
    int idx = std::stoi(tag.substr(tag.find(':') + 1));
    return idx < 3 ? 0 : 1;
  };
  CHECK(family(dict.entries[0].source_tag) != family(dict.entries[1].source_tag));
}

TEST_CASE("build_dictionary deterministic content hash") {
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 5; ++i) patches.push_back(test::natural_image(32, 32, 1, 70 + i));
  DictionaryBuildConfig cfg;
  cfg.clusters = 3;
  cfg.pca_dim = 8;
  cfg.seed = 9;
  Dictionary a = build_dictionary(patches, cfg);
  Dictionary b = build_dictionary(patches, cfg);
  CHECK(a.content_hash == b.content_hash);
}

TEST_CASE("dictionary save load round trip") {
  test::TempDir tmp("dict");
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 4; ++i) patches.push_back(test::natural_image(32, 32, 3, 80 + i));
  DictionaryBuildConfig cfg;
  cfg.clusters = 4;
  cfg.pca_dim = 8;
  cfg.seed = 2;
  Dictionary dict = build_dictionary(patches, cfg);

  std::string path = tmp.file("d.clcd");
  dict_save(dict, path);
  Dictionary loaded = dict_load(path);
  CHECK(loaded.content_hash == dict.content_hash);
  CHECK(loaded.entries.size() == dict.entries.size());
  for (std::size_t i = 0; i < dict.entries.size(); ++i) {
    CHECK(loaded.entries[i].key == dict.entries[i].key);
    CHECK(loaded.entries[i].payload.data == dict.entries[i].payload.data);
    CHECK(loaded.entries[i].source_tag == dict.entries[i].source_tag);
  }
  CHECK(loaded.pca.mean == dict.pca.mean);
  CHECK(loaded.pca.components.data == dict.pca.components.data);

  // Saving the loaded dictionary reproduces identical bytes.
  std::string path2 = tmp.file("d2.clcd");
  dict_save(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("dictionary byte layout is pinned") {
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 2; ++i) patches.push_back(test::natural_image(16, 16, 1, 40 + i));
  DictionaryBuildConfig cfg;
  cfg.clusters = 2;
  cfg.pca_dim = 2;
  cfg.seed = 4;
  Dictionary dict = build_dictionary(patches, cfg);
  auto body = dict_serialize(dict);

  CHECK(body[0] == 'C');
  CHECK(body[1] == 'L');
  CHECK(body[2] == 'C');
  CHECK(body[3] == 'D');
  CHECK(body[4] == 1);  // u16 version
  CHECK(body[5] == 0);
  CHECK(body[6] == 2);  // u32 entry count
  CHECK(body[10] == 2);  // u32 feature dim
  CHECK(body[14] == 252);  // u32 pca input dim = 252 (0xFC)
  CHECK(body[15] == 0);
  // mean f32[252] + components f32[2*252], then entry 0 header.
  std::size_t entry0 = 18 + 4 * (252 + 2 * 252);
  CHECK(body[entry0] == 0);  // u32 id 0
  std::size_t entry0_wh = entry0 + 4 + 4 * 2;  // id + f32 key[2]
  CHECK(body[entry0_wh] == 16);      // u16 width
  CHECK(body[entry0_wh + 2] == 16);  // u16 height
  CHECK(body[entry0_wh + 4] == 1);   // u8 channels
}

TEST_CASE("dictionary load rejects damage with distinct errors") {
  test::TempDir tmp("dictdmg");
  std::vector<ImagePatch> patches;
  for (int i = 0; i < 3; ++i) patches.push_back(test::natural_image(32, 32, 1, 90 + i));
  DictionaryBuildConfig cfg;
  cfg.clusters = 3;
  cfg.pca_dim = 4;
  cfg.seed = 3;
  Dictionary dict = build_dictionary(patches, cfg);
  std::string path = tmp.file("d.clcd");
  dict_save(dict, path);

  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  // Truncated.
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
  CHECK_THROWS_AS(dict_deserialize(cut), ParseError);

  // Corrupted payload byte -> hash mismatch.
  std::vector<std::uint8_t> corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(dict_deserialize(corrupt), HashMismatchError);

  // Bad magic.
  std::vector<std::uint8_t> magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(dict_deserialize(magic), BadMagicError);

  // Version bump (hash re-stamped so the version check fires first).
  std::vector<std::uint8_t> version = bytes;
  version[4] = 9;
  auto digest = sha256({version.data(), version.size() - 32});
  std::copy(digest.begin(), digest.end(), version.end() - 32);
  CHECK_THROWS_AS(dict_deserialize(version), VersionMismatchError);
}

TEST_CASE("retrieve finds the source patch first and dedups rotations") {
  std::vector<Image> patches;
  for (int i = 0; i < 6; ++i) patches.push_back(test::natural_image(32, 32, 1, 500 + i));
  Dictionary dict = test::self_dictionary(patches, 8, 4);
  BallTree tree = BallTree::build(dict.key_matrix());

  for (int target = 0; target < 6; ++target) {
    RetrieveResult r = retrieve(dict, tree, nullptr, patches[target], 3);
    REQUIRE(r.ids.size() == 3);
    CHECK(dict.entries[r.ids[0]].payload.data == patches[target].data);
    CHECK(r.distances[0] <= r.distances[1]);
  }

  // Rotation-symmetric query: both sub-queries agree, dedup keeps m results.
  Image sym(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      double r = std::hypot(x - 15.5, y - 15.5);
      sym.at(x, y, 0) = static_cast<std::uint8_t>(128 + 80 * std::sin(r * 0.8));
    }
  RetrieveResult rs = retrieve(dict, tree, nullptr, sym, 2);
  CHECK(rs.ids.size() == 2);

  CHECK_THROWS_AS(retrieve(dict, tree, nullptr, patches[0], 0), std::invalid_argument);
}

TEST_CASE("retrieve cache serves exact repeats without changing results") {
  std::vector<Image> patches;
  for (int i = 0; i < 5; ++i) patches.push_back(test::natural_image(32, 32, 1, 600 + i));
  Dictionary dict = test::self_dictionary(patches, 8, 5);
  BallTree tree = BallTree::build(dict.key_matrix());

  KvCache cache(4);
  RetrieveResult first = retrieve(dict, tree, &cache, patches[2], 3);
  CHECK_FALSE(first.cache_hit);
  CHECK(first.cache_mutated);
  CHECK(cache.size() == 1);

  RetrieveResult second = retrieve(dict, tree, &cache, patches[2], 3);
  CHECK(second.cache_hit);
  CHECK(second.ids == first.ids);
  CHECK(cache.hit_counts()[0] == 1);

  // Smaller m can be served from the cached list too.
  RetrieveResult third = retrieve(dict, tree, &cache, patches[2], 2);
  CHECK(third.cache_hit);
  CHECK(third.ids == std::vector<int>(first.ids.begin(), first.ids.begin() + 2));

  // Capacity bound: more distinct queries than capacity evicts down.
  for (int i = 0; i < 5; ++i) retrieve(dict, tree, &cache, patches[i], 3);
  CHECK(cache.size() <= 4);
}
