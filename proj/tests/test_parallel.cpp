// Serial reference vs OpenMP kernels: both schedules must emit identical bits.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "clc/codec.hpp"
#include "clc/conditioning.hpp"
#include "clc/dictionary.hpp"
#include "clc/features.hpp"
#include "clc/theory.hpp"
#include "clc/transforms.hpp"
#include "test_support.hpp"

using namespace clc;

TEST_CASE("analysis and synthesis match across schedules") {
  Image img = test::natural_image(72, 56, 3, 1);
  Latent a = analysis(img, 16, Exec::serial);
  Latent b = analysis(img, 16, Exec::parallel);
  CHECK(a.data == b.data);

  Image ra = synthesis(a, Exec::serial);
  Image rb = synthesis(b, Exec::parallel);
  CHECK(ra.data == rb.data);
}

TEST_CASE("filter bank and features match across schedules") {
  Image img = test::natural_image(40, 40, 1, 2);
  FeatureMap a = filter_bank(img, Exec::serial);
  FeatureMap b = filter_bank(img, Exec::parallel);
  CHECK(a.data == b.data);

  FeatureVector fa = extract_feature(img, nullptr, Exec::serial);
  FeatureVector fb = extract_feature(img, nullptr, Exec::parallel);
  CHECK(fa.data == fb.data);
}

TEST_CASE("block matching matches across schedules") {
  Image target = test::natural_image(64, 64, 1, 3);
  Latent y = analysis(target, 16);
  std::vector<Latent> refs;
  for (int i = 0; i < 3; ++i)
    refs.push_back(analysis(test::natural_image(64, 64, 1, 10 + i), 16));

  auto a = clm_match(y, refs, 2, kDefaultClmTau, Exec::serial);
  auto b = clm_match(y, refs, 2, kDefaultClmTau, Exec::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ref_index == b[i].ref_index);
    CHECK(a[i].dx == b[i].dx);
    CHECK(a[i].dy == b[i].dy);
    CHECK(a[i].score == b[i].score);
  }

  clm_align(y, refs, a, 2, true, Exec::serial);
  clm_align(y, refs, b, 2, true, Exec::parallel);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].dx == b[i].dx);
    CHECK(a[i].gain_code == b[i].gain_code);
  }
}

TEST_CASE("kmeans matches across schedules") {
  Rng data_rng(4);
  Matrix pts(500, 8);
  for (auto& v : pts.data) v = data_rng.normal();
  Rng r1(7), r2(7);
  KmeansResult a = minibatch_kmeans(pts, 16, 128, 12, r1, Exec::serial);
  KmeansResult b = minibatch_kmeans(pts, 16, 128, 12, r2, Exec::parallel);
  CHECK(a.centroids.data == b.centroids.data);
  CHECK(a.assignments == b.assignments);
}

TEST_CASE("whole codec emits identical bytes across schedules") {
  std::vector<Image> pool;
  for (int i = 0; i < 4; ++i) pool.push_back(test::natural_image(64, 64, 1, 20 + i));
  Dictionary dict = test::self_dictionary(pool, 8, 9);
  BallTree tree = BallTree::build(dict.key_matrix());

  CompressOptions serial_opt;
  serial_opt.exec = Exec::serial;
  CompressOptions parallel_opt;
  parallel_opt.exec = Exec::parallel;

  for (const Image& img : pool) {
    CompressResult a = compress_image(img, dict, tree, nullptr, serial_opt);
    CompressResult b = compress_image(img, dict, tree, nullptr, parallel_opt);
    CHECK(a.bytes == b.bytes);
    CHECK(a.reconstruction.data == b.reconstruction.data);
  }
}

TEST_CASE("theory trials match across schedules") {
  theory::SweepConfig cfg;
  cfg.n = {100};
  cfg.rho = {0.0, 0.5};
  cfg.trials = 16;
  theory::BoundReport a = theory::verify_bound(cfg, Exec::serial);
  theory::BoundReport b = theory::verify_bound(cfg, Exec::parallel);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(a.rows[i].sin_theta == b.rows[i].sin_theta);
  CHECK(a.fitted_c == b.fitted_c);
}
