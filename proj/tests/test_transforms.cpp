#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "clc/transforms.hpp"
#include "test_support.hpp"

using namespace clc;

TEST_CASE("analysis of mid-gray is the zero latent") {
  Image img(32, 32, 1);
  std::fill(img.data.begin(), img.data.end(), 128);
  Latent y = analysis(img, 16);
  for (double v : y.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant block concentrates in DC") {
  Image img(8, 8, 1);
  std::fill(img.data.begin(), img.data.end(), 200);
  Latent y = analysis(img, 8);
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx((200.0 - 128.0) * 8.0).epsilon(1e-9));
  for (int c = 1; c < 64; ++c) CHECK(y.at(0, c, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));

  // And back: a DC-only latent reproduces the constant block.
  Latent dc(1, 8, 1, 1, 8, 8);
  dc.at(0, 0, 0, 0) = (200.0 - 128.0) * 8.0;
  Image rec = synthesis(dc);
  for (auto v : rec.data) CHECK(static_cast<int>(v) == 200);
}

TEST_CASE("parseval and perfect reconstruction") {
  for (std::uint64_t seed : {1ull, 2ull}) {
    Image img = test::random_image(40, 24, 3, seed);  // forces edge padding at p=16
    Latent y = analysis(img, 16);

    double latent_energy = 0.0;
    for (double v : y.data) latent_energy += v * v;
    // Padded-plane energy: rebuild with edge replication.
    double image_energy = 0.0;
    int pw = y.bw * 16, ph = y.bh * 16;
    for (int c = 0; c < 3; ++c)
      for (int yy = 0; yy < ph; ++yy)
        for (int xx = 0; xx < pw; ++xx) {
          double v = img.at(std::min(xx, img.width - 1), std::min(yy, img.height - 1), c) - 128.0;
          image_energy += v * v;
        }
    CHECK(latent_energy == doctest::Approx(image_energy).epsilon(1e-9));

    Image rec = synthesis(y);
    CHECK(rec.data == img.data);  // bit-exact round trip
    CHECK(rec.width == img.width);
    CHECK(rec.height == img.height);
  }
}

TEST_CASE("synthesis of zero latent is mid-gray") {
  Latent y(1, 16, 2, 2, 32, 32);
  Image img = synthesis(y);
  for (auto v : img.data) CHECK(static_cast<int>(v) == 128);
}

TEST_CASE("analysis rejects empty input") {
  CHECK_THROWS_AS(analysis(Image()), std::invalid_argument);
}

TEST_CASE("slice schedule covers all channels in zig-zag groups") {
  SliceSchedule s = SliceSchedule::make(16, 8);
  CHECK(s.channel_slice.size() == 256);
  std::vector<int> count(8, 0);
  for (int c = 0; c < 256; ++c) {
    CHECK(s.channel_slice[c] >= 0);
    CHECK(s.channel_slice[c] < 8);
    ++count[s.channel_slice[c]];
  }
  for (int k = 0; k < 8; ++k) CHECK(count[k] == 32);
  CHECK(s.channel_slice[0] == 0);          // DC lands in the first slice
  CHECK(s.channel_slice[15 * 16 + 15] == 7);  // highest frequency in the last

  // Every channel appears exactly once across slice_channels.
  std::vector<int> seen(256, 0);
  for (const auto& chans : s.slice_channels)
    for (int c : chans) ++seen[c];
  for (int c = 0; c < 256; ++c) CHECK(seen[c] == 1);
}

TEST_CASE("hyper_analysis quantized log rms") {
  SliceSchedule sched = SliceSchedule::make(4, 2);

  Latent zero(1, 4, 1, 1, 4, 4);
  HyperLatent hz = hyper_analysis(zero, sched);
  for (auto c : hz.codes) CHECK(c == -32);  // clamp floor at log2 = -8

  // Group RMS exactly 1 -> code 0; RMS 2 -> code 4.
  Latent y(1, 4, 1, 1, 4, 4);
  for (int c : sched.slice_channels[0]) y.at(0, c, 0, 0) = 1.0;
  for (int c : sched.slice_channels[1]) y.at(0, c, 0, 0) = 2.0;
  HyperLatent h = hyper_analysis(y, sched);
  CHECK(h.at(0, 0, 0, 0) == 0);
  CHECK(h.at(0, 1, 0, 0) == 4);
}

TEST_CASE("hyper_synthesis floor and identity") {
  HyperLatent h(1, 2, 1, 1);
  h.at(0, 0, 0, 0) = 0;
  h.at(0, 1, 0, 0) = -32;
  ScaleField f = hyper_synthesis(h);
  CHECK(f.at(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(f.at(0, 1, 0, 0) == doctest::Approx(0.04));  // max(2^-8, 0.04)
}

TEST_CASE("hyper round trip stays within one step of true rms") {
  SliceSchedule sched = SliceSchedule::make(8, 4);
  Rng rng(3);
  Latent y(1, 8, 2, 2, 16, 16);
  for (double& v : y.data) v = rng.normal() * 3.0;
  HyperLatent h = hyper_analysis(y, sched);
  ScaleField f = hyper_synthesis(h);
  for (int g = 0; g < 4; ++g) {
    for (int by = 0; by < 2; ++by)
      for (int bx = 0; bx < 2; ++bx) {
        double s = 0.0;
        const auto& chans = sched.slice_channels[g];
        for (int c : chans) {
          double v = y.at(0, c, by, bx);
          s += v * v;
        }
        double rms = std::sqrt(s / chans.size());
        double sigma = f.at(0, g, by, bx);
        CHECK(std::fabs(std::log2(sigma) - std::log2(rms)) <= 0.25 / 2 + 1e-9);
      }
  }
  for (auto c : h.codes) {
    CHECK(c >= -32768);
    CHECK(c <= 32767);
  }
}
