// Times the OpenMP kernels against their serial reference paths and checks
// that both produce identical bits.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <omp.h>

#include "clc/conditioning.hpp"
#include "clc/dictionary.hpp"
#include "clc/features.hpp"
#include "clc/theory.hpp"
#include "clc/transforms.hpp"

using namespace clc;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Image synth_image(int w, int h, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        double v = 128.0 + 50.0 * std::sin(0.05 * x + c) * std::cos(0.07 * y) +
                   10.0 * rng.normal();
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return img;
}

struct Timed {
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  double max_diff = 0.0;
};

void report(const char* name, const Timed& t) {
  std::printf("%-18s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %g\n",
              name, t.serial_ms, t.parallel_ms,
              t.parallel_ms > 0 ? t.serial_ms / t.parallel_ms : 0.0, t.max_diff);
}

template <typename F>
double time_once(F&& f) {
  double t0 = now_ms();
  f();
  return now_ms() - t0;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    Image img = synth_image(1024, 1024, 1, 7);
    Latent a, b;
    Timed t;
    t.serial_ms = time_once([&] { a = analysis(img, 16, Exec::serial); });
    t.parallel_ms = time_once([&] { b = analysis(img, 16, Exec::parallel); });
    for (std::size_t i = 0; i < a.data.size(); ++i)
      t.max_diff = std::max(t.max_diff, std::fabs(a.data[i] - b.data[i]));
    report("block-dct", t);

    Image ra, rb;
    Timed ti;
    ti.serial_ms = time_once([&] { ra = synthesis(a, Exec::serial); });
    ti.parallel_ms = time_once([&] { rb = synthesis(b, Exec::parallel); });
    for (std::size_t i = 0; i < ra.data.size(); ++i)
      ti.max_diff = std::max(ti.max_diff, std::fabs(static_cast<double>(ra.data[i]) - rb.data[i]));
    report("block-idct", ti);
  }

  {
    Image img = synth_image(512, 512, 1, 11);
    FeatureMap a, b;
    Timed t;
    t.serial_ms = time_once([&] { a = filter_bank(img, Exec::serial); });
    t.parallel_ms = time_once([&] { b = filter_bank(img, Exec::parallel); });
    for (std::size_t i = 0; i < a.data.size(); ++i)
      t.max_diff = std::max(t.max_diff, std::fabs(a.data[i] - b.data[i]));
    report("filter-bank", t);
  }

  {
    Image target = synth_image(512, 512, 1, 13);
    Latent y = analysis(target, 16);
    std::vector<Latent> refs;
    for (int i = 0; i < 3; ++i) refs.push_back(analysis(synth_image(512, 512, 1, 17 + i), 16));
    std::vector<MatchRecord> a, b;
    Timed t;
    t.serial_ms = time_once([&] { a = clm_match(y, refs, 2, kDefaultClmTau, Exec::serial); });
    t.parallel_ms = time_once([&] { b = clm_match(y, refs, 2, kDefaultClmTau, Exec::parallel); });
    for (std::size_t i = 0; i < a.size(); ++i) {
      double d = (a[i].ref_index != b[i].ref_index || a[i].dx != b[i].dx ||
                  a[i].dy != b[i].dy)
                     ? 1.0
                     : std::fabs(a[i].score - b[i].score);
      t.max_diff = std::max(t.max_diff, d);
    }
    report("block-match", t);
  }

  {
    Rng rng(23);
    Matrix pts(20000, 32);
    for (auto& v : pts.data) v = rng.normal();
    KmeansResult a, b;
    Timed t;
    {
      Rng r1(5);
      t.serial_ms = time_once([&] { a = minibatch_kmeans(pts, 128, 1024, 20, r1, Exec::serial); });
    }
    {
      Rng r2(5);
      t.parallel_ms =
          time_once([&] { b = minibatch_kmeans(pts, 128, 1024, 20, r2, Exec::parallel); });
    }
    for (std::size_t i = 0; i < a.centroids.data.size(); ++i)
      t.max_diff = std::max(t.max_diff, std::fabs(a.centroids.data[i] - b.centroids.data[i]));
    report("kmeans", t);
  }

  {
    theory::SweepConfig cfg;
    cfg.n = {400};
    cfg.rho = {0.0};
    cfg.trials = 64;
    theory::BoundReport a, b;
    Timed t;
    t.serial_ms = time_once([&] { a = theory::verify_bound(cfg, Exec::serial); });
    t.parallel_ms = time_once([&] { b = theory::verify_bound(cfg, Exec::parallel); });
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      t.max_diff = std::max(t.max_diff, std::fabs(a.rows[i].sin_theta - b.rows[i].sin_theta));
    report("spiked-trials", t);
  }

  return 0;
}
