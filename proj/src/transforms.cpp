#include "clc/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace clc {

namespace {

// Orthonormal DCT-II basis, T[u*p + x] = a(u) cos((2x+1) u pi / 2p).
std::vector<double> dct_basis(int p) {
  std::vector<double> t(static_cast<std::size_t>(p) * p);
  for (int u = 0; u < p; ++u) {
    double a = (u == 0) ? std::sqrt(1.0 / p) : std::sqrt(2.0 / p);
    for (int x = 0; x < p; ++x)
      t[static_cast<std::size_t>(u) * p + x] =
          a * std::cos((2 * x + 1) * u * M_PI / (2.0 * p));
  }
  return t;
}

}  // namespace

SliceSchedule SliceSchedule::make(int p, int K) {
  if (p < 1 || K < 1 || K > p * p)
    throw std::invalid_argument("SliceSchedule: invalid p or K");
  SliceSchedule s;
  s.K = K;
  s.p = p;
  s.channel_slice.assign(static_cast<std::size_t>(p) * p, 0);
  s.slice_channels.assign(K, {});

  // Zig-zag walk over (u, v); rank low frequencies first.
  int rank = 0;
  for (int d = 0; d <= 2 * (p - 1); ++d) {
    if (d % 2 == 0) {
      for (int u = std::min(d, p - 1); u >= std::max(0, d - (p - 1)); --u) {
        int v = d - u;
        int chan = u * p + v;
        int sl = rank * K / (p * p);
        s.channel_slice[chan] = sl;
        s.slice_channels[sl].push_back(chan);
        ++rank;
      }
    } else {
      for (int u = std::max(0, d - (p - 1)); u <= std::min(d, p - 1); ++u) {
        int v = d - u;
        int chan = u * p + v;
        int sl = rank * K / (p * p);
        s.channel_slice[chan] = sl;
        s.slice_channels[sl].push_back(chan);
        ++rank;
      }
    }
  }
  return s;
}

Latent analysis(const Image& img, int p, Exec exec) {
  if (img.width <= 0 || img.height <= 0 || img.data.empty())
    throw std::invalid_argument("analysis: empty image");
  if (p < 2) throw std::invalid_argument("analysis: block size too small");

  const int bw = (img.width + p - 1) / p;
  const int bh = (img.height + p - 1) / p;
  Latent y(img.channels, p, bh, bw, img.width, img.height);
  const std::vector<double> t = dct_basis(p);

  const std::int64_t jobs = static_cast<std::int64_t>(img.channels) * bh * bw;
  parallel_for(jobs, exec, [&](std::int64_t job) {
    const int plane = static_cast<int>(job / (static_cast<std::int64_t>(bh) * bw));
    const int rem = static_cast<int>(job % (static_cast<std::int64_t>(bh) * bw));
    const int by = rem / bw;
    const int bx = rem % bw;

    std::vector<double> block(static_cast<std::size_t>(p) * p);
    std::vector<double> tmp(static_cast<std::size_t>(p) * p);
    for (int yy = 0; yy < p; ++yy) {
      int sy = std::min(by * p + yy, img.height - 1);
      for (int xx = 0; xx < p; ++xx) {
        int sx = std::min(bx * p + xx, img.width - 1);
        block[static_cast<std::size_t>(yy) * p + xx] =
            static_cast<double>(img.at(sx, sy, plane)) - 128.0;
      }
    }
    // Rows: tmp = block * T^T, then columns: coef = T * tmp.
    for (int yy = 0; yy < p; ++yy) {
      for (int v = 0; v < p; ++v) {
        double s = 0.0;
        for (int xx = 0; xx < p; ++xx)
          s += block[static_cast<std::size_t>(yy) * p + xx] * t[static_cast<std::size_t>(v) * p + xx];
        tmp[static_cast<std::size_t>(yy) * p + v] = s;
      }
    }
    for (int u = 0; u < p; ++u) {
      for (int v = 0; v < p; ++v) {
        double s = 0.0;
        for (int yy = 0; yy < p; ++yy)
          s += t[static_cast<std::size_t>(u) * p + yy] * tmp[static_cast<std::size_t>(yy) * p + v];
        y.at(plane, u * p + v, by, bx) = s;
      }
    }
  });
  return y;
}

Image synthesis(const Latent& y, Exec exec) {
  if (y.planes <= 0 || y.p <= 0 || y.data.empty())
    throw std::invalid_argument("synthesis: empty latent");
  if (y.bw * y.p < y.orig_w || y.bh * y.p < y.orig_h)
    throw std::invalid_argument("synthesis: latent grid inconsistent with image size");

  const int p = y.p;
  Image img(y.orig_w, y.orig_h, y.planes);
  const std::vector<double> t = dct_basis(p);

  const std::int64_t jobs = static_cast<std::int64_t>(y.planes) * y.bh * y.bw;
  parallel_for(jobs, exec, [&](std::int64_t job) {
    const int plane = static_cast<int>(job / (static_cast<std::int64_t>(y.bh) * y.bw));
    const int rem = static_cast<int>(job % (static_cast<std::int64_t>(y.bh) * y.bw));
    const int by = rem / y.bw;
    const int bx = rem % y.bw;

    std::vector<double> tmp(static_cast<std::size_t>(p) * p);
    std::vector<double> block(static_cast<std::size_t>(p) * p);
    // tmp = T^T * coef
    for (int yy = 0; yy < p; ++yy) {
      for (int v = 0; v < p; ++v) {
        double s = 0.0;
        for (int u = 0; u < p; ++u)
          s += t[static_cast<std::size_t>(u) * p + yy] * y.at(plane, u * p + v, by, bx);
        tmp[static_cast<std::size_t>(yy) * p + v] = s;
      }
    }
    // block = tmp * T
    for (int yy = 0; yy < p; ++yy) {
      for (int xx = 0; xx < p; ++xx) {
        double s = 0.0;
        for (int v = 0; v < p; ++v)
          s += tmp[static_cast<std::size_t>(yy) * p + v] * t[static_cast<std::size_t>(v) * p + xx];
        block[static_cast<std::size_t>(yy) * p + xx] = s;
      }
    }
    for (int yy = 0; yy < p; ++yy) {
      int sy = by * p + yy;
      if (sy >= y.orig_h) break;
      for (int xx = 0; xx < p; ++xx) {
        int sx = bx * p + xx;
        if (sx >= y.orig_w) continue;
        long v = std::lround(block[static_cast<std::size_t>(yy) * p + xx] + 128.0);
        img.at(sx, sy, plane) = static_cast<std::uint8_t>(std::clamp(v, 0l, 255l));
      }
    }
  });
  return img;
}

HyperLatent hyper_analysis(const Latent& y, const SliceSchedule& sched) {
  if (sched.p != y.p) throw std::invalid_argument("hyper_analysis: schedule mismatch");
  HyperLatent h(y.planes, sched.K, y.bh, y.bw);
  for (int plane = 0; plane < y.planes; ++plane) {
    for (int g = 0; g < sched.K; ++g) {
      const auto& chans = sched.slice_channels[g];
      for (int by = 0; by < y.bh; ++by) {
        for (int bx = 0; bx < y.bw; ++bx) {
          double s = 0.0;
          for (int c : chans) {
            double v = y.at(plane, c, by, bx);
            s += v * v;
          }
          double rms = std::sqrt(s / static_cast<double>(chans.size()));
          double lg = rms > 0.0 ? std::log2(rms) : -kHyperLogClamp;
          lg = std::clamp(lg, -kHyperLogClamp, kHyperLogClamp);
          h.at(plane, g, by, bx) = static_cast<std::int32_t>(std::llround(lg / h.step));
        }
      }
    }
  }
  return h;
}

ScaleField hyper_synthesis(const HyperLatent& h) {
  ScaleField f;
  f.planes = h.planes;
  f.groups = h.groups;
  f.bh = h.bh;
  f.bw = h.bw;
  f.sigma.resize(h.codes.size());
  for (std::size_t i = 0; i < h.codes.size(); ++i)
    f.sigma[i] = std::max(std::exp2(h.codes[i] * h.step), kSigmaFloor);
  return f;
}

}  // namespace clc
