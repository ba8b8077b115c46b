#pragma once

#include <vector>

#include "clc/common.hpp"
#include "clc/image.hpp"

namespace clc {

// Block-transform latent: one plane per color channel, p*p coefficient
// channels per plane, on a bh x bw grid of blocks. Channel u*p+v holds
// coefficient (u, v) of every block.
struct Latent {
  int planes = 0;
  int p = 0;
  int bh = 0;
  int bw = 0;
  int orig_w = 0;
  int orig_h = 0;
  std::vector<double> data;

  Latent() = default;
  Latent(int planes_, int p_, int bh_, int bw_, int ow, int oh)
      : planes(planes_), p(p_), bh(bh_), bw(bw_), orig_w(ow), orig_h(oh),
        data(static_cast<std::size_t>(planes_) * p_ * p_ * bh_ * bw_, 0.0) {}

  int channels_per_plane() const { return p * p; }
  int total_channels() const { return planes * p * p; }
  std::size_t block_count() const { return static_cast<std::size_t>(bh) * bw; }

  std::size_t idx(int plane, int chan, int by, int bx) const {
    return ((static_cast<std::size_t>(plane) * p * p + chan) * bh + by) * bw + bx;
  }
  double& at(int plane, int chan, int by, int bx) { return data[idx(plane, chan, by, bx)]; }
  double at(int plane, int chan, int by, int bx) const { return data[idx(plane, chan, by, bx)]; }

  bool same_shape(const Latent& o) const {
    return planes == o.planes && p == o.p && bh == o.bh && bw == o.bw;
  }
};

// Channel -> slice assignment: zig-zag coefficient order split into K
// contiguous groups, low frequencies first.
struct SliceSchedule {
  int K = 0;
  int p = 0;
  std::vector<int> channel_slice;               // per channel in a plane
  std::vector<std::vector<int>> slice_channels;  // channels per slice, zig-zag order

  static SliceSchedule make(int p, int K);
  int slice_of(int chan) const { return channel_slice[chan]; }
};

// Per (plane, slice group, block) quantized log2-RMS codes, step 0.25,
// clamped to [-8, 8] before quantization.
struct HyperLatent {
  int planes = 0;
  int groups = 0;
  int bh = 0;
  int bw = 0;
  double step = 0.25;
  std::vector<std::int32_t> codes;

  HyperLatent() = default;
  HyperLatent(int planes_, int groups_, int bh_, int bw_)
      : planes(planes_), groups(groups_), bh(bh_), bw(bw_),
        codes(static_cast<std::size_t>(planes_) * groups_ * bh_ * bw_, 0) {}

  std::size_t idx(int plane, int g, int by, int bx) const {
    return ((static_cast<std::size_t>(plane) * groups + g) * bh + by) * bw + bx;
  }
  std::int32_t& at(int plane, int g, int by, int bx) { return codes[idx(plane, g, by, bx)]; }
  std::int32_t at(int plane, int g, int by, int bx) const { return codes[idx(plane, g, by, bx)]; }
};

struct ScaleField {
  int planes = 0;
  int groups = 0;
  int bh = 0;
  int bw = 0;
  std::vector<double> sigma;

  std::size_t idx(int plane, int g, int by, int bx) const {
    return ((static_cast<std::size_t>(plane) * groups + g) * bh + by) * bw + bx;
  }
  double at(int plane, int g, int by, int bx) const { return sigma[idx(plane, g, by, bx)]; }
};

inline constexpr double kSigmaFloor = 0.04;
inline constexpr double kHyperLogClamp = 8.0;

// Per-plane, per-block orthonormal 2-D DCT of the 128-centered samples.
// Dimensions not divisible by p are padded by edge replication; the original
// size is kept on the latent and restored by synthesis.
Latent analysis(const Image& img, int p = 16, Exec exec = Exec::parallel);

// Inverse transform, +128, round, clamp to [0,255], crop padding.
Image synthesis(const Latent& y, Exec exec = Exec::parallel);

HyperLatent hyper_analysis(const Latent& y, const SliceSchedule& sched);
ScaleField hyper_synthesis(const HyperLatent& h);

}  // namespace clc
