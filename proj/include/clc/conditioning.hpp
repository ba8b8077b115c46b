#pragma once

#include <vector>

#include "clc/common.hpp"
#include "clc/numerics.hpp"
#include "clc/transforms.hpp"

namespace clc {

// Per-block match side information. Everything the decoder needs is the
// quantized fields; score stays encoder-side and only feeds the fusion
// weight.
struct MatchRecord {
  int bx = 0;
  int by = 0;
  int ref_index = 0;
  int dx = 0;  // window offset, |dx| <= window
  int dy = 0;
  double score = 0.0;
  int gain_code = 32;   // 6 bits, step 2/64
  int alpha_code = 8;   // 4 bits
};

struct ConditioningLatent {
  Latent data;
  std::vector<MatchRecord> records;
};

inline constexpr double kGainStep = 2.0 / 64.0;
inline constexpr int kMaxWireRefs = 4;   // ref_index is a 2-bit field
inline constexpr int kMaxWindow = 3;     // offsets are 3-bit fields biased by +w
inline constexpr double kDefaultClmTau = 0.1;

inline double dequant_gain(int code) { return code * kGainStep; }
inline double dequant_alpha(int code) { return (code + 0.5) / 16.0; }

// Row-wise softmax of descriptor inner products at temperature tau.
Matrix clm_similarity(const Matrix& target_desc, const Matrix& ref_desc, double tau);

// Per-block descriptors: all channels of all planes with the DC channel of
// each plane removed, L2-normalized. Rows in raster block order.
Matrix block_descriptors(const Latent& y);

// For each target block, the argmax-similarity block among all references
// within a centered window (anchored at the target position clamped into the
// reference grid). Ties: smaller ref_index, then smaller (dy, dx).
std::vector<MatchRecord> clm_match(const Latent& y, const std::vector<Latent>& refs,
                                   int window, double tau = kDefaultClmTau,
                                   Exec exec = Exec::parallel);

// Refines each offset by exhaustive +-1 re-search minimizing residual energy,
// then fits and quantizes the per-block gain clip(<y,r>/||r||^2, 0, 2).
// refine_offsets=false refits gains only, leaving offsets untouched.
void clm_align(const Latent& y, const std::vector<Latent>& refs,
               std::vector<MatchRecord>& records, int window,
               bool refine_offsets = true, Exec exec = Exec::parallel);

// alpha = sigmoid(w0 + w1 * score), quantized to 16 levels; the decoder sees
// only alpha_code.
void cls_weights(std::vector<MatchRecord>& records, double w0, double w1);

// Elementwise alpha * context + (1 - alpha) * y_a with alpha broadcast per
// block.
Latent cls_predict_mean(const Latent& context_pred, const Latent& y_a,
                        std::span<const double> alpha_per_block);

// Decoder-side (and, for symmetry, encoder-side) materialization of the
// conditioning latent from reference latents plus records. Throws
// MalformedBitstreamError on any out-of-window or out-of-grid record.
Latent synthesize_conditioning(const std::vector<Latent>& refs,
                               const std::vector<MatchRecord>& records,
                               int window, const Latent& shape_like);

// 18-bit packed records, byte-aligned per row of blocks.
std::vector<std::uint8_t> pack_records(const std::vector<MatchRecord>& records,
                                       int window, int bh, int bw);
std::vector<MatchRecord> unpack_records(std::span<const std::uint8_t> bytes,
                                        int window, int bh, int bw);

}  // namespace clc
