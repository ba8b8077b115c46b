#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "clc/common.hpp"
#include "clc/conditioning.hpp"
#include "clc/transforms.hpp"

namespace clc {

// ---------------------------------------------------------------------------
// Byte-oriented range coder, 32-bit range with carry propagation through a
// pending-byte cache. The finisher picks the code point with the most
// trailing zero bytes and trims them (at most the flush size); the decoder
// zero-feeds the same number of bytes past the stored payload and treats any
// further demand as a malformed stream.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kRangeTop = 1u << 24;
inline constexpr int kRangeFlushBytes = 5;

class RangeEncoder {
 public:
  RangeEncoder() = default;

  void encode(std::uint32_t cum_lo, std::uint32_t cum_hi, std::uint32_t total);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> in);

  std::uint32_t decode_freq(std::uint32_t total);
  void decode_update(std::uint32_t cum_lo, std::uint32_t cum_hi, std::uint32_t total);

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  int virtual_reads_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// ---------------------------------------------------------------------------
// Integer symbol tables over [-bound, bound], total mass 2^16, every bin at
// least 1/2^16. Tail bins absorb all out-of-range mass.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFreqTotal = 1u << 16;

struct SymbolTable {
  int bound = 0;
  std::vector<std::uint32_t> cum;  // size 2*bound + 2

  int symbol_count() const { return 2 * bound + 1; }
  std::pair<std::uint32_t, std::uint32_t> interval(int symbol) const {
    std::size_t i = static_cast<std::size_t>(symbol + bound);
    return {cum[i], cum[i + 1]};
  }
  int find(std::uint32_t freq) const;  // symbol whose interval contains freq
  double bits(int symbol) const;
  int clamp_symbol(long s) const {
    return static_cast<int>(std::clamp<long>(s, -bound, bound));
  }
};

SymbolTable make_gaussian_table(double sigma, int bound);
SymbolTable make_laplace_table(double scale, int bound);

// Symbol alphabet grows with the declared scale so that block-mean spikes at
// fine steps stay codable; small scales keep the compact 511-bin alphabet.
int gaussian_symbol_bound(double sigma);

// Probability of the integer bin k under N(mu, sigma^2) with half-open unit
// bins, tails folded into the [-255, 255] range, floored at 2^-16.
double gaussian_bin_prob(double mu, double sigma, int k);

// Uniform scalar quantization of y around mu with step delta,
// round-half-away-from-zero; reconstruction = symbol * delta + mu.
struct QuantResult {
  long symbol;
  double reconstruction;
};
QuantResult quantize_residual(double y_elem, double mu, double delta);

// Differential-entropy rate of an r-dimensional Gaussian in bits:
// (r ln(2 pi e) + logdet) / (2 ln 2).
double gaussian_rate_bits(int r, double logdet_sigma);

// ---------------------------------------------------------------------------
// Hyperprior codec: static Laplace over integers, scale 8, alphabet [-256, 256].
// ---------------------------------------------------------------------------

inline constexpr double kHyperLaplaceScale = 8.0;
inline constexpr int kHyperSymbolBound = 256;

std::vector<std::uint8_t> encode_hyper(const HyperLatent& h);
HyperLatent decode_hyper(std::span<const std::uint8_t> payload, int planes, int groups,
                         int bh, int bw);
double estimate_hyper_bits(const HyperLatent& h);

// ---------------------------------------------------------------------------
// Slice-ordered latent codec. mu is the per-block convex fusion of the causal
// neighbor context (reconstructed left/top, same channel) with the
// conditioning latent; sigma comes from the hyper scale field divided by the
// quantization step.
// ---------------------------------------------------------------------------

struct LatentEncodeResult {
  std::vector<std::vector<std::uint8_t>> payloads;  // one per slice
  Latent reconstructed;
  double symbol_bits = 0.0;
};

// cond may be null (unconditional path, alpha = 1).
LatentEncodeResult encode_latent(const Latent& y, const ConditioningLatent* cond,
                                 const ScaleField& scales, const SliceSchedule& sched,
                                 double delta);

Latent decode_latent(const std::vector<std::span<const std::uint8_t>>& payloads,
                     const Latent& shape_like, const ConditioningLatent* cond,
                     const ScaleField& scales, const SliceSchedule& sched,
                     double delta);

// Per-stream allowance for coder finalization bytes.
inline constexpr double kStreamFinishBits = 16.0;

// Predicted size in bits of the full stream: container framing, hyper and
// slice model cross-entropy, and finalization allowances. Tracks the actual
// encoder to within its coder slack.
double estimate_rate(const Latent& y, const ConditioningLatent* cond,
                     const HyperLatent& hyper, const SliceSchedule& sched,
                     double delta, std::uint8_t m_refs, std::size_t record_bytes);

// ---------------------------------------------------------------------------
// "CLCB" v1 container.
// ---------------------------------------------------------------------------

struct StreamHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t channels = 0;
  std::uint8_t p = 16;
  std::uint8_t m_refs = 0;  // 0 = unconditional stream
  std::uint8_t k_slices = 8;
  float delta = 1.0f;
  std::uint8_t window = 2;
  float alpha_w0 = 0.0f;
  float alpha_w1 = 0.0f;
  std::array<std::uint8_t, 32> dict_hash{};
  std::vector<std::uint32_t> entry_ids;
};

std::vector<std::uint8_t> write_container(const StreamHeader& header,
                                          std::span<const std::uint8_t> record_bytes,
                                          std::span<const std::uint8_t> hyper_payload,
                                          const std::vector<std::vector<std::uint8_t>>& slices);

struct ParsedContainer {
  StreamHeader header;
  std::vector<std::uint8_t> record_bytes;
  std::vector<std::uint8_t> hyper_payload;
  std::vector<std::vector<std::uint8_t>> slices;
};

ParsedContainer parse_container(std::span<const std::uint8_t> bytes);

// Container bytes excluding the entropy payload bodies; exact by construction.
std::size_t container_overhead_bytes(const StreamHeader& header,
                                     std::size_t record_bytes, int k_slices);

}  // namespace clc
