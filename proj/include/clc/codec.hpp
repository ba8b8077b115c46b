#pragma once

#include <optional>

#include "clc/dictionary.hpp"
#include "clc/entropy.hpp"
#include "clc/metrics.hpp"

namespace clc {

// Random-match injection used by the robustness experiments: each block's
// match is replaced with probability epsilon by a uniformly random reference
// block among the transmitted references. Draws are made for every block
// regardless of epsilon so runs at different levels stay coupled.
struct PerturbSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct CompressOptions {
  int refs = 3;
  double step = 1.0;
  int window = 2;
  double alpha_w0 = 0.0;
  double alpha_w1 = 0.0;
  bool conditional = true;
  bool align = true;       // +-1 offset refinement and gain fit
  bool use_cache = true;
  int block = 16;
  int slices = 8;
  double clm_tau = kDefaultClmTau;
  Exec exec = Exec::parallel;
  std::optional<PerturbSpec> perturb;
};

struct RateBreakdown {
  std::uint64_t total_bits = 0;
  std::uint64_t record_bits = 0;
  std::uint64_t id_bits = 0;
  std::uint64_t hyper_payload_bits = 0;
  std::uint64_t latent_payload_bits = 0;
  double estimated_bits = 0.0;

  std::uint64_t side_info_bits() const { return record_bits + id_bits; }
};

struct CompressResult {
  std::vector<std::uint8_t> bytes;
  Image reconstruction;       // encoder-side decode, bit-equal to the decoder's
  RateBreakdown rate;
  std::vector<std::uint32_t> ref_ids;
  double bpp = 0.0;
  double psnr_db = 0.0;       // against the input
  double seconds = 0.0;
};

CompressResult compress_image(const Image& input, const Dictionary& dict,
                              const BallTree& tree, KvCache* cache,
                              const CompressOptions& opt);

struct DecompressResult {
  Image image;
  StreamHeader header;
};

// Throws HashMismatchError when the stream was produced against a different
// dictionary, MalformedBitstreamError for structural damage.
DecompressResult decompress_image(std::span<const std::uint8_t> bytes,
                                  const Dictionary& dict, Exec exec = Exec::parallel);

}  // namespace clc
