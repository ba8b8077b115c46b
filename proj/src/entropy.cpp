#include "clc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "clc/numerics.hpp"

namespace clc {

// ---------------------------------------------------------------------------
// Range coder
// ---------------------------------------------------------------------------

void RangeEncoder::encode(std::uint32_t cum_lo, std::uint32_t cum_hi,
                          std::uint32_t total) {
  if (!(cum_lo < cum_hi) || cum_hi > total || total > kFreqTotal)
    throw std::invalid_argument("RangeEncoder: empty or oversized interval");
  range_ /= total;
  low_ += static_cast<std::uint64_t>(cum_lo) * range_;
  range_ *= cum_hi - cum_lo;
  while (range_ < kRangeTop) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t b = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(b + carry));
      b = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFull) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  if (finished_) throw std::logic_error("RangeEncoder::finish called twice");
  finished_ = true;

  // Any code point in [low, low + range) decodes identically; pick the one
  // with the most trailing zero bytes, then drop those zeros.
  std::uint64_t chosen = low_;
  for (int k = 4; k >= 1; --k) {
    std::uint64_t step = 1ull << (8 * k);
    std::uint64_t v = (low_ + step - 1) / step * step;
    if (v < low_ + range_) {
      chosen = v;
      break;
    }
  }
  low_ = chosen;
  for (int i = 0; i < kRangeFlushBytes; ++i) shift_low();

  int trimmed = 0;
  while (trimmed < kRangeFlushBytes && !out_.empty() && out_.back() == 0) {
    out_.pop_back();
    ++trimmed;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
  for (int i = 0; i < kRangeFlushBytes; ++i)
    code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < in_.size()) return in_[pos_++];
  if (++virtual_reads_ > kRangeFlushBytes)
    throw MalformedBitstreamError("entropy payload exhausted");
  return 0;
}

std::uint32_t RangeDecoder::decode_freq(std::uint32_t total) {
  range_ /= total;
  std::uint32_t f = code_ / range_;
  return std::min(f, total - 1);
}

void RangeDecoder::decode_update(std::uint32_t cum_lo, std::uint32_t cum_hi,
                                 std::uint32_t total) {
  (void)total;
  code_ -= cum_lo * range_;
  range_ *= cum_hi - cum_lo;
  while (range_ < kRangeTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

// ---------------------------------------------------------------------------
// Symbol tables
// ---------------------------------------------------------------------------

int SymbolTable::find(std::uint32_t freq) const {
  auto it = std::upper_bound(cum.begin(), cum.end(), freq);
  return static_cast<int>(it - cum.begin()) - 1 - bound;
}

double SymbolTable::bits(int symbol) const {
  auto [lo, hi] = interval(symbol);
  return -std::log2(static_cast<double>(hi - lo) / kFreqTotal);
}

namespace {

// Cumulative construction: floor(F(boundary) * (T - bins)) + index keeps
// every bin at least one count wide and the ends pinned to 0 and T.
SymbolTable build_table(int bound, const std::function<double(double)>& cdf) {
  SymbolTable t;
  t.bound = bound;
  const int bins = 2 * bound + 1;
  if (static_cast<std::uint32_t>(bins) >= kFreqTotal)
    throw std::invalid_argument("symbol table: alphabet too wide");
  const double scale = static_cast<double>(kFreqTotal - bins);
  t.cum.resize(bins + 1);
  t.cum[0] = 0;
  t.cum[bins] = kFreqTotal;
  for (int i = 1; i < bins; ++i) {
    double boundary = (i - bound) - 0.5;  // between symbols i-1-bound and i-bound
    double f = std::clamp(cdf(boundary), 0.0, 1.0);
    t.cum[i] = static_cast<std::uint32_t>(std::floor(f * scale)) + i;
  }
  return t;
}

}  // namespace

SymbolTable make_gaussian_table(double sigma, int bound) {
  if (!(sigma > 0.0)) throw std::invalid_argument("make_gaussian_table: sigma <= 0");
  return build_table(bound, [sigma](double x) { return gaussian_cdf(x / sigma); });
}

SymbolTable make_laplace_table(double scale, int bound) {
  if (!(scale > 0.0)) throw std::invalid_argument("make_laplace_table: scale <= 0");
  auto cdf = [scale](double x) {
    return x < 0.0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
  };
  return build_table(bound, cdf);
}

int gaussian_symbol_bound(double sigma) {
  double want = std::ceil(17.0 * sigma);
  return static_cast<int>(std::clamp(want, 255.0, 16384.0));
}

double gaussian_bin_prob(double mu, double sigma, int k) {
  if (sigma < kSigmaFloor)
    throw std::invalid_argument("gaussian_bin_prob: sigma below floor");
  if (k < -255 || k > 255)
    throw std::invalid_argument("gaussian_bin_prob: symbol outside clipped range");
  double hi = (k == 255) ? 1.0 : gaussian_cdf((k + 0.5 - mu) / sigma);
  double lo = (k == -255) ? 0.0 : gaussian_cdf((k - 0.5 - mu) / sigma);
  return std::max(hi - lo, 0x1.0p-16);
}

QuantResult quantize_residual(double y_elem, double mu, double delta) {
  long symbol = std::lround((y_elem - mu) / delta);
  return {symbol, static_cast<double>(symbol) * delta + mu};
}

double gaussian_rate_bits(int r, double logdet_sigma) {
  return (r * std::log(2.0 * M_PI * M_E) + logdet_sigma) / (2.0 * std::log(2.0));
}

// ---------------------------------------------------------------------------
// Hyperprior codec
// ---------------------------------------------------------------------------

namespace {

const SymbolTable& hyper_table() {
  static const SymbolTable t = make_laplace_table(kHyperLaplaceScale, kHyperSymbolBound);
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_hyper(const HyperLatent& h) {
  const SymbolTable& t = hyper_table();
  RangeEncoder enc;
  for (std::int32_t code : h.codes) {
    if (code < -kHyperSymbolBound || code > kHyperSymbolBound)
      throw std::invalid_argument("encode_hyper: code outside alphabet");
    auto [lo, hi] = t.interval(code);
    enc.encode(lo, hi, kFreqTotal);
  }
  return enc.finish();
}

HyperLatent decode_hyper(std::span<const std::uint8_t> payload, int planes, int groups,
                         int bh, int bw) {
  const SymbolTable& t = hyper_table();
  HyperLatent h(planes, groups, bh, bw);
  RangeDecoder dec(payload);
  for (auto& code : h.codes) {
    std::uint32_t f = dec.decode_freq(kFreqTotal);
    int sym = t.find(f);
    auto [lo, hi] = t.interval(sym);
    dec.decode_update(lo, hi, kFreqTotal);
    code = sym;
  }
  return h;
}

double estimate_hyper_bits(const HyperLatent& h) {
  const SymbolTable& t = hyper_table();
  double bits = 0.0;
  for (std::int32_t code : h.codes) bits += t.bits(code);
  return bits;
}

// ---------------------------------------------------------------------------
// Latent codec
// ---------------------------------------------------------------------------

namespace {

// Per-run cache of Gaussian tables, keyed by the exact scale bits. Scales
// come from a small quantized set, so this stays tiny.
class TableCache {
 public:
  const SymbolTable& get(double sigma_eff) {
    std::uint64_t key;
    std::memcpy(&key, &sigma_eff, 8);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto table = std::make_unique<SymbolTable>(
        make_gaussian_table(sigma_eff, gaussian_symbol_bound(sigma_eff)));
    return *cache_.emplace(key, std::move(table)).first->second;
  }

 private:
  std::unordered_map<std::uint64_t, std::unique_ptr<SymbolTable>> cache_;
};

struct CausalContext {
  const Latent& recon;

  double predict(int plane, int chan, int by, int bx) const {
    double sum = 0.0;
    int n = 0;
    if (bx > 0) {
      sum += recon.at(plane, chan, by, bx - 1);
      ++n;
    }
    if (by > 0) {
      sum += recon.at(plane, chan, by - 1, bx);
      ++n;
    }
    return n > 0 ? sum / n : 0.0;
  }
};

std::vector<double> alpha_per_block(const ConditioningLatent* cond, std::size_t blocks) {
  std::vector<double> alpha(blocks, 1.0);
  if (cond != nullptr) {
    for (const MatchRecord& r : cond->records)
      alpha[static_cast<std::size_t>(r.by) * cond->data.bw + r.bx] =
          dequant_alpha(r.alpha_code);
  }
  return alpha;
}

}  // namespace

LatentEncodeResult encode_latent(const Latent& y, const ConditioningLatent* cond,
                                 const ScaleField& scales, const SliceSchedule& sched,
                                 double delta) {
  if (cond != nullptr && !cond->data.same_shape(y))
    throw std::invalid_argument("encode_latent: conditioning shape mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("encode_latent: delta must be positive");

  LatentEncodeResult out;
  out.reconstructed = Latent(y.planes, y.p, y.bh, y.bw, y.orig_w, y.orig_h);
  out.payloads.resize(sched.K);

  TableCache tables;
  CausalContext ctx{out.reconstructed};
  std::vector<double> alpha = alpha_per_block(cond, y.block_count());

  for (int s = 0; s < sched.K; ++s) {
    RangeEncoder enc;
    for (int plane = 0; plane < y.planes; ++plane) {
      for (int chan : sched.slice_channels[s]) {
        for (int by = 0; by < y.bh; ++by) {
          for (int bx = 0; bx < y.bw; ++bx) {
            double a = alpha[static_cast<std::size_t>(by) * y.bw + bx];
            double ya = cond ? cond->data.at(plane, chan, by, bx) : 0.0;
            double mu = a * ctx.predict(plane, chan, by, bx) + (1.0 - a) * ya;
            double sigma = scales.at(plane, s, by, bx);
            double sigma_eff = std::max(sigma / delta, kSigmaFloor);
            const SymbolTable& t = tables.get(sigma_eff);

            int sym = t.clamp_symbol(std::lround((y.at(plane, chan, by, bx) - mu) / delta));
            auto [lo, hi] = t.interval(sym);
            enc.encode(lo, hi, kFreqTotal);
            out.symbol_bits += t.bits(sym);
            out.reconstructed.at(plane, chan, by, bx) = sym * delta + mu;
          }
        }
      }
    }
    out.payloads[s] = enc.finish();
  }
  return out;
}

Latent decode_latent(const std::vector<std::span<const std::uint8_t>>& payloads,
                     const Latent& shape_like, const ConditioningLatent* cond,
                     const ScaleField& scales, const SliceSchedule& sched,
                     double delta) {
  if (static_cast<int>(payloads.size()) != sched.K)
    throw MalformedBitstreamError("decode_latent: slice payload count mismatch");
  if (!(delta > 0.0)) throw MalformedBitstreamError("decode_latent: invalid delta");

  Latent recon(shape_like.planes, shape_like.p, shape_like.bh, shape_like.bw,
               shape_like.orig_w, shape_like.orig_h);
  TableCache tables;
  CausalContext ctx{recon};
  std::vector<double> alpha = alpha_per_block(cond, recon.block_count());

  for (int s = 0; s < sched.K; ++s) {
    RangeDecoder dec(payloads[s]);
    for (int plane = 0; plane < recon.planes; ++plane) {
      for (int chan : sched.slice_channels[s]) {
        for (int by = 0; by < recon.bh; ++by) {
          for (int bx = 0; bx < recon.bw; ++bx) {
            double a = alpha[static_cast<std::size_t>(by) * recon.bw + bx];
            double ya = cond ? cond->data.at(plane, chan, by, bx) : 0.0;
            double mu = a * ctx.predict(plane, chan, by, bx) + (1.0 - a) * ya;
            double sigma = scales.at(plane, s, by, bx);
            double sigma_eff = std::max(sigma / delta, kSigmaFloor);
            const SymbolTable& t = tables.get(sigma_eff);

            std::uint32_t f = dec.decode_freq(kFreqTotal);
            int sym = t.find(f);
            auto [lo, hi] = t.interval(sym);
            dec.decode_update(lo, hi, kFreqTotal);
            recon.at(plane, chan, by, bx) = sym * delta + mu;
          }
        }
      }
    }
  }
  return recon;
}

double estimate_rate(const Latent& y, const ConditioningLatent* cond,
                     const HyperLatent& hyper, const SliceSchedule& sched,
                     double delta, std::uint8_t m_refs, std::size_t record_bytes) {
  ScaleField scales = hyper_synthesis(hyper);
  LatentEncodeResult coded = encode_latent(y, cond, scales, sched, delta);
  StreamHeader header;
  header.m_refs = m_refs;
  double framing = 8.0 * static_cast<double>(
                             container_overhead_bytes(header, record_bytes, sched.K));
  return framing + estimate_hyper_bits(hyper) + coded.symbol_bits +
         kStreamFinishBits * (sched.K + 1);
}

// ---------------------------------------------------------------------------
// Container
// ---------------------------------------------------------------------------

namespace {

constexpr char kStreamMagic[4] = {'C', 'L', 'C', 'B'};
constexpr std::uint16_t kStreamVersion = 1;

}  // namespace

std::vector<std::uint8_t> write_container(const StreamHeader& h,
                                          std::span<const std::uint8_t> record_bytes,
                                          std::span<const std::uint8_t> hyper_payload,
                                          const std::vector<std::vector<std::uint8_t>>& slices) {
  if (h.entry_ids.size() != h.m_refs)
    throw std::invalid_argument("write_container: entry id count != M");
  if (static_cast<int>(slices.size()) != h.k_slices)
    throw std::invalid_argument("write_container: slice count != K");

  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kStreamMagic), 4});
  w.u16(kStreamVersion);
  w.u32(h.width);
  w.u32(h.height);
  w.u8(h.channels);
  w.u8(h.p);
  w.u8(h.m_refs);
  w.u8(h.k_slices);
  w.f32(h.delta);
  w.u8(h.window);
  w.f32(h.alpha_w0);
  w.f32(h.alpha_w1);
  w.bytes(h.dict_hash);
  w.u8(h.m_refs);
  for (std::uint32_t id : h.entry_ids) w.u32(id);
  w.u32(static_cast<std::uint32_t>(record_bytes.size()));
  w.bytes(record_bytes);
  w.u32(static_cast<std::uint32_t>(hyper_payload.size()));
  w.bytes(hyper_payload);
  for (const auto& s : slices) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    w.bytes(s);
  }
  return w.take();
}

ParsedContainer parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  ParsedContainer out;
  try {
    auto magic = r.bytes(4);
    if (std::memcmp(magic.data(), kStreamMagic, 4) != 0)
      throw MalformedBitstreamError("bitstream: bad magic");
    std::uint16_t version = r.u16();
    if (version != kStreamVersion)
      throw MalformedBitstreamError("bitstream: unsupported version");

    StreamHeader& h = out.header;
    h.width = r.u32();
    h.height = r.u32();
    h.channels = r.u8();
    h.p = r.u8();
    h.m_refs = r.u8();
    h.k_slices = r.u8();
    h.delta = r.f32();
    h.window = r.u8();
    h.alpha_w0 = r.f32();
    h.alpha_w1 = r.f32();
    auto hash = r.bytes(32);
    std::copy(hash.begin(), hash.end(), h.dict_hash.begin());
    std::uint8_t m2 = r.u8();
    if (m2 != h.m_refs) throw MalformedBitstreamError("bitstream: inconsistent M");
    h.entry_ids.resize(h.m_refs);
    for (auto& id : h.entry_ids) id = r.u32();

    if (h.width == 0 || h.height == 0 || (h.channels != 1 && h.channels != 3) ||
        h.p < 2 || h.p > 64 || h.k_slices < 1 ||
        h.k_slices > h.p * h.p || h.window > kMaxWindow || !(h.delta > 0.0f) ||
        !std::isfinite(h.delta))
      throw MalformedBitstreamError("bitstream: implausible header");

    auto rec = r.bytes(r.u32());
    out.record_bytes.assign(rec.begin(), rec.end());
    auto hyp = r.bytes(r.u32());
    out.hyper_payload.assign(hyp.begin(), hyp.end());
    out.slices.resize(h.k_slices);
    for (auto& s : out.slices) {
      auto body = r.bytes(r.u32());
      s.assign(body.begin(), body.end());
    }
    if (r.remaining() != 0) throw MalformedBitstreamError("bitstream: trailing bytes");
  } catch (const MalformedBitstreamError&) {
    throw;
  } catch (const ParseError&) {
    throw MalformedBitstreamError("bitstream: truncated");
  }
  return out;
}

std::size_t container_overhead_bytes(const StreamHeader& header,
                                     std::size_t record_bytes, int k_slices) {
  // magic + version + dims + params + hash + id list + section lengths.
  return 4 + 2 + 4 + 4 + 1 + 1 + 1 + 1 + 4 + 1 + 4 + 4 + 32 + 1 +
         4 * static_cast<std::size_t>(header.m_refs) + 4 + record_bytes + 4 +
         4 * static_cast<std::size_t>(k_slices);
}

}  // namespace clc
