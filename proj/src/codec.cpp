#include "clc/codec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace clc {

namespace {

// Reference payloads may not share the input's channel count; the latent is
// adapted deterministically (gray replicated across planes, color averaged
// down) so both codec sides agree.
Latent reference_latent(const Image& payload, int target_planes, int p, Exec exec) {
  Latent ref = analysis(payload, p, exec);
  if (ref.planes == target_planes) return ref;
  Latent out(target_planes, ref.p, ref.bh, ref.bw, ref.orig_w, ref.orig_h);
  const std::size_t plane_size = static_cast<std::size_t>(ref.p) * ref.p * ref.bh * ref.bw;
  if (ref.planes == 1) {
    for (int plane = 0; plane < target_planes; ++plane)
      std::copy_n(ref.data.begin(), plane_size, out.data.begin() + plane * plane_size);
  } else {
    for (std::size_t i = 0; i < plane_size; ++i) {
      double sum = 0.0;
      for (int plane = 0; plane < ref.planes; ++plane)
        sum += ref.data[plane * plane_size + i];
      out.data[i] = sum / ref.planes;
    }
  }
  return out;
}

// Scale statistics come from the residual against a provisional mean built on
// the unquantized latent; at coding time the context switches to
// reconstructed values, which tracks this closely at any step size.
Latent provisional_residual(const Latent& y, const ConditioningLatent* cond) {
  Latent resid(y.planes, y.p, y.bh, y.bw, y.orig_w, y.orig_h);
  std::vector<double> alpha(y.block_count(), 1.0);
  if (cond != nullptr)
    for (const MatchRecord& r : cond->records)
      alpha[static_cast<std::size_t>(r.by) * y.bw + r.bx] = dequant_alpha(r.alpha_code);

  for (int plane = 0; plane < y.planes; ++plane) {
    for (int chan = 0; chan < y.p * y.p; ++chan) {
      for (int by = 0; by < y.bh; ++by) {
        for (int bx = 0; bx < y.bw; ++bx) {
          double sum = 0.0;
          int n = 0;
          if (bx > 0) {
            sum += y.at(plane, chan, by, bx - 1);
            ++n;
          }
          if (by > 0) {
            sum += y.at(plane, chan, by - 1, bx);
            ++n;
          }
          double ctx = n > 0 ? sum / n : 0.0;
          double a = alpha[static_cast<std::size_t>(by) * y.bw + bx];
          double ya = cond ? cond->data.at(plane, chan, by, bx) : 0.0;
          double mu = a * ctx + (1.0 - a) * ya;
          resid.at(plane, chan, by, bx) = y.at(plane, chan, by, bx) - mu;
        }
      }
    }
  }
  return resid;
}

void perturb_records(std::vector<MatchRecord>& records, const std::vector<Latent>& refs,
                     int window, const PerturbSpec& spec) {
  Rng rng(splitmix64(spec.seed ^ 0xC1C0DEull));
  const int usable = std::min<int>(static_cast<int>(refs.size()), kMaxWireRefs);
  for (MatchRecord& rec : records) {
    // Draw everything unconditionally to keep epsilon levels coupled.
    double u = rng.uniform();
    int rref = rng.uniform_int(0, usable - 1);
    int rdx = rng.uniform_int(-window, window);
    int rdy = rng.uniform_int(-window, window);
    if (u >= spec.epsilon) continue;
    const Latent& ref = refs[rref];
    int ax = std::clamp(rec.bx, 0, ref.bw - 1);
    int ay = std::clamp(rec.by, 0, ref.bh - 1);
    rec.ref_index = rref;
    rec.dx = std::clamp(ax + rdx, 0, ref.bw - 1) - ax;
    rec.dy = std::clamp(ay + rdy, 0, ref.bh - 1) - ay;
    rec.score = 0.0;
  }
}

}  // namespace

CompressResult compress_image(const Image& input, const Dictionary& dict,
                              const BallTree& tree, KvCache* cache,
                              const CompressOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  if (opt.window < 0 || opt.window > kMaxWindow)
    throw std::invalid_argument("compress: window must be in [0, 3]");
  if (!(opt.step > 0.0)) throw std::invalid_argument("compress: step must be positive");
  if (opt.refs < 1) throw std::invalid_argument("compress: refs must be positive");

  const SliceSchedule sched = SliceSchedule::make(opt.block, opt.slices);
  Latent y = analysis(input, opt.block, opt.exec);

  StreamHeader header;
  header.width = static_cast<std::uint32_t>(input.width);
  header.height = static_cast<std::uint32_t>(input.height);
  header.channels = static_cast<std::uint8_t>(input.channels);
  header.p = static_cast<std::uint8_t>(opt.block);
  header.k_slices = static_cast<std::uint8_t>(opt.slices);
  header.delta = static_cast<float>(opt.step);
  header.window = static_cast<std::uint8_t>(opt.window);
  header.alpha_w0 = static_cast<float>(opt.alpha_w0);
  header.alpha_w1 = static_cast<float>(opt.alpha_w1);
  header.dict_hash = dict.content_hash;

  std::optional<ConditioningLatent> cond_opt;
  std::vector<std::uint8_t> record_bytes;

  if (opt.conditional) {
    RetrieveResult hits = retrieve(dict, tree, opt.use_cache ? cache : nullptr, input,
                                   opt.refs, opt.exec);
    std::vector<Latent> refs;
    refs.reserve(hits.ids.size());
    for (int id : hits.ids) {
      header.entry_ids.push_back(static_cast<std::uint32_t>(id));
      refs.push_back(reference_latent(dict.entries[id].payload, input.channels,
                                      opt.block, opt.exec));
    }
    header.m_refs = static_cast<std::uint8_t>(header.entry_ids.size());

    std::vector<MatchRecord> records =
        clm_match(y, refs, opt.window, opt.clm_tau, opt.exec);
    if (opt.align) {
      clm_align(y, refs, records, opt.window, true, opt.exec);
    } else {
      for (MatchRecord& r : records) r.gain_code = 32;  // unit gain
    }
    if (opt.perturb) {
      perturb_records(records, refs, opt.window, *opt.perturb);
      // Injected blocks go through the same gain fit as real matches.
      if (opt.align) clm_align(y, refs, records, opt.window, false, opt.exec);
    }
    cls_weights(records, opt.alpha_w0, opt.alpha_w1);

    ConditioningLatent cond;
    cond.records = std::move(records);
    cond.data = synthesize_conditioning(refs, cond.records, opt.window, y);
    record_bytes = pack_records(cond.records, opt.window, y.bh, y.bw);
    cond_opt = std::move(cond);
  }

  const ConditioningLatent* cptr = cond_opt ? &*cond_opt : nullptr;
  Latent resid = provisional_residual(y, cptr);
  HyperLatent hyper = hyper_analysis(resid, sched);
  ScaleField scales = hyper_synthesis(hyper);
  std::vector<std::uint8_t> hyper_payload = encode_hyper(hyper);

  LatentEncodeResult coded = encode_latent(y, cptr, scales, sched, opt.step);

  CompressResult out;
  out.bytes = write_container(header, record_bytes, hyper_payload, coded.payloads);
  out.reconstruction = synthesis(coded.reconstructed, opt.exec);
  out.ref_ids = header.entry_ids;

  RateBreakdown& rb = out.rate;
  rb.total_bits = 8ull * out.bytes.size();
  rb.record_bits = 8ull * record_bytes.size();
  rb.id_bits = 8ull * (1 + 4ull * header.m_refs);
  rb.hyper_payload_bits = 8ull * hyper_payload.size();
  for (const auto& s : coded.payloads) rb.latent_payload_bits += 8ull * s.size();
  // Exact framing + model cross-entropy + per-stream finalization allowance;
  // same accounting as the standalone estimate_rate, reusing this encode pass.
  double framing =
      8.0 * static_cast<double>(
                container_overhead_bytes(header, record_bytes.size(), opt.slices));
  rb.estimated_bits = framing + estimate_hyper_bits(hyper) + coded.symbol_bits +
                      kStreamFinishBits * (opt.slices + 1);

  out.bpp = static_cast<double>(rb.total_bits) /
            (static_cast<double>(input.width) * input.height);
  out.psnr_db = psnr(input, out.reconstruction);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

DecompressResult decompress_image(std::span<const std::uint8_t> bytes,
                                  const Dictionary& dict, Exec exec) {
  ParsedContainer pc = parse_container(bytes);
  const StreamHeader& h = pc.header;

  if (!std::equal(h.dict_hash.begin(), h.dict_hash.end(), dict.content_hash.begin()))
    throw HashMismatchError("bitstream was produced against a different dictionary");

  const SliceSchedule sched = SliceSchedule::make(h.p, h.k_slices);
  const int bw = (static_cast<int>(h.width) + h.p - 1) / h.p;
  const int bh = (static_cast<int>(h.height) + h.p - 1) / h.p;
  Latent shape(h.channels, h.p, bh, bw, static_cast<int>(h.width),
               static_cast<int>(h.height));

  std::optional<ConditioningLatent> cond;
  if (h.m_refs > 0) {
    std::vector<Latent> refs;
    refs.reserve(h.entry_ids.size());
    for (std::uint32_t id : h.entry_ids) {
      if (id >= dict.entries.size())
        throw MalformedBitstreamError("bitstream: entry id outside dictionary");
      refs.push_back(reference_latent(dict.entries[id].payload, h.channels, h.p, exec));
    }
    ConditioningLatent c;
    c.records = unpack_records(pc.record_bytes, h.window, bh, bw);
    c.data = synthesize_conditioning(refs, c.records, h.window, shape);
    cond = std::move(c);
  } else if (!pc.record_bytes.empty()) {
    throw MalformedBitstreamError("bitstream: records present without references");
  }

  HyperLatent hyper = decode_hyper(pc.hyper_payload, h.channels, h.k_slices, bh, bw);
  ScaleField scales = hyper_synthesis(hyper);

  std::vector<std::span<const std::uint8_t>> payloads;
  payloads.reserve(pc.slices.size());
  for (const auto& s : pc.slices) payloads.emplace_back(s);

  const ConditioningLatent* cptr = cond ? &*cond : nullptr;
  Latent recon = decode_latent(payloads, shape, cptr, scales, sched,
                               static_cast<double>(h.delta));

  DecompressResult out;
  out.image = synthesis(recon, exec);
  out.header = h;
  return out;
}

}  // namespace clc
