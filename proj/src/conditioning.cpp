#include "clc/conditioning.hpp"

#include <algorithm>
#include <cmath>

namespace clc {

Matrix clm_similarity(const Matrix& target_desc, const Matrix& ref_desc, double tau) {
  if (ref_desc.rows < 1) throw std::invalid_argument("clm_similarity: empty reference set");
  if (target_desc.cols != ref_desc.cols)
    throw std::invalid_argument("clm_similarity: descriptor dims differ");
  Matrix dots(target_desc.rows, ref_desc.rows);
  for (int i = 0; i < target_desc.rows; ++i)
    for (int j = 0; j < ref_desc.rows; ++j) {
      double s = 0.0;
      for (int c = 0; c < target_desc.cols; ++c) s += target_desc(i, c) * ref_desc(j, c);
      dots(i, j) = s;
    }
  return softmax_rows(dots, tau);
}

Matrix block_descriptors(const Latent& y) {
  const int nb = y.bh * y.bw;
  const int dim = y.planes * (y.p * y.p - 1);
  Matrix d(nb, dim);
  for (int by = 0; by < y.bh; ++by) {
    for (int bx = 0; bx < y.bw; ++bx) {
      int row = by * y.bw + bx;
      int c = 0;
      double nrm = 0.0;
      for (int plane = 0; plane < y.planes; ++plane) {
        for (int chan = 1; chan < y.p * y.p; ++chan) {  // skip DC
          double v = y.at(plane, chan, by, bx);
          d(row, c++) = v;
          nrm += v * v;
        }
      }
      nrm = std::sqrt(nrm);
      if (nrm > 0.0)
        for (int j = 0; j < dim; ++j) d(row, j) /= nrm;
    }
  }
  return d;
}

namespace {

struct Anchor {
  int x;
  int y;
};

// Window center: the target position clamped into the reference grid, so
// that references with smaller grids stay addressable.
Anchor anchor_for(int bx, int by, const Latent& ref) {
  return {std::clamp(bx, 0, ref.bw - 1), std::clamp(by, 0, ref.bh - 1)};
}

double block_dot(const Latent& a, int abx, int aby, const Latent& b, int bbx, int bby,
                 bool skip_dc) {
  double s = 0.0;
  for (int plane = 0; plane < a.planes; ++plane)
    for (int chan = skip_dc ? 1 : 0; chan < a.p * a.p; ++chan)
      s += a.at(plane, chan, aby, abx) * b.at(plane, chan, bby, bbx);
  return s;
}

double block_norm2(const Latent& a, int bx, int by, bool skip_dc) {
  double s = 0.0;
  for (int plane = 0; plane < a.planes; ++plane)
    for (int chan = skip_dc ? 1 : 0; chan < a.p * a.p; ++chan) {
      double v = a.at(plane, chan, by, bx);
      s += v * v;
    }
  return s;
}

double block_residual2(const Latent& y, int tbx, int tby, const Latent& r, int rbx,
                       int rby) {
  double s = 0.0;
  for (int plane = 0; plane < y.planes; ++plane)
    for (int chan = 0; chan < y.p * y.p; ++chan) {
      double d = y.at(plane, chan, tby, tbx) - r.at(plane, chan, rby, rbx);
      s += d * d;
    }
  return s;
}

}  // namespace

std::vector<MatchRecord> clm_match(const Latent& y, const std::vector<Latent>& refs,
                                   int window, double tau, Exec exec) {
  if (refs.empty()) throw std::invalid_argument("clm_match: no reference latents");
  if (window < 0 || window > kMaxWindow)
    throw std::invalid_argument("clm_match: window out of range");
  const int usable = std::min<int>(static_cast<int>(refs.size()), kMaxWireRefs);

  // Normalized DC-removed descriptors, targets and references.
  Matrix tdesc = block_descriptors(y);
  std::vector<Matrix> rdesc;
  rdesc.reserve(usable);
  for (int m = 0; m < usable; ++m) rdesc.push_back(block_descriptors(refs[m]));

  const int nb = y.bh * y.bw;
  std::vector<MatchRecord> records(nb);

  parallel_for(nb, exec, [&](std::int64_t bi) {
    const int by = static_cast<int>(bi) / y.bw;
    const int bx = static_cast<int>(bi) % y.bw;
    auto trow = tdesc.row(static_cast<int>(bi));

    double best_dot = -std::numeric_limits<double>::infinity();
    int best_ref = 0, best_dx = 0, best_dy = 0;
    double max_dot = best_dot;
    double sum_exp = 0.0;

    // Two passes share the candidate walk: first the max for a stabilized
    // softmax, then the normalizer.
    std::vector<double> dots;
    dots.reserve(static_cast<std::size_t>(usable) * (2 * window + 1) * (2 * window + 1));
    for (int m = 0; m < usable; ++m) {
      const Latent& ref = refs[m];
      Anchor a = anchor_for(bx, by, ref);
      for (int dy = -window; dy <= window; ++dy) {
        int ry = a.y + dy;
        if (ry < 0 || ry >= ref.bh) continue;
        for (int dx = -window; dx <= window; ++dx) {
          int rx = a.x + dx;
          if (rx < 0 || rx >= ref.bw) continue;
          auto rrow = rdesc[m].row(ry * ref.bw + rx);
          double dot = 0.0;
          for (std::size_t c = 0; c < trow.size(); ++c) dot += trow[c] * rrow[c];
          dots.push_back(dot);
          if (dot > best_dot) {
            best_dot = dot;
            best_ref = m;
            best_dx = dx;
            best_dy = dy;
          }
          max_dot = std::max(max_dot, dot);
        }
      }
    }
    for (double d : dots) sum_exp += std::exp((d - max_dot) / tau);

    MatchRecord& rec = records[bi];
    rec.bx = bx;
    rec.by = by;
    rec.ref_index = best_ref;
    rec.dx = best_dx;
    rec.dy = best_dy;
    rec.score = std::exp((best_dot - max_dot) / tau) / sum_exp;
  });
  return records;
}

void clm_align(const Latent& y, const std::vector<Latent>& refs,
               std::vector<MatchRecord>& records, int window, bool refine_offsets,
               Exec exec) {
  parallel_for(static_cast<std::int64_t>(records.size()), exec, [&](std::int64_t i) {
    MatchRecord& rec = records[i];
    const Latent& ref = refs[rec.ref_index];
    Anchor a = anchor_for(rec.bx, rec.by, ref);

    if (refine_offsets) {
      // Recorded offset first so equal-energy alternatives never displace it.
      int best_dx = rec.dx, best_dy = rec.dy;
      double best_e = block_residual2(y, rec.bx, rec.by, ref, a.x + rec.dx, a.y + rec.dy);
      for (int ddy = -1; ddy <= 1; ++ddy) {
        for (int ddx = -1; ddx <= 1; ++ddx) {
          int dy = std::clamp(rec.dy + ddy, -window, window);
          int dx = std::clamp(rec.dx + ddx, -window, window);
          int ry = a.y + dy, rx = a.x + dx;
          if (ry < 0 || ry >= ref.bh || rx < 0 || rx >= ref.bw) continue;
          double e = block_residual2(y, rec.bx, rec.by, ref, rx, ry);
          if (e < best_e) {
            best_e = e;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }
      rec.dx = best_dx;
      rec.dy = best_dy;
    }

    double den = block_norm2(ref, a.x + rec.dx, a.y + rec.dy, false);
    double g = 0.0;
    if (den > 1e-12) {
      double num = block_dot(y, rec.bx, rec.by, ref, a.x + rec.dx, a.y + rec.dy, false);
      g = std::clamp(num / den, 0.0, 2.0);
    }
    rec.gain_code = static_cast<int>(std::clamp<long>(std::lround(g / kGainStep), 0, 63));
  });
}

void cls_weights(std::vector<MatchRecord>& records, double w0, double w1) {
  for (MatchRecord& rec : records) {
    double alpha = 1.0 / (1.0 + std::exp(-(w0 + w1 * rec.score)));
    rec.alpha_code = std::clamp(static_cast<int>(std::floor(alpha * 16.0)), 0, 15);
  }
}

Latent cls_predict_mean(const Latent& context_pred, const Latent& y_a,
                        std::span<const double> alpha_per_block) {
  if (!context_pred.same_shape(y_a))
    throw std::invalid_argument("cls_predict_mean: shape mismatch");
  if (alpha_per_block.size() != context_pred.block_count())
    throw std::invalid_argument("cls_predict_mean: alpha count mismatch");

  Latent mu = context_pred;
  for (int plane = 0; plane < mu.planes; ++plane)
    for (int chan = 0; chan < mu.p * mu.p; ++chan)
      for (int by = 0; by < mu.bh; ++by)
        for (int bx = 0; bx < mu.bw; ++bx) {
          double a = alpha_per_block[static_cast<std::size_t>(by) * mu.bw + bx];
          mu.at(plane, chan, by, bx) =
              a * context_pred.at(plane, chan, by, bx) + (1.0 - a) * y_a.at(plane, chan, by, bx);
        }
  return mu;
}

Latent synthesize_conditioning(const std::vector<Latent>& refs,
                               const std::vector<MatchRecord>& records,
                               int window, const Latent& shape_like) {
  Latent ya(shape_like.planes, shape_like.p, shape_like.bh, shape_like.bw,
            shape_like.orig_w, shape_like.orig_h);
  const int usable = std::min<int>(static_cast<int>(refs.size()), kMaxWireRefs);

  if (records.size() != ya.block_count())
    throw MalformedBitstreamError("conditioning: record count mismatch");

  for (const MatchRecord& rec : records) {
    if (rec.ref_index < 0 || rec.ref_index >= usable)
      throw MalformedBitstreamError("conditioning: reference index out of range");
    if (std::abs(rec.dx) > window || std::abs(rec.dy) > window)
      throw MalformedBitstreamError("conditioning: offset outside window");
    const Latent& ref = refs[rec.ref_index];
    if (!ref.same_shape(ya) && (ref.planes != ya.planes || ref.p != ya.p))
      throw MalformedBitstreamError("conditioning: reference shape mismatch");
    Anchor a = anchor_for(rec.bx, rec.by, ref);
    int rx = a.x + rec.dx, ry = a.y + rec.dy;
    if (rx < 0 || rx >= ref.bw || ry < 0 || ry >= ref.bh)
      throw MalformedBitstreamError("conditioning: offset outside reference grid");
    double g = dequant_gain(rec.gain_code);
    for (int plane = 0; plane < ya.planes; ++plane)
      for (int chan = 0; chan < ya.p * ya.p; ++chan)
        ya.at(plane, chan, rec.by, rec.bx) = g * ref.at(plane, chan, ry, rx);
  }
  return ya;
}

namespace {

class BitPacker {
 public:
  void put(std::uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((value >> b) & 1));
      if (++fill_ == 8) {
        out_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
  }
  void align() {
    if (fill_ > 0) {
      out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
      acc_ = 0;
      fill_ = 0;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b) {
      if (pos_ >= in_.size() * 8)
        throw MalformedBitstreamError("record section truncated");
      std::uint8_t byte = in_[pos_ / 8];
      v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1);
      ++pos_;
    }
    return v;
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> pack_records(const std::vector<MatchRecord>& records,
                                       int window, int bh, int bw) {
  if (records.size() != static_cast<std::size_t>(bh) * bw)
    throw std::invalid_argument("pack_records: record count mismatch");
  BitPacker pk;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const MatchRecord& r = records[static_cast<std::size_t>(by) * bw + bx];
      pk.put(static_cast<std::uint32_t>(r.ref_index), 2);
      pk.put(static_cast<std::uint32_t>(r.dx + window), 3);
      pk.put(static_cast<std::uint32_t>(r.dy + window), 3);
      pk.put(static_cast<std::uint32_t>(r.gain_code), 6);
      pk.put(static_cast<std::uint32_t>(r.alpha_code), 4);
    }
    pk.align();
  }
  return pk.take();
}

std::vector<MatchRecord> unpack_records(std::span<const std::uint8_t> bytes,
                                        int window, int bh, int bw) {
  const std::size_t row_bytes = (static_cast<std::size_t>(bw) * 18 + 7) / 8;
  if (bytes.size() != row_bytes * bh)
    throw MalformedBitstreamError("record section has wrong length");
  BitUnpacker up(bytes);
  std::vector<MatchRecord> out(static_cast<std::size_t>(bh) * bw);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      MatchRecord& r = out[static_cast<std::size_t>(by) * bw + bx];
      r.bx = bx;
      r.by = by;
      r.ref_index = static_cast<int>(up.get(2));
      r.dx = static_cast<int>(up.get(3)) - window;
      r.dy = static_cast<int>(up.get(3)) - window;
      r.gain_code = static_cast<int>(up.get(6));
      r.alpha_code = static_cast<int>(up.get(4));
    }
    up.align();
  }
  return out;
}

}  // namespace clc
