#include "clc/features.hpp"

#include <algorithm>
#include <cmath>

namespace clc {

Image rotate90(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
  return out;
}

namespace {

// Plane of doubles with clamped access.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;

  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double get(int x, int y) const {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return v[static_cast<std::size_t>(y) * w + x];
  }
};

Plane to_gray(const ImagePatch& p) {
  Plane g(p.width, p.height);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      double v;
      if (p.channels == 3) {
        v = 0.299 * p.at(x, y, 0) + 0.587 * p.at(x, y, 1) + 0.114 * p.at(x, y, 2);
      } else {
        v = p.at(x, y, 0);
      }
      g.at(x, y) = v / 255.0;
    }
  }
  return g;
}

// Separable box mean of side 2r+1 with clamped borders.
Plane box_mean(const Plane& src, int r, Exec exec) {
  Plane tmp(src.w, src.h);
  parallel_for(src.h, exec, [&](std::int64_t y) {
    for (int x = 0; x < src.w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += src.get(x + k, static_cast<int>(y));
      tmp.at(x, static_cast<int>(y)) = s / (2 * r + 1);
    }
  });
  Plane out(src.w, src.h);
  parallel_for(src.h, exec, [&](std::int64_t y) {
    for (int x = 0; x < src.w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp.get(x, static_cast<int>(y) + k);
      out.at(x, static_cast<int>(y)) = s / (2 * r + 1);
    }
  });
  return out;
}

double dx_at(const Plane& p, int x, int y) {
  return 0.5 * (p.get(x + 1, y) - p.get(x - 1, y));
}
double dy_at(const Plane& p, int x, int y) {
  return 0.5 * (p.get(x, y + 1) - p.get(x, y - 1));
}

}  // namespace

FeatureMap filter_bank(const ImagePatch& patch, Exec exec) {
  if (patch.width < 16 || patch.height < 16)
    throw std::invalid_argument("filter_bank: patch smaller than 16x16");
  if (patch.channels != 1 && patch.channels != 3)
    throw std::invalid_argument("filter_bank: unsupported channel count");

  const int w = patch.width, h = patch.height;
  Plane gray = to_gray(patch);
  Plane blur3 = box_mean(gray, 1, exec);
  Plane blur7 = box_mean(gray, 3, exec);
  Plane coarse = box_mean(gray, 4, exec);

  Plane sq(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) sq.at(x, y) = gray.get(x, y) * gray.get(x, y);
  Plane mean5 = box_mean(gray, 2, exec);
  Plane mean5sq = box_mean(sq, 2, exec);

  FeatureMap out(kFilterBankBands, w, h);
  const double inv_sqrt2 = M_SQRT1_2;

  parallel_for(h, exec, [&](std::int64_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      double gx = dx_at(gray, x, y);
      double gy = dy_at(gray, x, y);
      double bx3 = dx_at(blur3, x, y);
      double by3 = dy_at(blur3, x, y);
      double bx7 = dx_at(blur7, x, y);
      double by7 = dy_at(blur7, x, y);

      out.at(0, y, x) = gray.get(x, y);
      out.at(1, y, x) = std::fabs(gx);
      out.at(2, y, x) = std::fabs(gy);
      out.at(3, y, x) = std::hypot(bx3, by3);
      out.at(4, y, x) = std::hypot(bx7, by7);
      out.at(5, y, x) = std::fabs(bx3);
      out.at(6, y, x) = std::fabs(inv_sqrt2 * (bx3 + by3));
      out.at(7, y, x) = std::fabs(by3);
      out.at(8, y, x) = std::fabs(inv_sqrt2 * (bx3 - by3));
      out.at(9, y, x) = std::max(0.0, mean5sq.get(x, y) - mean5.get(x, y) * mean5.get(x, y));
      out.at(10, y, x) = std::fabs(4.0 * gray.get(x, y) - gray.get(x - 1, y) -
                                   gray.get(x + 1, y) - gray.get(x, y - 1) -
                                   gray.get(x, y + 1));
      out.at(11, y, x) = coarse.get(x, y);
    }
  });
  return out;
}

FeatureVector spp_pool(const FeatureMap& map) {
  if (map.width < 4 || map.height < 4)
    throw std::invalid_argument("spp_pool: map smaller than finest 4x4 scale");

  static constexpr int kScales[] = {1, 2, 4};
  FeatureVector out;
  out.data.reserve(static_cast<std::size_t>(map.bands) * kSppCells);

  for (int s : kScales) {
    for (int cy = 0; cy < s; ++cy) {
      int y0 = cy * map.height / s;
      int y1 = (cy + 1) * map.height / s;
      for (int cx = 0; cx < s; ++cx) {
        int x0 = cx * map.width / s;
        int x1 = (cx + 1) * map.width / s;
        for (int b = 0; b < map.bands; ++b) {
          double sum = 0.0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) sum += map.at(b, y, x);
          out.data.push_back(sum / ((y1 - y0) * (x1 - x0)));
        }
      }
    }
  }

  double nrm = 0.0;
  for (double v : out.data) nrm += v * v;
  nrm = std::sqrt(nrm);
  if (nrm > 0.0) {
    for (double& v : out.data) v /= nrm;
    out.normalized = true;
  }
  return out;
}

FeatureVector extract_feature(const ImagePatch& patch, const PcaBasis* pca,
                              Exec exec) {
  FeatureVector raw = spp_pool(filter_bank(patch, exec));
  if (!pca) return raw;
  if (pca->input_dim() != static_cast<int>(raw.data.size()))
    throw std::invalid_argument("extract_feature: PCA input dim mismatch");

  FeatureVector out;
  out.data = pca_project(*pca, raw.data);
  double nrm = 0.0;
  for (double v : out.data) nrm += v * v;
  nrm = std::sqrt(nrm);
  if (nrm > 0.0) {
    for (double& v : out.data) v /= nrm;
    out.normalized = true;
  }
  return out;
}

}  // namespace clc
