#pragma once

#include <optional>

#include "clc/common.hpp"
#include "clc/image.hpp"
#include "clc/numerics.hpp"

namespace clc {

using ImagePatch = Image;

// Band-major stack of per-pixel responses.
struct FeatureMap {
  int bands = 0;
  int width = 0;
  int height = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int b, int w, int h)
      : bands(b), width(w), height(h),
        data(static_cast<std::size_t>(b) * w * h, 0.0) {}

  double& at(int b, int y, int x) {
    return data[(static_cast<std::size_t>(b) * height + y) * width + x];
  }
  double at(int b, int y, int x) const {
    return data[(static_cast<std::size_t>(b) * height + y) * width + x];
  }
};

struct FeatureVector {
  std::vector<double> data;
  bool normalized = false;
};

inline constexpr int kFilterBankBands = 12;
// Pyramid cells 1x1 + 2x2 + 4x4 = 21 per band.
inline constexpr int kSppCells = 21;
inline constexpr int kRawFeatureDim = kFilterBankBands * kSppCells;

// Fixed 12-band response stack on the grayscale patch: intensity, |dx|, |dy|,
// gradient magnitude at two blur scales, four oriented edge energies, local
// variance, Laplacian magnitude, coarse local mean. Patches below 16x16 are
// rejected.
FeatureMap filter_bank(const ImagePatch& patch, Exec exec = Exec::parallel);

// Mean pooling over 1x1, 2x2, 4x4 grids; scale-major, row-major cells, band
// innermost; L2-normalized.
FeatureVector spp_pool(const FeatureMap& map);

FeatureVector extract_feature(const ImagePatch& patch,
                              const PcaBasis* pca = nullptr,
                              Exec exec = Exec::parallel);

}  // namespace clc
