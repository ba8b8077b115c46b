#pragma once

#include <string>
#include <vector>

#include "clc/image.hpp"

namespace clc {

// 10 log10(255^2 / MSE) over all samples; +inf for identical images.
double psnr(const Image& a, const Image& b);

struct RdPoint {
  double rate = 0.0;       // bits per pixel
  double distortion = 0.0; // PSNR dB
  std::string tag;
};

struct RdCurve {
  std::vector<RdPoint> points;  // strictly increasing rate

  void add(double rate, double psnr_db, std::string tag = {});
  void validate() const;
};

// Bjontegaard delta rate in percent: cubic fit of log10(rate) against PSNR
// per curve, integrated over the common PSNR interval. Negative = savings of
// `test` against `anchor`.
double bd_rate(const RdCurve& test, const RdCurve& anchor);

}  // namespace clc
