#include "clc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace clc {

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: image shapes differ");
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  double mse = se / static_cast<double>(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

void RdCurve::add(double rate, double psnr_db, std::string tag) {
  points.push_back({rate, psnr_db, std::move(tag)});
}

void RdCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].rate > 0.0)) throw std::invalid_argument("RdCurve: rate must be positive");
    if (i > 0 && !(points[i].rate > points[i - 1].rate))
      throw std::invalid_argument("RdCurve: rates must be strictly increasing");
  }
}

namespace {

// Least-squares cubic through (x, y); interpolating for exactly 4 points.
std::array<double, 4> fit_cubic(const std::vector<double>& x,
                                const std::vector<double>& y) {
  std::array<std::array<double, 5>, 4> m{};  // normal equations, augmented
  for (std::size_t s = 0; s < x.size(); ++s) {
    std::array<double, 4> pw{1.0, x[s], x[s] * x[s], x[s] * x[s] * x[s]};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) m[i][j] += pw[i] * pw[j];
      m[i][4] += pw[i] * y[s];
    }
  }
  for (int c = 0; c < 4; ++c) {
    int pivot = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::fabs(m[r][c]) > std::fabs(m[pivot][c])) pivot = r;
    std::swap(m[c], m[pivot]);
    if (std::fabs(m[c][c]) < 1e-12)
      throw std::invalid_argument("bd_rate: degenerate fit (repeated PSNR values?)");
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      double f = m[r][c] / m[c][c];
      for (int k = c; k < 5; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

double integrate_cubic(const std::array<double, 4>& a, double lo, double hi) {
  auto anti = [&](double x) {
    return a[0] * x + a[1] * x * x / 2.0 + a[2] * x * x * x / 3.0 +
           a[3] * x * x * x * x / 4.0;
  };
  return anti(hi) - anti(lo);
}

}  // namespace

double bd_rate(const RdCurve& test, const RdCurve& anchor) {
  test.validate();
  anchor.validate();
  if (test.points.size() < 4 || anchor.points.size() < 4)
    throw std::invalid_argument("bd_rate: need at least four points per curve");

  auto extract = [](const RdCurve& c, std::vector<double>& d, std::vector<double>& lr) {
    for (const RdPoint& p : c.points) {
      if (!std::isfinite(p.distortion))
        throw std::invalid_argument("bd_rate: non-finite distortion");
      d.push_back(p.distortion);
      lr.push_back(std::log10(p.rate));
    }
  };
  std::vector<double> dt, rt, da, ra;
  extract(test, dt, rt);
  extract(anchor, da, ra);

  double lo = std::max(*std::min_element(dt.begin(), dt.end()),
                       *std::min_element(da.begin(), da.end()));
  double hi = std::min(*std::max_element(dt.begin(), dt.end()),
                       *std::max_element(da.begin(), da.end()));
  if (!(hi > lo)) throw std::invalid_argument("bd_rate: PSNR ranges do not overlap");

  std::array<double, 4> ft = fit_cubic(dt, rt);
  std::array<double, 4> fa = fit_cubic(da, ra);
  double avg_diff =
      (integrate_cubic(ft, lo, hi) - integrate_cubic(fa, lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

}  // namespace clc
