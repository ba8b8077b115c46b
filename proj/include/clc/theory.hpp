#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clc/common.hpp"
#include "clc/image.hpp"
#include "clc/numerics.hpp"

namespace clc::theory {

// Spiked covariance pair: x = U* s + xi and a reference sharing a rho
// fraction of the factor, x~ = U* (rho s + sqrt(1-rho^2) s_perp) + xi~.
struct SpikedModelParams {
  int d = 64;
  int r = 4;
  double lambda_s = 1.0;   // Sigma_s = lambda_s * I_r
  double sigma_xi = 0.3;
  double sigma_xi_ref = 0.3;
  double rho = 0.0;
  int n = 100;
  std::uint64_t seed = 0;

  // Positive effective gap lambda_min(Sigma_s)(1-rho) - sigma^2 - sigma~^2.
  bool regime_ok() const {
    return lambda_s * (1.0 - rho) - sigma_xi * sigma_xi - sigma_xi_ref * sigma_xi_ref > 0.0;
  }
};

struct SpikedSample {
  Matrix x;        // n x d
  Matrix x_ref;    // n x d
  Subspace u_star; // d x r
  bool regime_warned = false;
};

SpikedSample gen_spiked(const SpikedModelParams& params);

// Uncentered empirical second moment (1/n) sum x_i x_i^T.
Matrix empirical_cov(const Matrix& x);

struct SubspaceEstimate {
  Subspace subspace;
  bool degenerate_gap = false;  // lambda_r ~ lambda_{r+1}
};
SubspaceEstimate estimate_subspace(const Matrix& s, int r);

// Appendix-form bound with explicit constant: both the full expression
//   C (s^2 + s~^2) sqrt(log(d/delta)/n) / (lmin(1-rho) - s^2 - s~^2)
// and the simplified
//   C sqrt(r (s^2 + s~^2) log(d/delta) / n) / ((1-rho) lmin).
struct BoundValue {
  double full = 0.0;
  double simplified = 0.0;
};
BoundValue theorem_bound(const SpikedModelParams& params, double delta, double c);

struct SweepConfig {
  int d = 64;
  int r = 4;
  double lambda_s = 1.0;
  double sigma = 0.3;  // both noise levels
  std::vector<int> n{100, 400, 1600};
  std::vector<double> rho{0.0, 0.5, 0.9};
  int trials = 200;
  double delta = 0.05;
  std::uint64_t seed = 0;
};

struct TrialRow {
  int d = 0, r = 0, n = 0;
  double rho = 0.0, sigma = 0.0;
  int trial = 0;
  double sin_theta = 0.0;
  double bound = 0.0;  // at the fitted C; NaN for regime-skipped configs
  bool violated = false;
};

struct ConfigSummary {
  int n = 0;
  double rho = 0.0;
  double median_error = 0.0;
  double q95_error = 0.0;
  double bound_at_c = 0.0;
  double violation_rate = 0.0;
  bool skipped = false;  // bound regime violated; empirical stats still present
  int degenerate_gaps = 0;
};

struct BoundReport {
  SweepConfig config;
  std::vector<TrialRow> rows;
  std::vector<ConfigSummary> configs;
  double fitted_c = 0.0;
  double overall_violation_rate = 0.0;
  double ratio_rho0 = 0.0;  // median at max n / median at min n, rho = 0
  bool monotone_in_n = false;
  bool monotone_in_rho = false;
  bool violations_ok = false;
  bool ratio_ok = false;

  bool passed() const {
    return monotone_in_n && monotone_in_rho && violations_ok && ratio_ok;
  }
};

// Monte-Carlo verification: per config, the sin-theta error of the top-r
// subspace of the paired-difference second moment against U*; one constant C
// fitted so 95% of all in-regime trials fall under the bound.
BoundReport verify_bound(const SweepConfig& config, Exec exec = Exec::parallel);

void write_bound_csv(const BoundReport& report, const std::string& path);
std::string bound_report_json(const BoundReport& report);

// ---------------------------------------------------------------------------
// Perturbation robustness
// ---------------------------------------------------------------------------

struct CodecRun {
  double bpp = 0.0;
  double psnr_db = 0.0;
};

// conditional, step, epsilon, seed -> rate/quality of one image.
using CodecHandle =
    std::function<CodecRun(const Image&, bool conditional, double step,
                           double epsilon, std::uint64_t seed)>;

struct PrPoint {
  double epsilon = 0.0;
  double gain_db = 0.0;  // PSNR above the unconditional anchor at matched rate
  double pr = 0.0;       // 1 - gain / clean gain
};

struct PrReport {
  std::vector<PrPoint> points;
  bool monotone = false;
  bool valid = false;  // clean gain positive
};

PrReport robustness_pr(const CodecHandle& codec, const std::vector<Image>& images,
                       const std::vector<double>& epsilons, double step,
                       const std::vector<double>& anchor_steps, std::uint64_t seed);

}  // namespace clc::theory
