#include "clc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace clc::theory {

namespace {

// Orthonormal d x r frame from a seeded Gaussian matrix (modified
// Gram-Schmidt).
Matrix random_orthonormal(int d, int r, Rng& rng) {
  Matrix q(d, r);
  for (int c = 0; c < r; ++c) {
    std::vector<double> v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    for (int prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += v[i] * q(i, prev);
      for (int i = 0; i < d; ++i) v[i] -= dot * q(i, prev);
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (int i = 0; i < d; ++i) q(i, c) = v[i] / nrm;
  }
  return q;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double idx = q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

SpikedSample gen_spiked(const SpikedModelParams& p) {
  if (p.d < 1 || p.r < 1 || p.r > p.d || p.n < 1)
    throw std::invalid_argument("gen_spiked: bad dimensions");
  if (p.rho < 0.0 || p.rho > 1.0)
    throw std::invalid_argument("gen_spiked: rho outside [0, 1]");

  SpikedSample out;
  out.regime_warned = !p.regime_ok();

  Rng rng(splitmix64(p.seed ^ 0x5B1CEDull));
  out.u_star.basis = random_orthonormal(p.d, p.r, rng);

  out.x = Matrix(p.n, p.d);
  out.x_ref = Matrix(p.n, p.d);
  const double sqrt_lambda = std::sqrt(p.lambda_s);
  const double mix = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));

  std::vector<double> s(p.r), s_perp(p.r);
  for (int i = 0; i < p.n; ++i) {
    for (int k = 0; k < p.r; ++k) {
      s[k] = sqrt_lambda * rng.normal();
      s_perp[k] = sqrt_lambda * rng.normal();
    }
    for (int j = 0; j < p.d; ++j) {
      double sig = 0.0, sig_ref = 0.0;
      for (int k = 0; k < p.r; ++k) {
        double u = out.u_star.basis(j, k);
        sig += u * s[k];
        sig_ref += u * (p.rho * s[k] + mix * s_perp[k]);
      }
      out.x(i, j) = sig + p.sigma_xi * rng.normal();
      out.x_ref(i, j) = sig_ref + p.sigma_xi_ref * rng.normal();
    }
  }
  return out;
}

Matrix empirical_cov(const Matrix& x) {
  if (x.rows < 1) throw std::invalid_argument("empirical_cov: no samples");
  const int n = x.rows, d = x.cols;
  Matrix s(d, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      double xa = x(i, a);
      for (int b = a; b < d; ++b) s(a, b) += xa * x(i, b);
    }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      s(a, b) /= n;
      s(b, a) = s(a, b);
    }
  return s;
}

SubspaceEstimate estimate_subspace(const Matrix& s, int r) {
  if (r < 1 || r > s.rows) throw std::invalid_argument("estimate_subspace: bad rank");
  EigResult eig = sym_eig(s);
  SubspaceEstimate out;
  out.subspace.basis = Matrix(s.rows, r);
  for (int c = 0; c < r; ++c)
    for (int i = 0; i < s.rows; ++i) out.subspace.basis(i, c) = eig.vectors(i, c);
  if (r < s.rows && std::fabs(eig.values[r - 1] - eig.values[r]) < 1e-10)
    out.degenerate_gap = true;
  return out;
}

BoundValue theorem_bound(const SpikedModelParams& p, double delta, double c) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("theorem_bound: delta outside (0, 1)");
  const double noise = p.sigma_xi * p.sigma_xi + p.sigma_xi_ref * p.sigma_xi_ref;
  const double gap = p.lambda_s * (1.0 - p.rho) - noise;
  if (!(gap > 0.0))
    throw RegimeError("theorem_bound: non-positive effective eigenvalue gap");

  const double log_term = std::log(p.d / delta);
  BoundValue out;
  out.full = c * noise * std::sqrt(log_term / p.n) / gap;
  out.simplified = c * std::sqrt(p.r * noise * log_term / p.n) /
                   ((1.0 - p.rho) * p.lambda_s);
  return out;
}

BoundReport verify_bound(const SweepConfig& cfg, Exec exec) {
  BoundReport report;
  report.config = cfg;

  struct ConfigSlot {
    SpikedModelParams params;
    std::vector<double> errors;
    std::vector<int> degenerate;
    double unit_bound = 0.0;  // bound at C = 1
    bool skipped = false;
  };
  std::vector<ConfigSlot> slots;

  int config_index = 0;
  for (int n : cfg.n) {
    for (double rho : cfg.rho) {
      ConfigSlot slot;
      slot.params = SpikedModelParams{cfg.d,   cfg.r, cfg.lambda_s, cfg.sigma,
                                      cfg.sigma, rho,   n,            0};
      slot.errors.resize(cfg.trials);
      slot.degenerate.assign(cfg.trials, 0);
      try {
        slot.unit_bound = theorem_bound(slot.params, cfg.delta, 1.0).full;
      } catch (const RegimeError&) {
        slot.skipped = true;
        slot.unit_bound = std::numeric_limits<double>::quiet_NaN();
      }

      const std::uint64_t config_seed =
          splitmix64(cfg.seed ^ splitmix64(0xC0FF * (config_index + 1)));
      parallel_for(cfg.trials, exec, [&](std::int64_t t) {
        SpikedModelParams params = slot.params;
        params.seed = splitmix64(config_seed ^ splitmix64(static_cast<std::uint64_t>(t) + 1));
        SpikedSample sample = gen_spiked(params);

        // The reference-aware estimate: principal subspace of the paired
        // difference (x - x~)/sqrt(2), whose signal strength carries the
        // (1 - rho) factor of the effective gap.
        Matrix diff(params.n, params.d);
        for (int i = 0; i < params.n; ++i)
          for (int j = 0; j < params.d; ++j)
            diff(i, j) = (sample.x(i, j) - sample.x_ref(i, j)) * M_SQRT1_2;
        SubspaceEstimate est = estimate_subspace(empirical_cov(diff), params.r);
        slot.errors[t] = sin_theta_dist(est.subspace, sample.u_star);
        slot.degenerate[t] = est.degenerate_gap ? 1 : 0;
      });
      slots.push_back(std::move(slot));
      ++config_index;
    }
  }

  // Single C: the smallest making >= 95% of all in-regime trials land under
  // their config bound, i.e. the pooled 95th percentile of error / bound(C=1).
  std::vector<double> ratios;
  for (const ConfigSlot& slot : slots)
    if (!slot.skipped)
      for (double e : slot.errors) ratios.push_back(e / slot.unit_bound);
  report.fitted_c = ratios.empty() ? 0.0 : quantile_of(ratios, 0.95);

  std::size_t violations = 0, in_regime = 0;
  for (ConfigSlot& slot : slots) {
    ConfigSummary summary;
    summary.n = slot.params.n;
    summary.rho = slot.params.rho;
    summary.median_error = median_of(slot.errors);
    summary.q95_error = quantile_of(slot.errors, 0.95);
    summary.skipped = slot.skipped;
    summary.bound_at_c = slot.skipped ? std::numeric_limits<double>::quiet_NaN()
                                      : report.fitted_c * slot.unit_bound;
    for (int t = 0; t < cfg.trials; ++t) {
      bool viol = !slot.skipped && slot.errors[t] > summary.bound_at_c;
      summary.violation_rate += viol ? 1.0 : 0.0;
      summary.degenerate_gaps += slot.degenerate[t];
      if (!slot.skipped) {
        ++in_regime;
        violations += viol ? 1 : 0;
      }
      report.rows.push_back({slot.params.d, slot.params.r, slot.params.n,
                             slot.params.rho, cfg.sigma, t, slot.errors[t],
                             summary.bound_at_c, viol});
    }
    summary.violation_rate /= cfg.trials;
    report.configs.push_back(summary);
  }
  report.overall_violation_rate =
      in_regime ? static_cast<double>(violations) / in_regime : 1.0;
  report.violations_ok = report.overall_violation_rate <= cfg.delta;

  // Medians non-increasing in n (per rho) and non-decreasing in rho (per n).
  auto median_at = [&](int n, double rho) {
    for (const ConfigSummary& s : report.configs)
      if (s.n == n && s.rho == rho) return s.median_error;
    return std::numeric_limits<double>::quiet_NaN();
  };
  auto rho_in_regime = [&](double rho) {
    for (const ConfigSummary& s : report.configs)
      if (s.rho == rho) return !s.skipped;
    return false;
  };
  std::vector<int> ns = cfg.n;
  std::sort(ns.begin(), ns.end());
  std::vector<double> rhos = cfg.rho;
  std::sort(rhos.begin(), rhos.end());

  // Out-of-regime rows saturate near sqrt(r) and carry no n-decay to check.
  report.monotone_in_n = true;
  for (double rho : rhos) {
    if (!rho_in_regime(rho)) continue;
    for (std::size_t i = 1; i < ns.size(); ++i)
      if (median_at(ns[i], rho) > median_at(ns[i - 1], rho))
        report.monotone_in_n = false;
  }
  report.monotone_in_rho = true;
  for (int n : ns)
    for (std::size_t i = 1; i < rhos.size(); ++i)
      if (median_at(n, rhos[i]) < median_at(n, rhos[i - 1]))
        report.monotone_in_rho = false;

  // 1/sqrt(n) decay at the smallest rho across the full n span. The band is
  // the theoretical ratio sqrt(n_min/n_max) within [0.8x, 1.4x]; for the
  // default sweep (16x span, ratio 0.25) that is [0.2, 0.35].
  if (!ns.empty() && !rhos.empty()) {
    double lo = median_at(ns.front(), rhos.front());
    double hi = median_at(ns.back(), rhos.front());
    report.ratio_rho0 = lo > 0.0 ? hi / lo : std::numeric_limits<double>::quiet_NaN();
    double expected = std::sqrt(static_cast<double>(ns.front()) / ns.back());
    report.ratio_ok =
        report.ratio_rho0 >= 0.8 * expected && report.ratio_rho0 <= 1.4 * expected;
  }

  return report;
}

void write_bound_csv(const BoundReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_bound_csv: cannot open " + path);
  out << "# schema clc-verify-theory-v1\n";
  out << "d,r,n,rho,sigma,trial,sin_theta,bound,violated\n";
  for (const TrialRow& row : report.rows) {
    out << row.d << ',' << row.r << ',' << row.n << ',' << row.rho << ','
        << row.sigma << ',' << row.trial << ',' << row.sin_theta << ','
        << row.bound << ',' << (row.violated ? 1 : 0) << '\n';
  }
}

std::string bound_report_json(const BoundReport& report) {
  nlohmann::json j;
  j["schema"] = "clc-verify-theory-v1";
  j["fitted_c"] = report.fitted_c;
  j["overall_violation_rate"] = report.overall_violation_rate;
  j["ratio_rho0_full_span"] = report.ratio_rho0;
  j["checks"] = {{"monotone_in_n", report.monotone_in_n},
                 {"monotone_in_rho", report.monotone_in_rho},
                 {"violations_ok", report.violations_ok},
                 {"ratio_ok", report.ratio_ok}};
  j["configs"] = nlohmann::json::array();
  for (const ConfigSummary& s : report.configs) {
    j["configs"].push_back({{"n", s.n},
                            {"rho", s.rho},
                            {"median_error", s.median_error},
                            {"q95_error", s.q95_error},
                            {"bound_at_c", s.skipped ? nullptr : nlohmann::json(s.bound_at_c)},
                            {"violation_rate", s.violation_rate},
                            {"skipped", s.skipped},
                            {"degenerate_gaps", s.degenerate_gaps}});
  }
  return j.dump(2);
}

PrReport robustness_pr(const CodecHandle& codec, const std::vector<Image>& images,
                       const std::vector<double>& epsilons, double step,
                       const std::vector<double>& anchor_steps, std::uint64_t seed) {
  for (double e : epsilons)
    if (e < 0.0 || e > 0.5)
      throw std::invalid_argument("robustness_pr: epsilon outside [0, 0.5]");
  if (images.empty()) throw std::invalid_argument("robustness_pr: no images");
  if (epsilons.empty() || epsilons.front() != 0.0)
    throw std::invalid_argument("robustness_pr: epsilon list must start at 0");
  if (anchor_steps.size() < 2)
    throw std::invalid_argument("robustness_pr: need at least two anchor steps");

  struct Anchor {
    std::vector<double> log_bpp;
    std::vector<double> psnr;
  };
  std::vector<Anchor> anchors(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (double d : anchor_steps) {
      CodecRun run = codec(images[i], false, d, 0.0, seed);
      anchors[i].log_bpp.push_back(std::log10(run.bpp));
      anchors[i].psnr.push_back(run.psnr_db);
    }
    // Ascending rate order for interpolation.
    std::vector<std::size_t> order(anchors[i].log_bpp.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return anchors[i].log_bpp[a] < anchors[i].log_bpp[b];
    });
    Anchor sorted;
    for (std::size_t k : order) {
      sorted.log_bpp.push_back(anchors[i].log_bpp[k]);
      sorted.psnr.push_back(anchors[i].psnr[k]);
    }
    anchors[i] = std::move(sorted);
  }

  auto anchor_psnr_at = [](const Anchor& a, double log_bpp) {
    if (log_bpp <= a.log_bpp.front()) {
      double t = (log_bpp - a.log_bpp.front()) /
                 (a.log_bpp[1] - a.log_bpp.front());
      return a.psnr.front() + t * (a.psnr[1] - a.psnr.front());
    }
    if (log_bpp >= a.log_bpp.back()) {
      std::size_t m = a.log_bpp.size();
      double t = (log_bpp - a.log_bpp[m - 2]) / (a.log_bpp[m - 1] - a.log_bpp[m - 2]);
      return a.psnr[m - 2] + t * (a.psnr[m - 1] - a.psnr[m - 2]);
    }
    for (std::size_t k = 1; k < a.log_bpp.size(); ++k) {
      if (log_bpp <= a.log_bpp[k]) {
        double t = (log_bpp - a.log_bpp[k - 1]) / (a.log_bpp[k] - a.log_bpp[k - 1]);
        return a.psnr[k - 1] + t * (a.psnr[k] - a.psnr[k - 1]);
      }
    }
    return a.psnr.back();
  };

  PrReport report;
  double clean_gain = 0.0;
  for (double eps : epsilons) {
    double gain = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      CodecRun run = codec(images[i], true, step, eps,
                           splitmix64(seed ^ splitmix64(i + 1)));
      gain += run.psnr_db - anchor_psnr_at(anchors[i], std::log10(run.bpp));
    }
    gain /= static_cast<double>(images.size());
    if (eps == epsilons.front()) clean_gain = gain;
    report.points.push_back({eps, gain, clean_gain != 0.0 ? 1.0 - gain / clean_gain : 0.0});
  }

  report.valid = clean_gain > 0.0;
  report.monotone = true;
  for (std::size_t i = 1; i < report.points.size(); ++i)
    if (report.points[i].pr < report.points[i - 1].pr - 1e-12)
      report.monotone = false;
  return report;
}

}  // namespace clc::theory
