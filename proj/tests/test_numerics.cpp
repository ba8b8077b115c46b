#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "clc/numerics.hpp"
#include "clc/common.hpp"

using namespace clc;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  return m;
}

// Independent oracle for the normal CDF: Simpson integration of the density
// from 0 to |x|.
double cdf_oracle(double x) {
  const int steps = 20000;
  double hi = std::fabs(x);
  double h = hi / steps;
  double sum = 0.0;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  for (int i = 0; i < steps; ++i) {
    double a = i * h, b = a + h;
    sum += (pdf(a) + 4.0 * pdf(0.5 * (a + b)) + pdf(b)) * h / 6.0;
  }
  return x >= 0.0 ? 0.5 + sum : 0.5 - sum;
}

Matrix random_symmetric(int n, Rng& rng) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace

TEST_CASE("sym_eig identity") {
  EigResult e = sym_eig(Matrix::identity(3));
  for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eig 2x2 by hand") {
  // [[2,1],[1,2]]: characteristic polynomial gives 3 and 1.
  EigResult e = sym_eig(from_rows({{2, 1}, {1, 2}}));
  CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  double s = 1.0 / std::sqrt(2.0);
  CHECK(e.vectors(0, 0) == doctest::Approx(s).epsilon(1e-10));
  CHECK(e.vectors(1, 0) == doctest::Approx(s).epsilon(1e-10));
  CHECK(e.vectors(0, 1) == doctest::Approx(s).epsilon(1e-10));
  CHECK(e.vectors(1, 1) == doctest::Approx(-s).epsilon(1e-10));
}

TEST_CASE("sym_eig diagonal") {
  Matrix d(3, 3);
  d(0, 0) = 10.0;
  d(1, 1) = 1.0;
  d(2, 2) = 0.1;
  EigResult e = sym_eig(d);
  CHECK(e.values[0] == doctest::Approx(10.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  CHECK(e.values[2] == doctest::Approx(0.1));
  CHECK(e.vectors(0, 0) == doctest::Approx(1.0));
  CHECK(e.vectors(1, 1) == doctest::Approx(1.0));
  CHECK(e.vectors(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig rejects bad input") {
  CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), std::invalid_argument);
  Matrix asym(2, 2);
  asym(0, 1) = 1.0;
  asym(1, 0) = 0.5;
  CHECK_THROWS_AS(sym_eig(asym), std::invalid_argument);
}

TEST_CASE("sym_eig residual property on random matrices") {
  Rng rng(42);
  for (int n : {2, 5, 16, 64}) {
    Matrix a = random_symmetric(n, rng);
    EigResult e = sym_eig(a);
    // ||A v - lambda v|| per eigenpair, against 1e-6 ||A||_F.
    double norm_a = frobenius_norm(a);
    for (int c = 0; c < n; ++c) {
      double resid = 0.0;
      for (int i = 0; i < n; ++i) {
        double av = 0.0;
        for (int j = 0; j < n; ++j) av += a(i, j) * e.vectors(j, c);
        double d = av - e.values[c] * e.vectors(i, c);
        resid += d * d;
      }
      CHECK(std::sqrt(resid) <= 1e-6 * norm_a);
    }
    for (int c = 1; c < n; ++c) CHECK(e.values[c - 1] >= e.values[c]);
    // Orthonormal columns.
    for (int c1 = 0; c1 < n; ++c1)
      for (int c2 = c1; c2 < n; ++c2) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += e.vectors(i, c1) * e.vectors(i, c2);
        CHECK(dot == doctest::Approx(c1 == c2 ? 1.0 : 0.0).epsilon(1e-8));
      }
  }
}

TEST_CASE("pca_fit rank-1 line") {
  Matrix samples(6, 2);
  for (int i = 0; i < 6; ++i) {
    double t = i - 2.5;
    samples(i, 0) = 3.0 * t;
    samples(i, 1) = 4.0 * t;
  }
  PcaBasis b = pca_fit(samples, 1);
  CHECK(std::fabs(b.components(0, 0)) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(std::fabs(b.components(0, 1)) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("pca_fit rectangle corners") {
  // Corners of an axis-aligned 2a x 2b rectangle: variance (a^2, b^2).
  const double a = 3.0, b = 1.5;
  Matrix samples = from_rows({{a, b}, {a, -b}, {-a, b}, {-a, -b}});
  PcaBasis basis = pca_fit(samples, 2);
  CHECK(basis.explained_variance[0] == doctest::Approx(a * a).epsilon(1e-9));
  CHECK(basis.explained_variance[1] == doctest::Approx(b * b).epsilon(1e-9));

  std::vector<double> proj = pca_project(basis, std::vector<double>{a, b});
  CHECK(std::fabs(proj[0]) == doctest::Approx(a).epsilon(1e-9));
  CHECK(std::fabs(proj[1]) == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("pca full basis reconstructs exactly") {
  Rng rng(7);
  Matrix samples(10, 4);
  for (auto& v : samples.data) v = rng.normal();
  PcaBasis b = pca_fit(samples, 4);
  for (int i = 0; i < samples.rows; ++i) {
    auto rec = pca_reconstruct(b, pca_project(b, samples.row(i)));
    for (int j = 0; j < 4; ++j)
      CHECK(rec[j] == doctest::Approx(samples(i, j)).epsilon(1e-8));
  }
}

TEST_CASE("pca reconstruction error equals discarded eigenvalue mass") {
  Rng rng(11);
  Matrix samples(40, 8);
  for (auto& v : samples.data) v = rng.normal() * 2.0 + rng.uniform();
  // Oracle: eigenvalues of the covariance via sym_eig.
  PcaBasis full = pca_fit(samples, 8);
  for (int k : {1, 3, 5}) {
    PcaBasis b = pca_fit(samples, k);
    double err = 0.0;
    for (int i = 0; i < samples.rows; ++i) {
      auto rec = pca_reconstruct(b, pca_project(b, samples.row(i)));
      for (int j = 0; j < 8; ++j) {
        double d = samples(i, j) - rec[j];
        err += d * d;
      }
    }
    err /= samples.rows;
    double discarded = 0.0;
    for (int j = k; j < 8; ++j) discarded += full.explained_variance[j];
    CHECK(err == doctest::Approx(discarded).epsilon(1e-6));
  }
}

TEST_CASE("pca gram path matches covariance path") {
  Rng rng(13);
  Matrix wide(5, 12);  // d > n forces the gram path
  for (auto& v : wide.data) v = rng.normal();
  PcaBasis b = pca_fit(wide, 3);
  // Rows orthonormal.
  for (int r1 = 0; r1 < 3; ++r1)
    for (int r2 = r1; r2 < 3; ++r2) {
      double dot = 0.0;
      for (int j = 0; j < 12; ++j) dot += b.components(r1, j) * b.components(r2, j);
      CHECK(dot == doctest::Approx(r1 == r2 ? 1.0 : 0.0).epsilon(1e-8));
    }
  CHECK_THROWS_AS(pca_fit(wide, 6), std::invalid_argument);  // k > min(n, d)
}

TEST_CASE("pca_project centering and identity") {
  PcaBasis identity;
  identity.mean = {0.0, 0.0};
  identity.components = Matrix::identity(2);
  identity.explained_variance = {1.0, 1.0};
  auto p = pca_project(identity, std::vector<double>{3.0, -2.0});
  CHECK(p[0] == 3.0);
  CHECK(p[1] == -2.0);

  identity.mean = {3.0, -2.0};
  auto q = pca_project(identity, std::vector<double>{3.0, -2.0});
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.0);

  CHECK_THROWS_AS(pca_project(identity, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("sin_theta_dist basics") {
  Subspace e1{from_rows({{1}, {0}})};
  Subspace e2{from_rows({{0}, {1}})};
  CHECK(sin_theta_dist(e1, e1) == doctest::Approx(0.0));
  CHECK(sin_theta_dist(e1, e2) == doctest::Approx(1.0));

  double s = 1.0 / std::sqrt(2.0);
  Subspace diag{from_rows({{s}, {s}})};
  CHECK(sin_theta_dist(e1, diag) == doctest::Approx(s).epsilon(1e-9));  // sin 45
}

TEST_CASE("sin_theta_dist invariances") {
  Rng rng(3);
  Matrix u(5, 2), v(5, 2);
  // Build two random orthonormal 2-frames via Gram-Schmidt.
  auto make_frame = [&](Matrix& m) {
    for (int c = 0; c < 2; ++c) {
      std::vector<double> col(5);
      for (auto& x : col) x = rng.normal();
      for (int prev = 0; prev < c; ++prev) {
        double dot = 0.0;
        for (int i = 0; i < 5; ++i) dot += col[i] * m(i, prev);
        for (int i = 0; i < 5; ++i) col[i] -= dot * m(i, prev);
      }
      double nrm = 0.0;
      for (double x : col) nrm += x * x;
      nrm = std::sqrt(nrm);
      for (int i = 0; i < 5; ++i) m(i, c) = col[i] / nrm;
    }
  };
  make_frame(u);
  make_frame(v);
  Subspace su{u}, sv{v};
  CHECK(sin_theta_dist(su, sv) == doctest::Approx(sin_theta_dist(sv, su)).epsilon(1e-12));

  // Right-multiply u by a rotation.
  double th = 0.7;
  Matrix rot = from_rows({{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}});
  Subspace su_rot{matmul(u, rot)};
  CHECK(sin_theta_dist(su_rot, sv) == doctest::Approx(sin_theta_dist(su, sv)).epsilon(1e-8));

  Subspace rank1{from_rows({{1}, {0}, {0}, {0}, {0}})};
  CHECK_THROWS_AS(sin_theta_dist(su, rank1), std::invalid_argument);
}

TEST_CASE("softmax_rows examples") {
  Matrix zeros(1, 3);
  Matrix s = softmax_rows(zeros, 1.0);
  for (int c = 0; c < 3; ++c) CHECK(s(0, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Matrix row(1, 2);
  row(0, 0) = 1.0;
  Matrix t = softmax_rows(row, 1.0);
  CHECK(t(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(t(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));

  Matrix u = softmax_rows(row, 1e6);
  CHECK(u(0, 0) == doctest::Approx(0.5).epsilon(1e-5));

  CHECK_THROWS_AS(softmax_rows(row, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax_rows(row, -1.0), std::invalid_argument);
}

TEST_CASE("softmax_rows shift invariance") {
  Rng rng(9);
  Matrix m(4, 6);
  for (auto& v : m.data) v = rng.normal() * 3.0;
  Matrix shifted = m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 6; ++c) shifted(r, c) += 100.0 + 10.0 * r;
  Matrix a = softmax_rows(m, 0.7);
  Matrix b = softmax_rows(shifted, 0.7);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-9));
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 6; ++c) sum += a(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gaussian_cdf against quadrature oracle") {
  CHECK(gaussian_cdf(0.0) == 0.5);
  CHECK(gaussian_cdf(0.5) == doctest::Approx(cdf_oracle(0.5)).epsilon(1e-9));
  CHECK(gaussian_cdf(0.5) == doctest::Approx(0.691462).epsilon(1e-6));
  CHECK(gaussian_cdf(0.5) - gaussian_cdf(-0.5) == doctest::Approx(0.382925).epsilon(1e-6));
  for (double x : {-3.0, -1.2, 0.3, 2.7})
    CHECK(gaussian_cdf(-x) == doctest::Approx(1.0 - gaussian_cdf(x)).epsilon(1e-12));
  CHECK(gaussian_cdf(1.0) > gaussian_cdf(0.9));
}

TEST_CASE("sample_gaussian determinism and moments") {
  Rng a(123), b(123);
  auto va = sample_gaussian(a, 1.0, 2.0, 1000);
  auto vb = sample_gaussian(b, 1.0, 2.0, 1000);
  CHECK(va == vb);  // bit-identical under the same seed

  Rng c(5);
  auto zeros = sample_gaussian(c, 7.0, 0.0, 10);
  for (double v : zeros) CHECK(v == 7.0);

  Rng d(99);
  auto big = sample_gaussian(d, 0.0, 1.0, 100000);
  double mean = 0.0;
  for (double v : big) mean += v;
  mean /= big.size();
  CHECK(std::fabs(mean) < 0.01);
  double var = 0.0;
  for (double v : big) var += (v - mean) * (v - mean);
  var /= big.size();
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  Rng e(1);
  CHECK_THROWS_AS(sample_gaussian(e, 0.0, -1.0, 3), std::invalid_argument);
}
