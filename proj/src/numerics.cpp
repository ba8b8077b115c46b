#include "clc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clc {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

namespace {

// Flip each column so its largest-magnitude entry is positive. Keeps
// eigenvector output deterministic across paths and platforms.
void fix_column_signs(Matrix& v) {
  for (int c = 0; c < v.cols; ++c) {
    int arg = 0;
    double best = -1.0;
    for (int r = 0; r < v.rows; ++r) {
      double a = std::fabs(v(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (v(arg, c) < 0.0)
      for (int r = 0; r < v.rows; ++r) v(r, c) = -v(r, c);
  }
}

void fix_row_signs(Matrix& m) {
  for (int r = 0; r < m.rows; ++r) {
    int arg = 0;
    double best = -1.0;
    for (int c = 0; c < m.cols; ++c) {
      double a = std::fabs(m(r, c));
      if (a > best) {
        best = a;
        arg = c;
      }
    }
    if (m(r, arg) < 0.0)
      for (int c = 0; c < m.cols; ++c) m(r, c) = -m(r, c);
  }
}

double offdiag_norm(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j) s += m(i, j) * m(i, j);
  return std::sqrt(2.0 * s);
}

}  // namespace

EigResult sym_eig(const Matrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("sym_eig: matrix not square");
  const int n = a.rows;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > 1e-9)
        throw std::invalid_argument("sym_eig: matrix not symmetric");

  Matrix m = a;
  Matrix v = Matrix::identity(n);
  const double fro = std::max(frobenius_norm(m), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (offdiag_norm(m) <= 1e-14 * fro) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = m(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double tau = s / (1.0 + c);

        double app = m(p, p), aqq = m(q, q);
        m(p, p) = app - t * apq;
        m(q, q) = aqq + t * apq;
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          double arp = m(r, p), arq = m(r, q);
          m(r, p) = arp - s * (arq + tau * arp);
          m(p, r) = m(r, p);
          m(r, q) = arq + s * (arp - tau * arq);
          m(q, r) = m(r, q);
        }
        for (int r = 0; r < n; ++r) {
          double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return m(x, x) > m(y, y); });

  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int c = 0; c < n; ++c) {
    out.values[c] = m(order[c], order[c]);
    for (int r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  fix_column_signs(out.vectors);
  return out;
}

namespace {

// Gram-Schmidt completion used when requested PCA rank exceeds the data rank.
void orthonormal_complete(Matrix& comps, int filled) {
  const int d = comps.cols;
  int next_axis = 0;
  for (int r = filled; r < comps.rows; ++r) {
    while (next_axis < d) {
      std::vector<double> cand(d, 0.0);
      cand[next_axis++] = 1.0;
      for (int k = 0; k < r; ++k) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += cand[j] * comps(k, j);
        for (int j = 0; j < d; ++j) cand[j] -= dot * comps(k, j);
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (int j = 0; j < d; ++j) comps(r, j) = cand[j] / nrm;
        break;
      }
    }
  }
}

}  // namespace

PcaBasis pca_fit(const Matrix& samples, int k) {
  const int n = samples.rows;
  const int d = samples.cols;
  if (n < 2) throw std::invalid_argument("pca_fit: need at least two samples");
  if (k < 1 || k > std::min(n, d))
    throw std::invalid_argument("pca_fit: k exceeds min(n, d)");

  PcaBasis basis;
  basis.mean.assign(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) basis.mean[j] += samples(i, j);
  for (double& m : basis.mean) m /= n;

  Matrix centered(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) centered(i, j) = samples(i, j) - basis.mean[j];

  basis.components = Matrix(k, d);
  basis.explained_variance.assign(k, 0.0);

  if (d <= n) {
    Matrix cov(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
        cov(a, b) = s / n;
        cov(b, a) = cov(a, b);
      }
    }
    EigResult eig = sym_eig(cov);
    for (int c = 0; c < k; ++c) {
      basis.explained_variance[c] = std::max(eig.values[c], 0.0);
      for (int j = 0; j < d; ++j) basis.components(c, j) = eig.vectors(j, c);
    }
  } else {
    Matrix gram(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += centered(a, j) * centered(b, j);
        gram(a, b) = s / n;
        gram(b, a) = gram(a, b);
      }
    }
    EigResult eig = sym_eig(gram);
    int filled = 0;
    for (int c = 0; c < k; ++c) {
      double lambda = eig.values[c];
      basis.explained_variance[c] = std::max(lambda, 0.0);
      if (lambda <= 1e-12) break;
      // Covariance eigenvector u = X_c^T g / sqrt(n * lambda).
      double scale = 1.0 / std::sqrt(n * lambda);
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += centered(i, j) * eig.vectors(i, c);
        basis.components(c, j) = s * scale;
      }
      ++filled;
    }
    orthonormal_complete(basis.components, filled);
  }

  fix_row_signs(basis.components);
  return basis;
}

std::vector<double> pca_project(const PcaBasis& basis, std::span<const double> v) {
  const int d = basis.input_dim();
  const int k = basis.output_dim();
  if (static_cast<int>(v.size()) != d)
    throw std::invalid_argument("pca_project: dimension mismatch");
  std::vector<double> out(k, 0.0);
  for (int c = 0; c < k; ++c) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += basis.components(c, j) * (v[j] - basis.mean[j]);
    out[c] = s;
  }
  return out;
}

std::vector<double> pca_reconstruct(const PcaBasis& basis,
                                    std::span<const double> coords) {
  const int d = basis.input_dim();
  const int k = basis.output_dim();
  if (static_cast<int>(coords.size()) != k)
    throw std::invalid_argument("pca_reconstruct: dimension mismatch");
  std::vector<double> out(basis.mean.begin(), basis.mean.end());
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) out[j] += coords[c] * basis.components(c, j);
  return out;
}

double sin_theta_dist(const Subspace& u, const Subspace& v) {
  if (u.dim() != v.dim())
    throw std::invalid_argument("sin_theta_dist: ambient dimension mismatch");
  if (u.rank() != v.rank())
    throw std::invalid_argument("sin_theta_dist: rank mismatch");
  const int r = u.rank();
  const int d = u.dim();
  // ||(I - u u^T) v||_F equals sqrt(r - ||u^T v||_F^2) but stays accurate
  // when the subspaces nearly coincide.
  double s = 0.0;
  std::vector<double> coeff(r);
  for (int b = 0; b < r; ++b) {
    for (int a = 0; a < r; ++a) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += u.basis(i, a) * v.basis(i, b);
      coeff[a] = dot;
    }
    for (int i = 0; i < d; ++i) {
      double w = v.basis(i, b);
      for (int a = 0; a < r; ++a) w -= coeff[a] * u.basis(i, a);
      s += w * w;
    }
  }
  return std::sqrt(std::min(std::max(0.0, s), static_cast<double>(r)));
}

Matrix softmax_rows(const Matrix& m, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax_rows: temperature must be positive");
  for (double v : m.data)
    if (!std::isfinite(v)) throw std::invalid_argument("softmax_rows: non-finite entry");

  Matrix out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < m.cols; ++c) mx = std::max(mx, m(r, c));
    double sum = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      double e = std::exp((m(r, c) - mx) / temperature);
      out(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < m.cols; ++c) out(r, c) /= sum;
  }
  return out;
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

}  // namespace clc
