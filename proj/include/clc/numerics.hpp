#pragma once

#include <span>
#include <vector>

#include "clc/common.hpp"

namespace clc {

// Dense row-major matrix of doubles. Small and unclever on purpose: the
// largest thing that ever goes through here is a few-hundred-dim covariance.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  static Matrix identity(int n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m);

// Symmetric eigendecomposition, cyclic Jacobi. Eigenvalues descending,
// eigenvectors as columns of `vectors` in matching order, each with its
// largest-magnitude component made positive.
struct EigResult {
  std::vector<double> values;
  Matrix vectors;
};
EigResult sym_eig(const Matrix& a);

struct PcaBasis {
  std::vector<double> mean;
  Matrix components;  // k x d, rows orthonormal, by descending variance
  std::vector<double> explained_variance;

  int input_dim() const { return components.cols; }
  int output_dim() const { return components.rows; }
};

// Covariance normalized by n. Uses the d x d eigenproblem when d <= n,
// otherwise the n x n Gram path.
PcaBasis pca_fit(const Matrix& samples, int k);
std::vector<double> pca_project(const PcaBasis& basis, std::span<const double> v);
std::vector<double> pca_reconstruct(const PcaBasis& basis, std::span<const double> coords);

// Column-orthonormal basis of an r-dimensional subspace of R^dim.
struct Subspace {
  Matrix basis;  // dim x r

  int dim() const { return basis.rows; }
  int rank() const { return basis.cols; }
};

// ||sin Theta(span u, span v)||_F = sqrt(r - ||u^T v||_F^2), in [0, sqrt(r)].
double sin_theta_dist(const Subspace& u, const Subspace& v);

// Row-wise softmax of m / temperature, max-shifted for stability.
Matrix softmax_rows(const Matrix& m, double temperature);

// Standard normal CDF.
double gaussian_cdf(double x);

}  // namespace clc
