#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adseal/rng.hpp"

namespace adseal {

// Dense row-major float64 matrix. Everything model-sized in this project
// (weights, activations, gradients) lives in one of these.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix full(int r, int c, double v);
  static Matrix identity(int n);
  // All entries i.i.d. N(0, stddev^2).
  static Matrix randn(int r, int c, double stddev, Rng& rng);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
};

bool operator==(const Matrix& a, const Matrix& b);

// Throws Error if any entry is NaN/Inf; `where` names the producing op.
void ensure_finite(const Matrix& m, const char* where);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);
Matrix relu(const Matrix& m);
Matrix sigmoid(const Matrix& m);

// Row-wise softmax, stabilized by subtracting each row's maximum.
Matrix softmax_rows(const Matrix& m);

// Row-wise standardization to zero mean / unit variance (no affine part).
Matrix layer_norm_rows(const Matrix& m, double eps = 1e-5);

// Single-row L2 normalization. Throws DegenerateVectorError when the norm
// is <= eps instead of silently returning zeros.
Matrix l2_normalize(const Matrix& v, double eps = 1e-12);

double l2_norm(const Matrix& v);
double sum_all(const Matrix& m);
double dot_rows(const Matrix& a, const Matrix& b);  // both 1 x n

}  // namespace adseal
