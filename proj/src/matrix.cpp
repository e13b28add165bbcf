#include "adseal/matrix.hpp"

#include <cmath>

#include "adseal/errors.hpp"

namespace adseal {

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix Matrix::full(int r, int c, double v) {
  Matrix m(r, c);
  for (auto& x : m.data) x = v;
  return m;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::randn(int r, int c, double stddev, Rng& rng) {
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.normal(0.0, stddev);
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != m.cols) {
      throw DimensionError("from_rows: ragged input");
    }
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

void ensure_finite(const Matrix& m, const char* where) {
  for (double x : m.data) {
    if (!std::isfinite(x)) {
      throw Error(std::string(where) + ": non-finite entry in " + m.shape_str() + " result");
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() + " x " +
                         b.shape_str());
  }
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out.at(c, r) = m.at(r, c);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows, a.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  ensure_finite(out, "add");
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("sub: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows, a.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  ensure_finite(out, "sub");
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("hadamard: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows, a.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  ensure_finite(out, "hadamard");
  return out;
}

Matrix scale(const Matrix& m, double c) {
  Matrix out(m.rows, m.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = m.data[i] * c;
  ensure_finite(out, "scale");
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = m.data[i] > 0.0 ? m.data[i] : 0.0;
  return out;
}

Matrix sigmoid(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (size_t i = 0; i < out.size(); ++i) {
    const double z = m.data[i];
    out.data[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  ensure_finite(out, "sigmoid");
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  if (m.rows == 0 || m.cols == 0) {
    throw DimensionError("softmax_rows: empty input");
  }
  Matrix out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    double mx = m.at(r, 0);
    for (int c = 1; c < m.cols; ++c) mx = std::max(mx, m.at(r, c));
    double denom = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      const double e = std::exp(m.at(r, c) - mx);
      out.at(r, c) = e;
      denom += e;
    }
    for (int c = 0; c < m.cols; ++c) out.at(r, c) /= denom;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

Matrix layer_norm_rows(const Matrix& m, double eps) {
  Matrix out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < m.cols; ++c) mean += m.at(r, c);
    mean /= m.cols;
    double var = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      const double d = m.at(r, c) - mean;
      var += d * d;
    }
    var /= m.cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < m.cols; ++c) out.at(r, c) = (m.at(r, c) - mean) * inv;
  }
  ensure_finite(out, "layer_norm_rows");
  return out;
}

double l2_norm(const Matrix& v) {
  double s = 0.0;
  for (double x : v.data) s += x * x;
  return std::sqrt(s);
}

Matrix l2_normalize(const Matrix& v, double eps) {
  if (v.rows != 1) {
    throw DimensionError("l2_normalize: expected a single row, got " + v.shape_str());
  }
  const double n = l2_norm(v);
  if (!(n > eps)) {
    throw DegenerateVectorError("l2_normalize: norm " + std::to_string(n) +
                                " below threshold " + std::to_string(eps));
  }
  return scale(v, 1.0 / n);
}

double sum_all(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data) s += x;
  return s;
}

double dot_rows(const Matrix& a, const Matrix& b) {
  if (a.rows != 1 || b.rows != 1 || a.cols != b.cols) {
    throw DimensionError("dot_rows: need equal single rows, " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  double s = 0.0;
  for (int c = 0; c < a.cols; ++c) s += a.at(0, c) * b.at(0, c);
  return s;
}

}  // namespace adseal
