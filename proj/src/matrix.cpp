#include "optlist/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "optlist/errors.hpp"

namespace optlist {

DenseMatrix DenseMatrix::checked(std::size_t r, std::size_t c,
                                 std::vector<double> values) {
  if (values.size() != r * c) {
    throw ShapeError("DenseMatrix: data length != rows * cols");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError("DenseMatrix: non-finite entry on construction");
    }
  }
  DenseMatrix m;
  m.rows = r;
  m.cols = c;
  m.data = std::move(values);
  return m;
}

void matvec(const DenseMatrix& a, std::span<const double> x,
            std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows) {
    throw ShapeError("matvec: dimension mismatch");
  }
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.data.data() + r * a.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_transposed(const DenseMatrix& a, std::span<const double> x,
                       std::span<double> y) {
  if (x.size() != a.rows || y.size() != a.cols) {
    throw ShapeError("matvec_transposed: dimension mismatch");
  }
  for (std::size_t c = 0; c < a.cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.data.data() + r * a.cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: dimension mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      double* crow = c.data.data() + i * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) t.at(c, r) = a.at(r, c);
  }
  return t;
}

DenseMatrix random_normal_matrix(RngKey key, std::size_t rows,
                                 std::size_t cols) {
  DenseMatrix m(rows, cols);
  Rng rng(key);
  for (double& v : m.data) v = rng.normal();
  return m;
}

DenseMatrix random_orthogonal(RngKey key, std::size_t n) {
  if (n == 0) throw UsageError("random_orthogonal: n must be >= 1");
  DenseMatrix g = random_normal_matrix(key, n, n);
  // Column-wise modified Gram-Schmidt with one re-orthogonalization pass.
  DenseMatrix q = g;
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += q.at(i, k) * q.at(i, j);
        for (std::size_t i = 0; i < n; ++i) q.at(i, j) -= dot * q.at(i, k);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q.at(i, j) * q.at(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      throw std::runtime_error("random_orthogonal: rank-deficient draw");
    }
    for (std::size_t i = 0; i < n; ++i) q.at(i, j) /= norm;
  }
  return q;
}

double max_abs_deviation_from_identity(const DenseMatrix& q) {
  const DenseMatrix qtq = matmul(transpose(q), q);
  double worst = 0.0;
  for (std::size_t r = 0; r < qtq.rows; ++r) {
    for (std::size_t c = 0; c < qtq.cols; ++c) {
      const double target = (r == c) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(qtq.at(r, c) - target));
    }
  }
  return worst;
}

}  // namespace optlist
