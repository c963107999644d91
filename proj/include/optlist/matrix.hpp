#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "optlist/rng.hpp"

namespace optlist {

// Row-major dense matrix of 64-bit floats. Entries must be finite on
// construction via `checked`; the default constructor and `uninit` skip the
// scan for hot paths that fill the buffer immediately.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), data(r * c, 0.0) {}

  static DenseMatrix checked(std::size_t r, std::size_t c,
                             std::vector<double> values);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  bool empty() const { return rows == 0 || cols == 0; }
};

// y = A x
void matvec(const DenseMatrix& a, std::span<const double> x,
            std::span<double> y);
// y = A^T x
void matvec_transposed(const DenseMatrix& a, std::span<const double> x,
                       std::span<double> y);
// C = A B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

// n x n matrix with i.i.d. standard normal entries drawn from the key.
DenseMatrix random_normal_matrix(RngKey key, std::size_t rows,
                                 std::size_t cols);

// Orthogonal Q from re-orthogonalized modified Gram-Schmidt on a standard
// normal draw. Positive R diagonal makes the result unique, hence
// reproducible. Throws UsageError for n = 0.
DenseMatrix random_orthogonal(RngKey key, std::size_t n);

double max_abs_deviation_from_identity(const DenseMatrix& q);

}  // namespace optlist
