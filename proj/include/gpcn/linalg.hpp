#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpcn {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  void fill(double v);
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

Matrix transpose(const Matrix& a);
// Exact products; trans_a / trans_b select op(A) = A or A^T.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b);

// C = alpha * op(A) * op(B) + beta * C on raw row-major storage. A is stored
// as (trans_a ? k x m : m x k), B as (trans_b ? n x k : k x n), C as m x n.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, const double* b, double beta, double* c);

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double sum(const Matrix& a);
// ||A^T A - I||_F.
double orthogonality_error(const Matrix& a);
bool is_symmetric(const Matrix& a, double tol);

// Thin QR factor with positive diagonal in R, via Householder reflections.
// Requires rows >= cols; the result has orthonormal columns.
Matrix qr_orthonormal_factor(const Matrix& a);

// Compressed sparse row matrix. Entries are sorted by column within each row;
// duplicates from triplet construction are summed.
class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const Matrix& m);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_index() const { return col_index_; }
  std::span<const double> values() const { return values_; }

  double at(std::size_t i, std::size_t j) const;
  Matrix to_dense() const;
  bool is_symmetric(double tol) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_index_;
  std::vector<double> values_;
};

// Z * X touching only stored entries. When X stacks `blocks` row-blocks of
// height Z.cols(), Z is applied to each block independently.
Matrix spmm(const SparseMatrix& z, const Matrix& x, std::size_t blocks = 1);
// Raw-pointer form used by the autodiff kernels: out_b (+)= op(Z) x_b.
void spmm_raw(const SparseMatrix& z, bool transpose_z, const double* x, std::size_t x_cols,
              std::size_t blocks, double* out, bool accumulate);
SparseMatrix sparse_multiply(const SparseMatrix& a, const SparseMatrix& b);

}  // namespace gpcn
