#include "gpcn/linalg.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpcn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows * cols, "Matrix: value count does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require(same_shape(o), "Matrix +=: shape mismatch " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require(same_shape(o), "Matrix -=: shape mismatch " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, const double* b, double beta, double* c) {
  const auto em = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ek = static_cast<Eigen::Index>(k);
  MutMap cm(c, em, en);
  if (beta == 0.0) {
    cm.setZero();
  } else if (beta != 1.0) {
    cm *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;
  ConstMap am(a, trans_a ? ek : em, trans_a ? em : ek);
  ConstMap bm(b, trans_b ? en : ek, trans_b ? ek : en);
  if (!trans_a && !trans_b) {
    cm.noalias() += alpha * am * bm;
  } else if (trans_a && !trans_b) {
    cm.noalias() += alpha * am.transpose() * bm;
  } else if (!trans_a && trans_b) {
    cm.noalias() += alpha * am * bm.transpose();
  } else {
    cm.noalias() += alpha * am.transpose() * bm.transpose();
  }
}

Matrix matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t ka = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  require(ka == kb, "matmul: inner dimensions differ (" + a.shape_string() + " * " +
                        b.shape_string() + ")");
  Matrix c(m, n);
  gemm(trans_a, trans_b, m, n, ka, 1.0, a.data(), b.data(), 0.0, c.data());
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) { return matmul(a, false, b, false); }

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double sum(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double orthogonality_error(const Matrix& a) {
  Matrix g = matmul(a, true, a, false);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

Matrix qr_orthonormal_factor(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  require(m >= n, "qr_orthonormal_factor: needs rows >= cols");
  // Column-major working copy; reflectors overwrite the lower part.
  std::vector<double> r(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) r[j * m + i] = a(i, j);
  std::vector<double> tau(n, 0.0);
  std::vector<double> diag_sign(n, 1.0);

  for (std::size_t j = 0; j < n; ++j) {
    double* col = &r[j * m];
    double norm2 = 0.0;
    for (std::size_t i = j; i < m; ++i) norm2 += col[i] * col[i];
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) {
      tau[j] = 0.0;
      continue;
    }
    const double alpha = col[j] >= 0.0 ? -norm : norm;
    // v = x - alpha e1, stored with v[j] normalised to 1.
    const double v0 = col[j] - alpha;
    for (std::size_t i = j + 1; i < m; ++i) col[i] /= v0;
    tau[j] = -v0 / alpha;
    col[j] = alpha;
    for (std::size_t c = j + 1; c < n; ++c) {
      double* other = &r[c * m];
      double dot = other[j];
      for (std::size_t i = j + 1; i < m; ++i) dot += col[i] * other[i];
      dot *= tau[j];
      other[j] -= dot;
      for (std::size_t i = j + 1; i < m; ++i) other[i] -= dot * col[i];
    }
    diag_sign[j] = alpha < 0.0 ? -1.0 : 1.0;
  }

  // Accumulate Q = H_0 H_1 ... H_{n-1} applied to the first n unit vectors.
  std::vector<double> q(m * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) q[j * m + j] = 1.0;
  for (std::size_t jj = n; jj-- > 0;) {
    const double* v = &r[jj * m];
    if (tau[jj] == 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) {
      double* qc = &q[c * m];
      double dot = qc[jj];
      for (std::size_t i = jj + 1; i < m; ++i) dot += v[i] * qc[i];
      dot *= tau[jj];
      qc[jj] -= dot;
      for (std::size_t i = jj + 1; i < m; ++i) qc[i] -= dot * v[i];
    }
  }

  Matrix out(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) out(i, j) = q[j * m + i] * diag_sign[j];
  return out;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
  for (const auto& t : triplets)
    require(t.row < rows && t.col < cols, "SparseMatrix: triplet index out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  row_ptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double v = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      v += triplets[j].value;
      ++j;
    }
    col_index_.push_back(triplets[i].col);
    values_.push_back(v);
    ++row_ptr_[triplets[i].row + 1];
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& m) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) t.push_back({i, j, m(i, j)});
  return SparseMatrix(m.rows(), m.cols(), std::move(t));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  auto begin = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto end = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_index_[p]) = values_[p];
  return d;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      if (std::abs(values_[p] - at(col_index_[p], i)) > tol) return false;
  return true;
}

void spmm_raw(const SparseMatrix& z, bool transpose_z, const double* x, std::size_t x_cols,
              std::size_t blocks, double* out, bool accumulate) {
  const std::size_t in_rows = transpose_z ? z.rows() : z.cols();
  const std::size_t out_rows = transpose_z ? z.cols() : z.rows();
  if (!accumulate) std::fill(out, out + blocks * out_rows * x_cols, 0.0);
  const auto rp = z.row_ptr();
  const auto ci = z.col_index();
  const auto vals = z.values();
  for (std::size_t b = 0; b < blocks; ++b) {
    const double* xb = x + b * in_rows * x_cols;
    double* ob = out + b * out_rows * x_cols;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
        const double v = vals[p];
        const std::size_t j = ci[p];
        if (!transpose_z) {
          const double* src = xb + j * x_cols;
          double* dst = ob + i * x_cols;
          for (std::size_t c = 0; c < x_cols; ++c) dst[c] += v * src[c];
        } else {
          const double* src = xb + i * x_cols;
          double* dst = ob + j * x_cols;
          for (std::size_t c = 0; c < x_cols; ++c) dst[c] += v * src[c];
        }
      }
    }
  }
}

Matrix spmm(const SparseMatrix& z, const Matrix& x, std::size_t blocks) {
  require(blocks > 0 && x.rows() == blocks * z.cols(),
          "spmm: expected " + std::to_string(blocks) + " blocks of " + std::to_string(z.cols()) +
              " rows, got " + x.shape_string());
  Matrix out(blocks * z.rows(), x.cols());
  spmm_raw(z, false, x.data(), x.cols(), blocks, out.data(), true);
  return out;
}

SparseMatrix sparse_multiply(const SparseMatrix& a, const SparseMatrix& b) {
  require(a.cols() == b.rows(), "sparse_multiply: inner dimensions differ");
  std::vector<SparseMatrix::Triplet> out;
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<char> touched(b.cols(), 0);
  std::vector<std::size_t> cols;
  const auto arp = a.row_ptr();
  const auto aci = a.col_index();
  const auto av = a.values();
  const auto brp = b.row_ptr();
  const auto bci = b.col_index();
  const auto bv = b.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cols.clear();
    for (std::size_t p = arp[i]; p < arp[i + 1]; ++p) {
      const std::size_t k = aci[p];
      for (std::size_t q = brp[k]; q < brp[k + 1]; ++q) {
        const std::size_t j = bci[q];
        if (!touched[j]) {
          touched[j] = 1;
          cols.push_back(j);
        }
        acc[j] += av[p] * bv[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (std::size_t j : cols) {
      out.push_back({i, j, acc[j]});
      acc[j] = 0.0;
      touched[j] = 0;
    }
  }
  return SparseMatrix(a.rows(), b.cols(), std::move(out));
}

}  // namespace gpcn
