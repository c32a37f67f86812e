#include "nmftc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nmftc {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("DenseMatrix: " + std::to_string(values_.size()) +
                         " values given for a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " matrix");
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(v));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

bool DenseMatrix::is_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x >= 0.0; });
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::size_t Mask::row_count(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < cols_; ++j) n += (*this)(i, j) ? 1 : 0;
  return n;
}

std::size_t Mask::col_count(std::size_t j) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows_; ++i) n += (*this)(i, j) ? 1 : 0;
  return n;
}

bool Mask::subset_of(const Mask& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("Mask::subset_of");
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    if (bits_[k] && !other.bits_[k]) return false;
  }
  return true;
}

PermutationMatrix::PermutationMatrix(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t target : mapping_) {
    if (target >= mapping_.size() || seen[target]) {
      throw std::invalid_argument("PermutationMatrix: mapping is not a bijection");
    }
    seen[target] = true;
  }
}

PermutationMatrix PermutationMatrix::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return PermutationMatrix(std::move(m));
}

bool PermutationMatrix::is_identity() const {
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    if (mapping_[i] != i) return false;
  }
  return true;
}

PermutationMatrix PermutationMatrix::inverse() const {
  std::vector<std::size_t> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
  return PermutationMatrix(std::move(inv));
}

DenseMatrix PermutationMatrix::to_dense() const {
  DenseMatrix m(size(), size());
  for (std::size_t i = 0; i < size(); ++i) m(i, mapping_[i]) = 1.0;
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

namespace {

// Plain sum of squares; rescaled by the largest magnitude only if that overflows.
template <typename Entry>
double root_sum_squares(std::size_t count, Entry entry) {
  double s = 0.0;
  for (std::size_t k = 0; k < count; ++k) s += entry(k) * entry(k);
  if (std::isfinite(s)) return std::sqrt(s);
  double scale = 0.0;
  for (std::size_t k = 0; k < count; ++k) scale = std::max(scale, std::abs(entry(k)));
  if (!std::isfinite(scale) || scale == 0.0) return scale;
  s = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double x = entry(k) / scale;
    s += x * x;
  }
  return scale * std::sqrt(s);
}

}  // namespace

double frobenius_norm(const DenseMatrix& a) {
  const auto v = a.values();
  return root_sum_squares(v.size(), [v](std::size_t k) { return v[k]; });
}

double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("frobenius_distance: shape mismatch");
  }
  const auto av = a.values();
  const auto bv = b.values();
  return root_sum_squares(av.size(), [av, bv](std::size_t k) { return av[k] - bv[k]; });
}

std::pair<DenseMatrix, DenseMatrix> permute(const DenseMatrix& w, const DenseMatrix& h,
                                            const PermutationMatrix& p) {
  if (w.cols() != p.size() || h.rows() != p.size()) {
    throw DimensionError("permute: W.cols, H.rows and P.size must agree");
  }
  // (WP)(:, p[i]) = W(:, i) and (P^T H)(p[i], :) = H(i, :)
  DenseMatrix wp(w.rows(), w.cols());
  DenseMatrix ph(h.rows(), h.cols());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t r = 0; r < w.rows(); ++r) wp(r, p[i]) = w(r, i);
    for (std::size_t c = 0; c < h.cols(); ++c) ph(p[i], c) = h(i, c);
  }
  return {std::move(wp), std::move(ph)};
}

Mask nonzero_mask(const DenseMatrix& m, double threshold) {
  Mask mask(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) mask.set(i, j, std::abs(m(i, j)) > threshold);
  }
  return mask;
}

std::string to_string(const DenseMatrix& m) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i == 0 ? "[[" : " [");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ", ";
      os << m(i, j);
    }
    os << (i + 1 == m.rows() ? "]]" : "]\n");
  }
  return os.str();
}

}  // namespace nmftc
