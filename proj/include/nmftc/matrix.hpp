#ifndef NMFTC_MATRIX_HPP
#define NMFTC_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nmftc {

/// Thrown when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Row-major dense matrix of doubles.
 *
 * All test inputs and factors in this library are at most a few hundred
 * entries, so storage is a flat std::vector with no stride or view support.
 */
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Builds from nested row lists; every row must have the same length.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool is_nonnegative() const;
  double max_abs() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Boolean matrix produced by thresholding.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { bits_[i * cols_ + j] = v ? 1 : 0; }

  std::size_t count() const;
  std::size_t row_count(std::size_t i) const;
  std::size_t col_count(std::size_t j) const;
  /// True iff every true entry of *this is also true in `other`.
  bool subset_of(const Mask& other) const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<unsigned char> bits_;
};

/**
 * Permutation matrix stored as a mapping: row i holds its single 1 in
 * column mapping[i].
 */
class PermutationMatrix {
 public:
  PermutationMatrix() = default;
  /// Throws std::invalid_argument unless `mapping` is a bijection on 0..n-1.
  explicit PermutationMatrix(std::vector<std::size_t> mapping);

  static PermutationMatrix identity(std::size_t n);

  std::size_t size() const { return mapping_.size(); }
  const std::vector<std::size_t>& mapping() const { return mapping_; }
  std::size_t operator[](std::size_t i) const { return mapping_[i]; }

  bool is_identity() const;
  PermutationMatrix inverse() const;
  DenseMatrix to_dense() const;

  friend bool operator==(const PermutationMatrix&, const PermutationMatrix&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

double frobenius_norm(const DenseMatrix& a);
double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b);

/// Returns (WP, P^-1 H). Only moves entries; no arithmetic is performed.
std::pair<DenseMatrix, DenseMatrix> permute(const DenseMatrix& w, const DenseMatrix& h,
                                            const PermutationMatrix& p);

/// mask(i,j) = |M(i,j)| > threshold.
Mask nonzero_mask(const DenseMatrix& m, double threshold);

std::string to_string(const DenseMatrix& m);

}  // namespace nmftc

#endif  // NMFTC_MATRIX_HPP
