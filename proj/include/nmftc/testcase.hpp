#ifndef NMFTC_TESTCASE_HPP
#define NMFTC_TESTCASE_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nmftc/algorithms.hpp"
#include "nmftc/matrix.hpp"

namespace nmftc {

/**
 * Perturbed bidiagonal input A = diag(a0) + epsilon * diag(a1, 1): a0 on the
 * main diagonal, epsilon * a1 on the superdiagonal, exact zeros elsewhere.
 */
struct BidiagonalSpec {
  std::vector<double> a0;
  std::vector<double> a1;
  double epsilon = 0.0;

  std::size_t size() const { return a0.size(); }

  /// Throws std::invalid_argument / DimensionError on a malformed spec.
  void validate() const;

  /// Non-empty when the entries of a0 and a1 span more than a factor of 100.
  /// Such inputs still run; the structural results are just less reliable.
  std::optional<std::string> magnitude_warning() const;

  BidiagonalSpec with_epsilon(double eps) const {
    BidiagonalSpec s = *this;
    s.epsilon = eps;
    return s;
  }

  friend bool operator==(const BidiagonalSpec&, const BidiagonalSpec&) = default;
};

/// All-ones a0 and a1 of size n.
BidiagonalSpec unit_spec(std::size_t n, double epsilon = 0.0);

DenseMatrix make_test_matrix(const BidiagonalSpec& spec);

/// Upper-bidiagonal support pattern: true exactly at (i, i) and (i, i+1).
Mask allowed_support(std::size_t n);

enum class Branch { Direct, Swapped };

/**
 * One member of the closed-form family of exact non-negative factorizations
 * of a 2x2 bidiagonal input, parameterized on the W side:
 *
 *   W = [[w0[0], w1_1], [0, w0[1]]]
 *   H = [[a0[0]/w0[0], (a1[0]/w0[0]) * (eps - w1_1*a0[1]/(a1[0]*w0[1]))],
 *        [0,           a0[1]/w0[1]]]
 *
 * H stays non-negative only while w1_1 <= eps * a1[0] * w0[1] / a0[1].
 * The Swapped branch is the same pair with the columns of W and the rows
 * of H exchanged.
 */
struct ExactSolution2x2 {
  Branch branch = Branch::Direct;
  std::array<double, 2> w0{1.0, 1.0};
  double w1_1 = 0.0;
};

/// Largest admissible w1_1 for the given spec and w0(2).
double max_w1_1(const BidiagonalSpec& spec, double w0_2);

/// Throws std::invalid_argument if `sol` violates its parameter constraints.
FactorPair exact_factor_2x2(const BidiagonalSpec& spec, const ExactSolution2x2& sol);

/**
 * The (1, 2) entry of WH for upper-bidiagonal 2x2 factors, measured against
 * its target: |w0(1) h1(1) + w1(1) h0(2) - eps a1(1)|. Factors must already
 * be de-permuted.
 */
double superdiagonal_identity_residual(const FactorPair& f, const BidiagonalSpec& spec);

/// Parses {"a0": [...], "a1": [...], "epsilon": r}. "epsilon" may be omitted (0).
BidiagonalSpec spec_from_json(const std::string& text);
std::string spec_to_json(const BidiagonalSpec& spec);
BidiagonalSpec load_spec_file(const std::string& path);

}  // namespace nmftc

#endif  // NMFTC_TESTCASE_HPP
