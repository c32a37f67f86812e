#ifndef NMFTC_ALGORITHMS_HPP
#define NMFTC_ALGORITHMS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "nmftc/matrix.hpp"

namespace nmftc {

enum class AlgorithmId { MultiplicativeUpdate, ALS, ProjectedGradient };

/// Short CLI name: "mu", "als" or "pgd".
std::string_view to_string(AlgorithmId id);
std::optional<AlgorithmId> parse_algorithm(std::string_view name);

/// Full iteration budget: 10^6 for MU and ALS, 10^4 for PGD.
std::size_t default_iterations(AlgorithmId id);

struct FactorPair {
  DenseMatrix W;  // m x k
  DenseMatrix H;  // k x n

  std::size_t rank() const { return W.cols(); }
  DenseMatrix product() const { return matmul(W, H); }

  friend bool operator==(const FactorPair&, const FactorPair&) = default;
};

struct RunConfig {
  AlgorithmId algorithm = AlgorithmId::MultiplicativeUpdate;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t rank = 0;
};

/// Additive guard in the multiplicative-update denominators.
inline constexpr double kMuGuard = 1e-12;
/// Tikhonov shift applied to a singular Gram matrix in ALS.
inline constexpr double kAlsRidge = 1e-12;

/// Armijo backtracking parameters for projected gradient descent.
struct LineSearch {
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 30;
};

/**
 * Seeded starting point. Entries are i.i.d. uniform on (0, 1], drawn from
 * std::mt19937_64 (the standardized 64-bit Mersenne Twister) seeded with
 * `seed`; W is filled row-major first, then H. Raw 64-bit outputs are mapped
 * to doubles by hand so the stream does not depend on the standard library's
 * distribution implementation.
 */
FactorPair init_factors(std::uint64_t seed, std::size_t m, std::size_t k, std::size_t n);

/// One Lee-Seung Frobenius multiplicative update: H first, then W.
FactorPair mu_step(const DenseMatrix& a, const FactorPair& f);

/// One alternating least squares sweep (H then W), negatives clamped to 0.
FactorPair als_step(const DenseMatrix& a, const FactorPair& f);

/// 0.5 * ||A - WH||_F^2
double objective(const DenseMatrix& a, const FactorPair& f);

/// Gradient of `objective`: dW = (WH - A) H^T, dH = W^T (WH - A).
FactorPair objective_gradient(const DenseMatrix& a, const FactorPair& f);

/// Projected gradient step with a fixed step size, applied to W and H jointly.
FactorPair pgd_step(const DenseMatrix& a, const FactorPair& f, double step);

/// Projected gradient step with Armijo backtracking. Returns `f` unchanged
/// if no trial step achieves sufficient decrease.
FactorPair pgd_search_step(const DenseMatrix& a, const FactorPair& f, const LineSearch& ls = {});

/// init_factors followed by cfg.iterations steps of the selected algorithm.
FactorPair run_nmf(const DenseMatrix& a, const RunConfig& cfg);

/// Pluggable factorization routine; run_nmf is the default. The harness
/// accepts any callable with this shape so other implementations can be
/// put through the same protocol.
using NmfSolver = std::function<FactorPair(const DenseMatrix&, const RunConfig&)>;

}  // namespace nmftc

#endif  // NMFTC_ALGORITHMS_HPP
