#ifndef NMFTC_STRUCTURE_HPP
#define NMFTC_STRUCTURE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nmftc/algorithms.hpp"
#include "nmftc/matrix.hpp"
#include "nmftc/testcase.hpp"

namespace nmftc {

/// Raised when a factor does not have the structure an analysis step needs.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Thresholds {
  /// Entries at or below this magnitude are zero for monomial/banded checks.
  double absolute_negligible = 1e-10;
  /// Superdiagonal factor entries below relative_order2 * eps^2 are zero
  /// when classifying 3x3 solutions.
  double relative_order2 = 10.0;

  void validate() const;
  double order2_cut(double epsilon) const { return relative_order2 * epsilon * epsilon; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/**
 * Configuration of structurally zero superdiagonal entries in a banded
 * 3x3 solution (w1 = superdiagonal of WP, h1 = superdiagonal of P^-1 H):
 *
 *   TypeI    w1(1), w1(2)
 *   TypeII   h1(1), h1(2)       (H diagonal)
 *   TypeIII  w1(1), h1(2)
 *   TypeIV   h1(1), w1(2)
 *
 * Mixed is reserved for solutions where some superdiagonal index has both
 * w1(i) and h1(i) structurally zero, so no type applies.
 */
enum class SolutionType { TypeI, TypeII, TypeIII, TypeIV, Mixed };

std::string_view to_string(SolutionType t);
std::optional<SolutionType> parse_solution_type(std::string_view s);

struct Classification {
  SolutionType type = SolutionType::Mixed;
  /// False when the type had to be assigned by ignoring the smaller entry of
  /// a superdiagonal pair because neither was structurally zero.
  bool clean = false;
};

bool is_monomial(const DenseMatrix& m, const Thresholds& t = {});

/// P with P^-1 H diagonal, read off the nonzero pattern of H. Throws
/// StructureError if H is not monomial.
PermutationMatrix recover_permutation(const DenseMatrix& h, const Thresholds& t = {});

/**
 * Permutation that best maps a nearly banded pair back to upper-bidiagonal
 * form, chosen from the dominant entry of each row of H. Used when the
 * permutation found at eps = 0 no longer de-permutes an eps > 0 solution.
 * Returns nullopt if the dominant entries do not form a permutation.
 */
std::optional<PermutationMatrix> dominant_permutation(const DenseMatrix& h);

/// (WP, P^-1 H) both supported on the main diagonal and superdiagonal.
bool check_banded(const FactorPair& f, const PermutationMatrix& p, const Thresholds& t = {});

/// Classifies a de-permuted 3x3 banded solution. Throws DimensionError for other sizes.
Classification classify(const FactorPair& depermuted, double epsilon, const Thresholds& t = {});

/// Convenience overload that de-permutes with `p` first.
Classification classify(const FactorPair& f, const PermutationMatrix& p, const BidiagonalSpec& spec,
                        const Thresholds& t = {});

/// Which factor carries the perturbation at superdiagonal index i.
enum class CarrierSide { W, H, Both, Neither };
std::string_view to_string(CarrierSide s);

struct EpsilonRelation {
  std::size_t index = 0;  // 0-based superdiagonal position
  CarrierSide side = CarrierSide::Neither;
  /// |w1(i) - eps*a1(i)*w0(i+1)/a0(i+1)| for side W,
  /// |h1(i) - eps*a1(i)*h0(i)/a0(i)| for side H; absent otherwise.
  std::optional<double> deviation;

  friend bool operator==(const EpsilonRelation&, const EpsilonRelation&) = default;
};

/**
 * For each superdiagonal index where exactly one of w1(i), h1(i) is
 * significant (>= relative_order2 * eps^2), measures how far that entry is
 * from the value that makes WH(i, i+1) exact on its own. With unit a0, a1
 * the targets reduce to eps*w0(i+1) and eps*h0(i).
 */
std::vector<EpsilonRelation> check_epsilon_relations(const FactorPair& f, const PermutationMatrix& p,
                                                     const BidiagonalSpec& spec, const Thresholds& t = {});

// --- slopes ---------------------------------------------------------------

enum class ParameterSide { W, H };
std::string_view to_string(ParameterSide s);

/// Names of the three tracked parameters, W side: w0(1), w0(2), w1(1).
/// On the H side the mirrored counterparts h0(2), h0(1), h1(1) fill the
/// same three slots.
inline constexpr std::array<std::string_view, 3> kSlopeParameters{"w0(1)", "w0(2)", "w1(1)"};
inline constexpr std::array<std::string_view, 3> kMirroredParameters{"h0(2)", "h0(1)", "h1(1)"};

struct EpsilonSample {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  FactorPair factors;  // de-permuted
};

struct SlopeRecord {
  std::string parameter;        // slot name from kSlopeParameters
  std::string source;           // actual parameter read (kSlopeParameters or kMirroredParameters)
  std::vector<double> epsilons;  // strictly decreasing
  std::vector<double> slopes;    // (p(eps) - p(0)) / eps, aligned with epsilons
  std::vector<double> slope_changes;  // |slope[k] - slope[k+1]|

  friend bool operator==(const SlopeRecord&, const SlopeRecord&) = default;
};

struct SlopeReport {
  std::uint64_t seed = 0;
  ParameterSide side = ParameterSide::W;
  std::vector<SlopeRecord> parameters;  // always three, in slot order

  friend bool operator==(const SlopeReport&, const SlopeReport&) = default;
};

/**
 * Slopes (p(eps) - p(0)) / eps of the three tracked parameters of a
 * de-permuted upper-bidiagonal solution, relative to the eps = 0 run with
 * the same seed. The W-side set is used unless h1(1)/eps is the more stable
 * of the two across the two smallest epsilons (relative change of the slope).
 *
 * Throws std::invalid_argument on seed mismatch, duplicate or non-positive
 * epsilons, or an empty sample list.
 */
SlopeReport estimate_slopes(std::span<const EpsilonSample> samples, const EpsilonSample& base);

}  // namespace nmftc

#endif  // NMFTC_STRUCTURE_HPP
