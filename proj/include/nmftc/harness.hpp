#ifndef NMFTC_HARNESS_HPP
#define NMFTC_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nmftc/algorithms.hpp"
#include "nmftc/structure.hpp"
#include "nmftc/testcase.hpp"

namespace nmftc {

/// Invalid protocol or CLI configuration (maps to exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FailureReason { NotMonomial, ProductMismatch, NotBanded };
std::string_view to_string(FailureReason r);
std::optional<FailureReason> parse_failure_reason(std::string_view s);

struct ProtocolConfig {
  /// Matrix shape; spec.epsilon is ignored, stages use 0 and then `epsilons`.
  BidiagonalSpec spec;
  std::vector<double> epsilons{1e-3};
  AlgorithmId algorithm = AlgorithmId::MultiplicativeUpdate;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> iterations;
  Thresholds thresholds;

  std::size_t effective_iterations() const {
    return iterations.value_or(default_iterations(algorithm));
  }

  /// Throws ConfigError.
  void validate() const;
  /// Non-fatal observations about the configuration (size, magnitudes).
  std::vector<std::string> warnings() const;

  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

/// Seeds 0, 1, ..., count-1.
std::vector<std::uint64_t> sequential_seeds(std::size_t count);

/**
 * Largest ||A - WH||_F accepted as "equal to A": max(1e-6, 10 eps^2) ||A||_F,
 * scaled up by default_iterations / iterations when the budget is reduced.
 */
double product_margin(double norm_a, double epsilon, AlgorithmId algorithm, std::size_t iterations);

struct TrialOutcome {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  bool pass = false;
  std::optional<FailureReason> failure_reason;
  double residual = 0.0;  // ||A - WH||_F
  PermutationMatrix permutation;
  bool permutation_rederived = false;
  std::optional<SolutionType> solution_type;  // 3x3, eps > 0, passing trials only
  bool clean = false;
  std::optional<double> identity_residual;  // 2x2, eps > 0, passing trials only
  std::vector<EpsilonRelation> epsilon_relations;
  FactorPair factors;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

/**
 * Runs the conformance protocol for one seed:
 *
 *  1. eps = 0: the result must be monomial in both factors and reproduce A;
 *     otherwise a single failed outcome is returned.
 *  2. The permutation P is read off H.
 *  3. For each eps in cfg.epsilons, rerun with the same seed and require
 *     WH == A (within product_margin) and (WP, P^-1 H) upper bidiagonal.
 *     If the eps = 0 permutation does not fit, one new permutation is tried
 *     from the dominant entries of H before the trial is failed.
 *
 * The returned list starts with the eps = 0 outcome. Failures are recorded,
 * never thrown.
 */
std::vector<TrialOutcome> run_protocol(const ProtocolConfig& cfg, std::uint64_t seed,
                                       const NmfSolver& solver = run_nmf);

struct EpsilonPassRate {
  double epsilon = 0.0;
  std::size_t trials = 0;
  std::size_t passes = 0;
  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(trials); }
  friend bool operator==(const EpsilonPassRate&, const EpsilonPassRate&) = default;
};

struct SlopeMean {
  double epsilon = 0.0;
  std::string parameter;
  double mean_slope = 0.0;
  std::size_t n_seeds = 0;
  friend bool operator==(const SlopeMean&, const SlopeMean&) = default;
};

struct ConformanceReport {
  ProtocolConfig config;
  std::vector<TrialOutcome> outcomes;  // grouped by seed in config order, eps = 0 first

  std::vector<EpsilonPassRate> pass_rates;  // eps = 0 first, then config order
  std::map<std::string, std::size_t> type_histogram;
  std::size_t classified = 0;
  std::size_t mixed = 0;  // classified trials that were not clean
  double mixed_fraction = 0.0;
  std::vector<SlopeReport> slopes;     // one per fully passing 2x2 seed chain
  std::vector<SlopeMean> slope_means;  // ordered by epsilon (descending), then slot
  std::vector<std::string> notes;

  double wall_seconds = 0.0;

  bool all_pass() const;
  friend bool operator==(const ConformanceReport&, const ConformanceReport&) = default;
};

/// run_protocol over every seed on `jobs` worker threads. The report does
/// not depend on `jobs` apart from wall_seconds.
ConformanceReport batch_run(const ProtocolConfig& cfg, std::size_t jobs = 1,
                            const NmfSolver& solver = run_nmf);

/// Recomputes every aggregate field of `report` from its outcomes.
void aggregate(ConformanceReport& report);

enum class ReportFormat { Json, Csv };

inline constexpr std::string_view kCsvHeader =
    "seed,epsilon,pass,failure_reason,residual,solution_type,clean,identity_residual";
inline constexpr std::string_view kSlopeCsvHeader = "epsilon,parameter,mean_slope,n_seeds";

void emit_report(const ConformanceReport& report, ReportFormat format, std::ostream& out);
std::string emit_report(const ConformanceReport& report, ReportFormat format);

/// Inverse of the JSON form of emit_report. Throws std::invalid_argument.
ConformanceReport parse_report_json(const std::string& text);

/// Mean slope per (epsilon, parameter) as CSV. Throws std::invalid_argument
/// unless the report holds slope data for at least two positive epsilons.
void emit_slope_data(const ConformanceReport& report, std::ostream& out);
std::string emit_slope_data(const ConformanceReport& report);

}  // namespace nmftc

#endif  // NMFTC_HARNESS_HPP
