#include "nmftc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace nmftc {

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::NotMonomial: return "NotMonomial";
    case FailureReason::ProductMismatch: return "ProductMismatch";
    case FailureReason::NotBanded: return "NotBanded";
  }
  return "?";
}

std::optional<FailureReason> parse_failure_reason(std::string_view s) {
  for (auto r : {FailureReason::NotMonomial, FailureReason::ProductMismatch, FailureReason::NotBanded}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

void ProtocolConfig::validate() const {
  try {
    spec.with_epsilon(0.0).validate();
    thresholds.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (double e : epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("epsilons must be finite and > 0");
  }
  if (iterations && *iterations == 0) throw ConfigError("iterations must be positive");
}

std::vector<std::string> ProtocolConfig::warnings() const {
  std::vector<std::string> w;
  const std::size_t n = spec.size();
  if (n < 3 || n > 8) {
    w.push_back("matrix size " + std::to_string(n) + "x" + std::to_string(n) +
                " is outside the recommended 3x3..8x8 range");
  }
  if (n >= 9) {
    w.push_back("above 8x8 even sound algorithms fail occasionally; the structure is expected to hold "
                "in over half of the trials up to about 20x20");
  }
  if (auto m = spec.magnitude_warning()) w.push_back(*m);
  return w;
}

std::vector<std::uint64_t> sequential_seeds(std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t i = 0; i < count; ++i) s[i] = i;
  return s;
}

double product_margin(double norm_a, double epsilon, AlgorithmId algorithm, std::size_t iterations) {
  const double base = std::max(1e-6, 10.0 * epsilon * epsilon);
  const double full = static_cast<double>(default_iterations(algorithm));
  const double relax = iterations > 0 ? std::max(1.0, full / static_cast<double>(iterations)) : 1.0;
  return base * relax * norm_a;
}

namespace {

TrialOutcome failed(std::uint64_t seed, double eps, FailureReason why, double residual, FactorPair f,
                    PermutationMatrix p) {
  TrialOutcome o;
  o.seed = seed;
  o.epsilon = eps;
  o.pass = false;
  o.failure_reason = why;
  o.residual = residual;
  o.permutation = std::move(p);
  o.factors = std::move(f);
  return o;
}

}  // namespace

std::vector<TrialOutcome> run_protocol(const ProtocolConfig& cfg, std::uint64_t seed, const NmfSolver& solver) {
  const std::size_t n = cfg.spec.size();
  const std::size_t iters = cfg.effective_iterations();
  const Thresholds& t = cfg.thresholds;
  const RunConfig run{cfg.algorithm, iters, seed, n};
  std::vector<TrialOutcome> out;

  const BidiagonalSpec base_spec = cfg.spec.with_epsilon(0.0);
  const DenseMatrix a0 = make_test_matrix(base_spec);
  FactorPair f0 = solver(a0, run);
  const double r0 = frobenius_distance(a0, f0.product());
  const auto identity = PermutationMatrix::identity(n);

  if (!is_monomial(f0.W, t) || !is_monomial(f0.H, t)) {
    out.push_back(failed(seed, 0.0, FailureReason::NotMonomial, r0, std::move(f0), identity));
    return out;
  }
  if (r0 > product_margin(frobenius_norm(a0), 0.0, cfg.algorithm, iters)) {
    out.push_back(failed(seed, 0.0, FailureReason::ProductMismatch, r0, std::move(f0), identity));
    return out;
  }
  const PermutationMatrix p = recover_permutation(f0.H, t);
  {
    TrialOutcome o;
    o.seed = seed;
    o.epsilon = 0.0;
    o.pass = true;
    o.residual = r0;
    o.permutation = p;
    o.factors = std::move(f0);
    out.push_back(std::move(o));
  }

  for (double eps : cfg.epsilons) {
    const BidiagonalSpec spec = cfg.spec.with_epsilon(eps);
    const DenseMatrix a = make_test_matrix(spec);
    FactorPair f = solver(a, run);
    const double r = frobenius_distance(a, f.product());

    if (r > product_margin(frobenius_norm(a), eps, cfg.algorithm, iters)) {
      out.push_back(failed(seed, eps, FailureReason::ProductMismatch, r, std::move(f), p));
      continue;
    }
    PermutationMatrix used = p;
    bool rederived = false;
    if (!check_banded(f, p, t)) {
      auto retry = dominant_permutation(f.H);
      if (retry && *retry != p && check_banded(f, *retry, t)) {
        used = *retry;
        rederived = true;
      } else {
        out.push_back(failed(seed, eps, FailureReason::NotBanded, r, std::move(f), p));
        continue;
      }
    }

    TrialOutcome o;
    o.seed = seed;
    o.epsilon = eps;
    o.pass = true;
    o.residual = r;
    o.permutation = used;
    o.permutation_rederived = rederived;
    const auto [wd, hd] = permute(f.W, f.H, used);
    const FactorPair depermuted{wd, hd};
    if (n == 3) {
      const Classification c = classify(depermuted, eps, t);
      o.solution_type = c.type;
      o.clean = c.clean;
    }
    if (n == 2) o.identity_residual = superdiagonal_identity_residual(depermuted, spec);
    o.epsilon_relations = check_epsilon_relations(f, used, spec, t);
    o.factors = std::move(f);
    out.push_back(std::move(o));
  }
  return out;
}

bool ConformanceReport::all_pass() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const TrialOutcome& o) { return o.pass; });
}

void aggregate(ConformanceReport& report) {
  const ProtocolConfig& cfg = report.config;
  report.pass_rates.clear();
  report.type_histogram.clear();
  report.slopes.clear();
  report.slope_means.clear();
  report.classified = 0;
  report.mixed = 0;

  std::vector<double> stage_eps{0.0};
  stage_eps.insert(stage_eps.end(), cfg.epsilons.begin(), cfg.epsilons.end());
  for (double e : stage_eps) {
    EpsilonPassRate pr{e, 0, 0};
    for (const auto& o : report.outcomes) {
      if (o.epsilon == e) {
        ++pr.trials;
        pr.passes += o.pass ? 1 : 0;
      }
    }
    report.pass_rates.push_back(pr);
  }

  for (const auto& o : report.outcomes) {
    if (!o.solution_type) continue;
    ++report.type_histogram[std::string(to_string(*o.solution_type))];
    ++report.classified;
    if (!o.clean) ++report.mixed;
  }
  report.mixed_fraction =
      report.classified == 0 ? 0.0 : static_cast<double>(report.mixed) / static_cast<double>(report.classified);

  // Slopes: 2x2 seed chains in which every stage passed.
  if (cfg.spec.size() == 2 && !cfg.epsilons.empty()) {
    std::map<std::uint64_t, std::vector<const TrialOutcome*>> chains;
    for (const auto& o : report.outcomes) chains[o.seed].push_back(&o);
    for (std::uint64_t seed : cfg.seeds) {
      const auto& chain = chains[seed];
      if (chain.size() != stage_eps.size()) continue;
      if (!std::all_of(chain.begin(), chain.end(), [](auto* o) { return o->pass; })) continue;
      auto depermute = [](const TrialOutcome& o) {
        auto [w, h] = permute(o.factors.W, o.factors.H, o.permutation);
        return EpsilonSample{o.seed, o.epsilon, FactorPair{std::move(w), std::move(h)}};
      };
      const EpsilonSample base = depermute(*chain.front());
      std::vector<EpsilonSample> samples;
      for (std::size_t k = 1; k < chain.size(); ++k) samples.push_back(depermute(*chain[k]));
      report.slopes.push_back(estimate_slopes(samples, base));
    }

    if (!report.slopes.empty()) {
      const auto& eps_order = report.slopes.front().parameters.front().epsilons;
      for (std::size_t k = 0; k < eps_order.size(); ++k) {
        for (std::size_t j = 0; j < kSlopeParameters.size(); ++j) {
          double sum = 0.0;
          for (const auto& s : report.slopes) sum += s.parameters[j].slopes[k];
          report.slope_means.push_back(
              {eps_order[k], std::string(kSlopeParameters[j]), sum / static_cast<double>(report.slopes.size()),
               report.slopes.size()});
        }
      }
    }
  }
}

ConformanceReport batch_run(const ProtocolConfig& cfg, std::size_t jobs, const NmfSolver& solver) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::vector<TrialOutcome>> per_seed(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        per_seed[i] = run_protocol(cfg, cfg.seeds[i], solver);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, cfg.seeds.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  ConformanceReport report;
  report.config = cfg;
  for (auto& trials : per_seed) {
    for (auto& o : trials) report.outcomes.push_back(std::move(o));
  }
  aggregate(report);
  report.notes = cfg.warnings();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nmftc
