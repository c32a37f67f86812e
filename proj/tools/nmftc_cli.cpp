// nmftc: generate perturbed-bidiagonal NMF test inputs, run the conformance
// protocol against the built-in algorithms, and emit reports.
//
// Exit status: 0 all trials passed, 1 some trial failed, 2 configuration error.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmftc/harness.hpp"

namespace {

using namespace nmftc;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string spec_path;
  std::string algorithm = "mu";
  std::string epsilons = "1e-3";
  std::string seeds = "10";
  std::size_t iterations = 0;
  double threshold = 1e-10;
  std::string format = "json";
  std::string out;
  std::size_t jobs = 1;
  std::size_t grid = 5;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<double> parse_epsilons(const std::string& s) {
  std::vector<double> eps;
  for (const auto& part : split_commas(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size()) throw ConfigError("bad epsilon value '" + part + "'");
    eps.push_back(v);
  }
  return eps;
}

// "N" means seeds 0..N-1; anything with a comma is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  auto to_u64 = [](const std::string& part) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.front() == '-') throw ConfigError("bad seed value '" + part + "'");
    return static_cast<std::uint64_t>(v);
  };
  if (s.find(',') == std::string::npos) return sequential_seeds(to_u64(s));
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split_commas(s)) seeds.push_back(to_u64(part));
  return seeds;
}

ProtocolConfig make_config(const Options& o) {
  ProtocolConfig cfg;
  try {
    cfg.spec = load_spec_file(o.spec_path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto alg = parse_algorithm(o.algorithm);
  if (!alg) throw ConfigError("unknown algorithm '" + o.algorithm + "'");
  cfg.algorithm = *alg;
  cfg.epsilons = parse_epsilons(o.epsilons);
  cfg.seeds = parse_seeds(o.seeds);
  if (o.iterations > 0) cfg.iterations = o.iterations;
  cfg.thresholds.absolute_negligible = o.threshold;
  cfg.validate();
  return cfg;
}

ReportFormat parse_format(const std::string& f) {
  if (f == "json") return ReportFormat::Json;
  if (f == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown format '" + f + "'");
}

// Writes to --out if given, stdout otherwise.
template <typename Fn>
void with_output(const Options& o, Fn&& fn) {
  if (o.out.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream file(o.out);
  if (!file) throw std::ios_base::failure("cannot open " + o.out + " for writing");
  fn(file);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_gen(const Options& o) {
  BidiagonalSpec spec;
  try {
    spec = load_spec_file(o.spec_path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (auto w = spec.magnitude_warning()) print_warnings({*w});
  const DenseMatrix a = make_test_matrix(spec);
  with_output(o, [&](std::ostream& out) {
    if (o.format == "json") {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < a.rows(); ++i) {
        std::vector<double> row(a.values().begin() + static_cast<std::ptrdiff_t>(i * a.cols()),
                                a.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * a.cols()));
        rows.push_back(row);
      }
      out << nlohmann::json{{"rows", a.rows()}, {"cols", a.cols()}, {"values", rows}}.dump() << '\n';
    } else {
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out << (j ? "," : "") << std::setprecision(17) << a(i, j);
        out << '\n';
      }
    }
  });
  return kExitPass;
}

int cmd_run(const Options& o) {
  ProtocolConfig cfg = make_config(o);
  print_warnings(cfg.warnings());
  const std::uint64_t seed = cfg.seeds.front();
  const auto outcomes = run_protocol(cfg, seed);
  bool all = true;
  with_output(o, [&](std::ostream& out) {
    out << "algorithm " << to_string(cfg.algorithm) << ", seed " << seed << ", " << cfg.effective_iterations()
        << " iterations, " << cfg.spec.size() << "x" << cfg.spec.size() << '\n';
    for (const auto& t : outcomes) {
      all = all && t.pass;
      out << "\neps = " << t.epsilon << ": " << (t.pass ? "PASS" : "FAIL");
      if (t.failure_reason) out << " (" << to_string(*t.failure_reason) << ")";
      out << "\n  residual ||A - WH||_F = " << t.residual << '\n';
      out << "  permutation [";
      for (std::size_t i = 0; i < t.permutation.size(); ++i) out << (i ? " " : "") << t.permutation[i];
      out << "]" << (t.permutation_rederived ? " (re-derived)" : "") << '\n';
      if (t.solution_type) {
        out << "  type " << to_string(*t.solution_type) << (t.clean ? "" : " (tie-broken)") << '\n';
      }
      if (t.identity_residual) out << "  |w0(1)h1(1) + w1(1)h0(2) - eps*a1(1)| = " << *t.identity_residual << '\n';
      for (const auto& r : t.epsilon_relations) {
        out << "  superdiagonal " << r.index + 1 << ": carried by " << to_string(r.side);
        if (r.deviation) out << ", deviation " << *r.deviation;
        out << '\n';
      }
      out << "  W =\n" << to_string(t.factors.W) << "\n  H =\n" << to_string(t.factors.H) << '\n';
    }
  });
  return all ? kExitPass : kExitFail;
}

int cmd_batch(const Options& o, bool slopes_only) {
  ProtocolConfig cfg = make_config(o);
  const ReportFormat format = parse_format(o.format);
  print_warnings(cfg.warnings());
  const ConformanceReport report = batch_run(cfg, o.jobs);
  with_output(o, [&](std::ostream& out) {
    if (slopes_only) {
      emit_slope_data(report, out);
    } else {
      emit_report(report, format, out);
    }
  });
  for (const auto& pr : report.pass_rates) {
    std::cerr << "eps " << pr.epsilon << ": " << pr.passes << "/" << pr.trials << " passed\n";
  }
  return report.all_pass() ? kExitPass : kExitFail;
}

// Walks a grid over (w0(1), w0(2), w1(1)) for both branches of the 2x2
// closed form and checks each member against the analysis routines.
int cmd_oracle(const Options& o) {
  BidiagonalSpec spec;
  try {
    spec = load_spec_file(o.spec_path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (spec.size() != 2) throw ConfigError("oracle: the closed form exists for 2x2 specs only");
  if (o.grid < 2) throw ConfigError("oracle: --grid must be >= 2");
  const DenseMatrix a = make_test_matrix(spec);
  const double norm_a = frobenius_norm(a);
  Thresholds t;
  t.absolute_negligible = o.threshold;

  std::size_t checked = 0, good = 0;
  double worst_reconstruction = 0.0, worst_identity = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (Branch branch : {Branch::Direct, Branch::Swapped}) {
    for (std::size_t i = 0; i < o.grid; ++i) {
      for (std::size_t j = 0; j < o.grid; ++j) {
        for (std::size_t k = 0; k < o.grid; ++k) {
          const double w01 = 0.25 + 3.75 * static_cast<double>(i) / static_cast<double>(o.grid - 1);
          const double w02 = 0.25 + 3.75 * static_cast<double>(j) / static_cast<double>(o.grid - 1);
          const double w11 = max_w1_1(spec, w02) * static_cast<double>(k) / static_cast<double>(o.grid - 1);
          const ExactSolution2x2 sol{branch, {w01, w02}, w11};
          const FactorPair f = exact_factor_2x2(spec, sol);
          const double rec = frobenius_distance(a, f.product()) / norm_a;
          const PermutationMatrix p = branch == Branch::Direct ? PermutationMatrix::identity(2)
                                                               : PermutationMatrix({1, 0});
          auto [wd, hd] = permute(f.W, f.H, p);
          const double ident = superdiagonal_identity_residual({wd, hd}, spec);
          const bool banded = check_banded(f, p, t);
          const bool ok = rec <= 1e-14 && ident <= 1e-14 && banded;
          ++checked;
          good += ok ? 1 : 0;
          worst_reconstruction = std::max(worst_reconstruction, rec);
          worst_identity = std::max(worst_identity, ident);
          rows.push_back({{"branch", branch == Branch::Direct ? "direct" : "swapped"},
                          {"w0", {w01, w02}},
                          {"w1_1", w11},
                          {"relative_reconstruction_error", rec},
                          {"identity_residual", ident},
                          {"banded", banded},
                          {"ok", ok}});
        }
      }
    }
  }
  with_output(o, [&](std::ostream& out) {
    if (o.format == "json") {
      out << nlohmann::json{{"spec", nlohmann::json::parse(spec_to_json(spec))},
                            {"checked", checked},
                            {"verified", good},
                            {"worst_relative_reconstruction_error", worst_reconstruction},
                            {"worst_identity_residual", worst_identity},
                            {"solutions", rows}}
                 .dump(2)
          << '\n';
    } else {
      out << "branch,w0_1,w0_2,w1_1,relative_reconstruction_error,identity_residual,banded,ok\n";
      for (const auto& r : rows) {
        out << r["branch"].get<std::string>() << ',' << std::setprecision(17) << r["w0"][0].get<double>() << ','
            << r["w0"][1].get<double>() << ',' << r["w1_1"].get<double>() << ','
            << r["relative_reconstruction_error"].get<double>() << ',' << r["identity_residual"].get<double>()
            << ',' << (r["banded"].get<bool>() ? "true" : "false") << ',' << (r["ok"].get<bool>() ? "true" : "false")
            << '\n';
      }
    }
  });
  std::cerr << good << "/" << checked << " closed-form solutions verified\n";
  return good == checked ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformance tests for NMF algorithms on perturbed bidiagonal matrices"};
  app.require_subcommand(1);
  Options o;

  auto add_spec = [&](CLI::App* sub) {
    sub->add_option("--spec", o.spec_path, "JSON file {\"a0\": [...], \"a1\": [...], \"epsilon\": r}")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", o.out, "Output path (default stdout)");
  };
  auto add_protocol = [&](CLI::App* sub) {
    add_spec(sub);
    sub->add_option("--algorithm", o.algorithm, "mu, als or pgd")->check(CLI::IsMember({"mu", "als", "pgd"}));
    sub->add_option("--epsilons", o.epsilons, "Comma-separated positive perturbation sizes");
    sub->add_option("--seeds", o.seeds, "Seed count N (seeds 0..N-1) or a comma-separated list");
    sub->add_option("--iterations", o.iterations, "Iteration budget (default: 1e6 for mu/als, 1e4 for pgd)");
    sub->add_option("--threshold", o.threshold, "Absolute negligibility threshold")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    add_output(sub);
  };

  auto* gen = app.add_subcommand("gen", "Print the test matrix for a spec file");
  add_spec(gen);
  add_output(gen);
  auto* run = app.add_subcommand("run", "Run one protocol trial verbosely (first seed)");
  add_protocol(run);
  auto* batch = app.add_subcommand("batch", "Run the protocol over all seeds and emit a report");
  add_protocol(batch);
  auto* slopes = app.add_subcommand("slopes", "Emit mean linearity-in-eps slopes as CSV (2x2 specs)");
  add_protocol(slopes);
  auto* oracle = app.add_subcommand("oracle", "Enumerate and verify closed-form 2x2 exact factorizations");
  add_spec(oracle);
  add_output(oracle);
  oracle->add_option("--grid", o.grid, "Grid points per free parameter")->check(CLI::Range(2, 1000));
  oracle->add_option("--threshold", o.threshold, "Absolute negligibility threshold")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*run) return cmd_run(o);
    if (*batch) return cmd_batch(o, false);
    if (*slopes) return cmd_batch(o, true);
    if (*oracle) return cmd_oracle(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitConfig;
}
