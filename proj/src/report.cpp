#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nmftc/harness.hpp"

namespace nmftc {

using nlohmann::json;

namespace {

json matrix_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseMatrix matrix_from_json(const json& j) {
  const std::size_t r = j.size();
  const std::size_t c = r == 0 ? 0 : j.at(0).size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : j) {
    if (row.size() != c) throw std::invalid_argument("report: ragged matrix");
    for (const auto& x : row) v.push_back(x.get<double>());
  }
  return DenseMatrix(r, c, std::move(v));
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json config_to_json(const ProtocolConfig& c) {
  return {
      {"spec", {{"a0", c.spec.a0}, {"a1", c.spec.a1}}},
      {"epsilons", c.epsilons},
      {"algorithm", std::string(to_string(c.algorithm))},
      {"seeds", c.seeds},
      {"iterations", c.effective_iterations()},
      {"iterations_override", c.iterations.has_value()},
      {"thresholds",
       {{"absolute_negligible", c.thresholds.absolute_negligible},
        {"relative_order2", c.thresholds.relative_order2}}},
  };
}

ProtocolConfig config_from_json(const json& j) {
  ProtocolConfig c;
  c.spec.a0 = j.at("spec").at("a0").get<std::vector<double>>();
  c.spec.a1 = j.at("spec").at("a1").get<std::vector<double>>();
  c.epsilons = j.at("epsilons").get<std::vector<double>>();
  const auto alg = parse_algorithm(j.at("algorithm").get<std::string>());
  if (!alg) throw std::invalid_argument("report: unknown algorithm");
  c.algorithm = *alg;
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.at("iterations_override").get<bool>()) c.iterations = j.at("iterations").get<std::size_t>();
  c.thresholds.absolute_negligible = j.at("thresholds").at("absolute_negligible").get<double>();
  c.thresholds.relative_order2 = j.at("thresholds").at("relative_order2").get<double>();
  return c;
}

json outcome_to_json(const TrialOutcome& o) {
  json rel = json::array();
  for (const auto& r : o.epsilon_relations) {
    rel.push_back({{"index", r.index}, {"side", std::string(to_string(r.side))}, {"deviation", optional_to_json(r.deviation)}});
  }
  return {
      {"seed", o.seed},
      {"epsilon", o.epsilon},
      {"pass", o.pass},
      {"failure_reason", o.failure_reason ? json(std::string(to_string(*o.failure_reason))) : json(nullptr)},
      {"residual", o.residual},
      {"permutation", o.permutation.mapping()},
      {"permutation_rederived", o.permutation_rederived},
      {"solution_type", o.solution_type ? json(std::string(to_string(*o.solution_type))) : json(nullptr)},
      {"clean", o.clean},
      {"identity_residual", optional_to_json(o.identity_residual)},
      {"epsilon_relations", std::move(rel)},
      {"W", matrix_to_json(o.factors.W)},
      {"H", matrix_to_json(o.factors.H)},
  };
}

CarrierSide parse_side(const std::string& s) {
  for (auto side : {CarrierSide::W, CarrierSide::H, CarrierSide::Both, CarrierSide::Neither}) {
    if (to_string(side) == s) return side;
  }
  throw std::invalid_argument("report: unknown carrier side " + s);
}

TrialOutcome outcome_from_json(const json& j) {
  TrialOutcome o;
  o.seed = j.at("seed").get<std::uint64_t>();
  o.epsilon = j.at("epsilon").get<double>();
  o.pass = j.at("pass").get<bool>();
  if (!j.at("failure_reason").is_null()) {
    o.failure_reason = parse_failure_reason(j.at("failure_reason").get<std::string>());
    if (!o.failure_reason) throw std::invalid_argument("report: unknown failure_reason");
  }
  o.residual = j.at("residual").get<double>();
  o.permutation = PermutationMatrix(j.at("permutation").get<std::vector<std::size_t>>());
  o.permutation_rederived = j.at("permutation_rederived").get<bool>();
  if (!j.at("solution_type").is_null()) {
    o.solution_type = parse_solution_type(j.at("solution_type").get<std::string>());
    if (!o.solution_type) throw std::invalid_argument("report: unknown solution_type");
  }
  o.clean = j.at("clean").get<bool>();
  if (!j.at("identity_residual").is_null()) o.identity_residual = j.at("identity_residual").get<double>();
  for (const auto& r : j.at("epsilon_relations")) {
    EpsilonRelation rel;
    rel.index = r.at("index").get<std::size_t>();
    rel.side = parse_side(r.at("side").get<std::string>());
    if (!r.at("deviation").is_null()) rel.deviation = r.at("deviation").get<double>();
    o.epsilon_relations.push_back(rel);
  }
  o.factors = {matrix_from_json(j.at("W")), matrix_from_json(j.at("H"))};
  return o;
}

json slope_report_to_json(const SlopeReport& s) {
  json params = json::array();
  for (const auto& p : s.parameters) {
    params.push_back({{"parameter", p.parameter},
                      {"source", p.source},
                      {"epsilons", p.epsilons},
                      {"slopes", p.slopes},
                      {"slope_changes", p.slope_changes}});
  }
  return {{"seed", s.seed}, {"side", std::string(to_string(s.side))}, {"parameters", std::move(params)}};
}

SlopeReport slope_report_from_json(const json& j) {
  SlopeReport s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto side = j.at("side").get<std::string>();
  if (side != "W" && side != "H") throw std::invalid_argument("report: unknown slope side");
  s.side = side == "W" ? ParameterSide::W : ParameterSide::H;
  for (const auto& p : j.at("parameters")) {
    s.parameters.push_back({p.at("parameter").get<std::string>(), p.at("source").get<std::string>(),
                            p.at("epsilons").get<std::vector<double>>(), p.at("slopes").get<std::vector<double>>(),
                            p.at("slope_changes").get<std::vector<double>>()});
  }
  return s;
}

json report_to_json(const ConformanceReport& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(outcome_to_json(o));
  json rates = json::array();
  for (const auto& p : r.pass_rates) {
    rates.push_back({{"epsilon", p.epsilon}, {"trials", p.trials}, {"passes", p.passes}, {"rate", p.rate()}});
  }
  json per_seed = json::array();
  for (const auto& s : r.slopes) per_seed.push_back(slope_report_to_json(s));
  json means = json::array();
  for (const auto& m : r.slope_means) {
    means.push_back({{"epsilon", m.epsilon}, {"parameter", m.parameter}, {"mean_slope", m.mean_slope}, {"n_seeds", m.n_seeds}});
  }
  json hist = json::object();
  for (const auto& [k, v] : r.type_histogram) hist[k] = v;
  return {
      {"config", config_to_json(r.config)},
      {"outcomes", std::move(outcomes)},
      {"aggregate",
       {{"pass_rate", std::move(rates)},
        {"type_histogram", std::move(hist)},
        {"classified", r.classified},
        {"mixed", r.mixed},
        {"mixed_fraction", r.mixed_fraction},
        {"slopes", {{"per_seed", std::move(per_seed)}, {"means", std::move(means)}}}}},
      {"notes", r.notes},
      {"timing", {{"wall_seconds", r.wall_seconds}}},
  };
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

void emit_report(const ConformanceReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Json) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    out << kCsvHeader << '\n';
    for (const auto& o : report.outcomes) {
      out << o.seed << ',' << csv_number(o.epsilon) << ',' << (o.pass ? "true" : "false") << ','
          << (o.failure_reason ? to_string(*o.failure_reason) : "") << ',' << csv_number(o.residual) << ','
          << (o.solution_type ? to_string(*o.solution_type) : "") << ',' << (o.clean ? "true" : "false") << ','
          << (o.identity_residual ? csv_number(*o.identity_residual) : "") << '\n';
    }
  }
  if (!out) throw std::ios_base::failure("emit_report: write failed");
}

std::string emit_report(const ConformanceReport& report, ReportFormat format) {
  std::ostringstream os;
  emit_report(report, format, os);
  return os.str();
}

ConformanceReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ConformanceReport r;
    r.config = config_from_json(j.at("config"));
    for (const auto& o : j.at("outcomes")) r.outcomes.push_back(outcome_from_json(o));
    const auto& agg = j.at("aggregate");
    for (const auto& p : agg.at("pass_rate")) {
      r.pass_rates.push_back({p.at("epsilon").get<double>(), p.at("trials").get<std::size_t>(),
                              p.at("passes").get<std::size_t>()});
    }
    for (const auto& [k, v] : agg.at("type_histogram").items()) r.type_histogram[k] = v.get<std::size_t>();
    r.classified = agg.at("classified").get<std::size_t>();
    r.mixed = agg.at("mixed").get<std::size_t>();
    r.mixed_fraction = agg.at("mixed_fraction").get<double>();
    for (const auto& s : agg.at("slopes").at("per_seed")) r.slopes.push_back(slope_report_from_json(s));
    for (const auto& m : agg.at("slopes").at("means")) {
      r.slope_means.push_back({m.at("epsilon").get<double>(), m.at("parameter").get<std::string>(),
                               m.at("mean_slope").get<double>(), m.at("n_seeds").get<std::size_t>()});
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.wall_seconds = j.at("timing").at("wall_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report: ") + e.what());
  }
}

void emit_slope_data(const ConformanceReport& report, std::ostream& out) {
  std::set<double> eps;
  for (const auto& m : report.slope_means) eps.insert(m.epsilon);
  if (eps.size() < 2) {
    throw std::invalid_argument("slope data needs eps = 0 plus at least two positive epsilons with passing 2x2 trials");
  }
  out << kSlopeCsvHeader << '\n';
  for (const auto& m : report.slope_means) {
    out << csv_number(m.epsilon) << ',' << m.parameter << ',' << csv_number(m.mean_slope) << ',' << m.n_seeds << '\n';
  }
  if (!out) throw std::ios_base::failure("emit_slope_data: write failed");
}

std::string emit_slope_data(const ConformanceReport& report) {
  std::ostringstream os;
  emit_slope_data(report, os);
  return os.str();
}

}  // namespace nmftc
