#include "nmftc/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace nmftc {

void Thresholds::validate() const {
  if (!(absolute_negligible > 0.0) || !(relative_order2 > 0.0)) {
    throw std::invalid_argument("thresholds must be positive");
  }
}

std::string_view to_string(SolutionType t) {
  switch (t) {
    case SolutionType::TypeI: return "I";
    case SolutionType::TypeII: return "II";
    case SolutionType::TypeIII: return "III";
    case SolutionType::TypeIV: return "IV";
    case SolutionType::Mixed: return "Mixed";
  }
  return "?";
}

std::optional<SolutionType> parse_solution_type(std::string_view s) {
  for (auto t : {SolutionType::TypeI, SolutionType::TypeII, SolutionType::TypeIII, SolutionType::TypeIV,
                 SolutionType::Mixed}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view to_string(CarrierSide s) {
  switch (s) {
    case CarrierSide::W: return "W";
    case CarrierSide::H: return "H";
    case CarrierSide::Both: return "both";
    case CarrierSide::Neither: return "neither";
  }
  return "?";
}

std::string_view to_string(ParameterSide s) { return s == ParameterSide::W ? "W" : "H"; }

bool is_monomial(const DenseMatrix& m, const Thresholds& t) {
  if (!m.is_square() || m.empty()) return false;
  const Mask mask = nonzero_mask(m, t.absolute_negligible);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (mask.row_count(i) != 1 || mask.col_count(i) != 1) return false;
  }
  return true;
}

PermutationMatrix recover_permutation(const DenseMatrix& h, const Thresholds& t) {
  if (!is_monomial(h, t)) throw StructureError("recover_permutation: H is not monomial");
  const Mask mask = nonzero_mask(h, t.absolute_negligible);
  std::vector<std::size_t> mapping(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      if (mask(i, j)) mapping[i] = j;
    }
  }
  return PermutationMatrix(std::move(mapping));
}

std::optional<PermutationMatrix> dominant_permutation(const DenseMatrix& h) {
  if (!h.is_square() || h.empty()) return std::nullopt;
  std::vector<std::size_t> mapping(h.rows());
  std::vector<bool> used(h.cols(), false);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < h.cols(); ++j) {
      if (h(i, j) > h(i, best)) best = j;
    }
    if (used[best]) return std::nullopt;
    used[best] = true;
    mapping[i] = best;
  }
  return PermutationMatrix(std::move(mapping));
}

bool check_banded(const FactorPair& f, const PermutationMatrix& p, const Thresholds& t) {
  const std::size_t n = p.size();
  if (f.W.rows() != n || f.W.cols() != n || f.H.rows() != n || f.H.cols() != n) {
    throw DimensionError("check_banded: factors and permutation must all be n x n");
  }
  const auto [wp, ph] = permute(f.W, f.H, p);
  const Mask support = allowed_support(n);
  return nonzero_mask(wp, t.absolute_negligible).subset_of(support) &&
         nonzero_mask(ph, t.absolute_negligible).subset_of(support);
}

Classification classify(const FactorPair& d, double epsilon, const Thresholds& t) {
  if (d.W.rows() != 3 || d.W.cols() != 3 || d.H.rows() != 3 || d.H.cols() != 3) {
    throw DimensionError("classify: solution types are defined for 3x3 factors only");
  }
  const double cut = t.order2_cut(epsilon);
  // zero_on_w[i]: the structurally zero entry at superdiagonal index i is w1(i)
  bool zero_on_w[2];
  bool clean = true;
  for (std::size_t i = 0; i < 2; ++i) {
    const double w1 = d.W(i, i + 1);
    const double h1 = d.H(i, i + 1);
    const bool zw = w1 < cut;
    const bool zh = h1 < cut;
    if (zw && zh) return {SolutionType::Mixed, false};
    if (zw != zh) {
      zero_on_w[i] = zw;
    } else {
      zero_on_w[i] = w1 <= h1;  // neither negligible: ignore the smaller one
      clean = false;
    }
  }
  SolutionType type;
  if (zero_on_w[0]) {
    type = zero_on_w[1] ? SolutionType::TypeI : SolutionType::TypeIII;
  } else {
    type = zero_on_w[1] ? SolutionType::TypeIV : SolutionType::TypeII;
  }
  return {type, clean};
}

Classification classify(const FactorPair& f, const PermutationMatrix& p, const BidiagonalSpec& spec,
                        const Thresholds& t) {
  auto [w, h] = permute(f.W, f.H, p);
  return classify(FactorPair{std::move(w), std::move(h)}, spec.epsilon, t);
}

std::vector<EpsilonRelation> check_epsilon_relations(const FactorPair& f, const PermutationMatrix& p,
                                                     const BidiagonalSpec& spec, const Thresholds& t) {
  spec.validate();
  const std::size_t n = spec.size();
  if (p.size() != n) throw DimensionError("check_epsilon_relations: permutation size mismatch");
  const auto [w, h] = permute(f.W, f.H, p);
  const double eps = spec.epsilon;
  const double cut = t.order2_cut(eps);

  std::vector<EpsilonRelation> out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    EpsilonRelation r{i, CarrierSide::Neither, std::nullopt};
    const bool sig_w = w(i, i + 1) >= cut;
    const bool sig_h = h(i, i + 1) >= cut;
    if (sig_w && !sig_h) {
      r.side = CarrierSide::W;
      r.deviation = std::abs(w(i, i + 1) - eps * spec.a1[i] * w(i + 1, i + 1) / spec.a0[i + 1]);
    } else if (sig_h && !sig_w) {
      r.side = CarrierSide::H;
      r.deviation = std::abs(h(i, i + 1) - eps * spec.a1[i] * h(i, i) / spec.a0[i]);
    } else if (sig_w && sig_h) {
      r.side = CarrierSide::Both;
    }
    out.push_back(r);
  }
  return out;
}

namespace {

std::array<double, 3> parameters(const FactorPair& f, ParameterSide side) {
  if (side == ParameterSide::W) return {f.W(0, 0), f.W(1, 1), f.W(0, 1)};
  return {f.H(1, 1), f.H(0, 0), f.H(0, 1)};
}

// Relative change of the superdiagonal slope between the two smallest
// epsilons. A slope that is zero at both counts as not linear at all.
double relative_slope_change(double s_small, double s_next) {
  const double scale = std::max(std::abs(s_small), std::abs(s_next));
  if (scale <= 1e-12) return std::numeric_limits<double>::infinity();
  return std::abs(s_small - s_next) / scale;
}

}  // namespace

SlopeReport estimate_slopes(std::span<const EpsilonSample> samples, const EpsilonSample& base) {
  if (samples.empty()) throw std::invalid_argument("estimate_slopes: no samples");
  if (base.factors.W.rows() < 2 || base.factors.W.cols() < 2 || base.factors.H.rows() < 2 ||
      base.factors.H.cols() < 2) {
    throw DimensionError("estimate_slopes: factors must be at least 2x2");
  }
  std::vector<const EpsilonSample*> sorted;
  for (const auto& s : samples) {
    if (s.seed != base.seed) {
      throw std::invalid_argument("estimate_slopes: sample seed " + std::to_string(s.seed) +
                                  " differs from base seed " + std::to_string(base.seed));
    }
    if (!(s.epsilon > 0.0)) throw std::invalid_argument("estimate_slopes: epsilons must be positive");
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->epsilon > b->epsilon; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k]->epsilon == sorted[k - 1]->epsilon) {
      throw std::invalid_argument("estimate_slopes: duplicate epsilon");
    }
  }

  auto slopes_for = [&](ParameterSide side) {
    const auto p0 = parameters(base.factors, side);
    std::array<std::vector<double>, 3> s;
    for (const auto* sample : sorted) {
      const auto p = parameters(sample->factors, side);
      for (std::size_t j = 0; j < 3; ++j) s[j].push_back((p[j] - p0[j]) / sample->epsilon);
    }
    return s;
  };
  auto w_slopes = slopes_for(ParameterSide::W);
  auto h_slopes = slopes_for(ParameterSide::H);

  ParameterSide side = ParameterSide::W;
  if (sorted.size() >= 2) {
    const std::size_t last = sorted.size() - 1;
    const double w_change = relative_slope_change(w_slopes[2][last], w_slopes[2][last - 1]);
    const double h_change = relative_slope_change(h_slopes[2][last], h_slopes[2][last - 1]);
    if (h_change < w_change) side = ParameterSide::H;
  }

  SlopeReport report;
  report.seed = base.seed;
  report.side = side;
  const auto& chosen = side == ParameterSide::W ? w_slopes : h_slopes;
  const auto& names = side == ParameterSide::W ? kSlopeParameters : kMirroredParameters;
  for (std::size_t j = 0; j < 3; ++j) {
    SlopeRecord rec;
    rec.parameter = std::string(kSlopeParameters[j]);
    rec.source = std::string(names[j]);
    for (const auto* sample : sorted) rec.epsilons.push_back(sample->epsilon);
    rec.slopes = chosen[j];
    for (std::size_t k = 0; k + 1 < rec.slopes.size(); ++k) {
      rec.slope_changes.push_back(std::abs(rec.slopes[k] - rec.slopes[k + 1]));
    }
    report.parameters.push_back(std::move(rec));
  }
  return report;
}

}  // namespace nmftc
