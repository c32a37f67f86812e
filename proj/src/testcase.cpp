#include "nmftc/testcase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nmftc {

void BidiagonalSpec::validate() const {
  if (a0.empty()) throw DimensionError("spec: a0 must be non-empty");
  if (a1.size() + 1 != a0.size()) {
    throw DimensionError("spec: a1 must have length " + std::to_string(a0.size() - 1) + ", got " +
                         std::to_string(a1.size()));
  }
  for (double x : a0) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("spec: a0 entries must be positive");
  }
  for (double x : a1) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("spec: a1 entries must be positive");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("spec: epsilon must be finite and >= 0");
  }
}

std::optional<std::string> BidiagonalSpec::magnitude_warning() const {
  std::vector<double> all = a0;
  all.insert(all.end(), a1.begin(), a1.end());
  if (all.empty()) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  if (*lo > 0.0 && *hi / *lo <= 100.0) return std::nullopt;
  std::ostringstream os;
  os << "a0/a1 entries span a ratio of " << (*hi / *lo)
     << " (> 100); entries should be of comparable magnitude";
  return os.str();
}

BidiagonalSpec unit_spec(std::size_t n, double epsilon) {
  return {std::vector<double>(n, 1.0), std::vector<double>(n == 0 ? 0 : n - 1, 1.0), epsilon};
}

DenseMatrix make_test_matrix(const BidiagonalSpec& spec) {
  spec.validate();
  const std::size_t n = spec.size();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = spec.a0[i];
  if (spec.epsilon > 0.0) {
    for (std::size_t i = 0; i + 1 < n; ++i) a(i, i + 1) = spec.epsilon * spec.a1[i];
  }
  return a;
}

Mask allowed_support(std::size_t n) {
  Mask m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.set(i, i, true);
    if (i + 1 < n) m.set(i, i + 1, true);
  }
  return m;
}

double max_w1_1(const BidiagonalSpec& spec, double w0_2) {
  return spec.epsilon * spec.a1.at(0) * w0_2 / spec.a0.at(1);
}

FactorPair exact_factor_2x2(const BidiagonalSpec& spec, const ExactSolution2x2& sol) {
  spec.validate();
  if (spec.size() != 2) throw DimensionError("exact_factor_2x2: spec must be 2x2");
  const auto [w01, w02] = sol.w0;
  if (!(w01 > 0.0) || !(w02 > 0.0)) throw std::invalid_argument("exact_factor_2x2: w0 must be positive");
  if (!(sol.w1_1 >= 0.0)) throw std::invalid_argument("exact_factor_2x2: w1(1) must be >= 0");
  const double bound = max_w1_1(spec, w02);
  if (sol.w1_1 > bound * (1.0 + 1e-12)) {
    throw std::invalid_argument("exact_factor_2x2: w1(1) exceeds eps*a1(1)*w0(2)/a0(2), H would be negative");
  }
  const double a01 = spec.a0[0], a02 = spec.a0[1], a11 = spec.a1[0];

  FactorPair f{DenseMatrix(2, 2), DenseMatrix(2, 2)};
  f.W(0, 0) = w01;
  f.W(0, 1) = sol.w1_1;
  f.W(1, 1) = w02;
  f.H(0, 0) = a01 / w01;
  f.H(0, 1) = std::max(0.0, (a11 / w01) * (spec.epsilon - sol.w1_1 * a02 / (a11 * w02)));
  f.H(1, 1) = a02 / w02;

  if (sol.branch == Branch::Swapped) {
    // (W P^-1)(P H) with P the 2x2 swap, so that permute(W, H, swap) recovers the Direct form.
    const PermutationMatrix swap({1, 0});
    auto [w, h] = permute(f.W, f.H, swap.inverse());
    f = {std::move(w), std::move(h)};
  }
  return f;
}

double superdiagonal_identity_residual(const FactorPair& f, const BidiagonalSpec& spec) {
  if (f.W.rows() != 2 || f.W.cols() != 2 || f.H.rows() != 2 || f.H.cols() != 2) {
    throw DimensionError("superdiagonal_identity_residual: 2x2 factors required");
  }
  if (spec.a1.size() != 1) throw DimensionError("superdiagonal_identity_residual: 2x2 spec required");
  return std::abs(f.W(0, 0) * f.H(0, 1) + f.W(0, 1) * f.H(1, 1) - spec.epsilon * spec.a1[0]);
}

BidiagonalSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("a0") || !j.contains("a1")) {
    throw std::invalid_argument("spec: expected an object with \"a0\" and \"a1\"");
  }
  BidiagonalSpec s;
  try {
    s.a0 = j.at("a0").get<std::vector<double>>();
    s.a1 = j.at("a1").get<std::vector<double>>();
    s.epsilon = j.value("epsilon", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string spec_to_json(const BidiagonalSpec& spec) {
  nlohmann::json j{{"a0", spec.a0}, {"a1", spec.a1}, {"epsilon", spec.epsilon}};
  return j.dump();
}

BidiagonalSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("spec: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str());
}

}  // namespace nmftc
