#include "nmftc/algorithms.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmftc {
namespace {

// Row-major kernels writing into preallocated output. The run loop calls
// these millions of times on tiny matrices, so nothing here allocates.

// c(m x n) = a(m x k) * b(k x n)
void gemm_nn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::fill(c.values().begin(), c.values().end(), 0.0);
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ap[i * k + p];
      const double* brow = bp + p * n;
      double* crow = cp + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// c(m x n) = a(k x m)^T * b(k x n)
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  std::fill(c.values().begin(), c.values().end(), 0.0);
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = ap + p * m;
    const double* brow = bp + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = arow[i];
      double* crow = cp + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

// c(m x n) = a(m x k) * b(n x k)^T
void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ap[i * k + p] * bp[j * k + p];
      cp[i * n + j] = s;
    }
  }
}

double squared_distance(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0.0;
  const double* ap = a.data();
  const double* bp = b.data();
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = ap[t] - bp[t];
    s += d * d;
  }
  return s;
}

double squared_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  return s;
}

void clamp_nonnegative(DenseMatrix& m) {
  for (double& x : m.values()) {
    if (!(x > 0.0)) x = 0.0;
  }
}

/**
 * Solves G X = B in place (B is overwritten with X) for symmetric positive
 * semidefinite G of size k. Cholesky first; a pivot that is not clearly
 * positive marks G as singular, in which case the factorization is redone on
 * G + kAlsRidge * I.
 */
void spd_solve(DenseMatrix& g, DenseMatrix& b, DenseMatrix& l) {
  const std::size_t k = g.rows();
  const std::size_t nrhs = b.cols();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < k; ++i) max_diag = std::max(max_diag, g(i, i));
  const double pivot_floor = 1e-14 * std::max(max_diag, 1.0);

  auto factor = [&](double shift) {
    for (std::size_t j = 0; j < k; ++j) {
      double d = g(j, j) + shift;
      for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
      if (!(d > pivot_floor) && shift == 0.0) return false;
      if (!(d > 0.0)) d = shift;
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < k; ++i) {
        double s = g(i, j);
        for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
        l(i, j) = s / l(j, j);
      }
    }
    return true;
  };
  if (!factor(0.0)) factor(kAlsRidge);

  for (std::size_t c = 0; c < nrhs; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      double s = b(i, c);
      for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * b(p, c);
      b(i, c) = s / l(i, i);
    }
    for (std::size_t i = k; i-- > 0;) {
      double s = b(i, c);
      for (std::size_t p = i + 1; p < k; ++p) s -= l(p, i) * b(p, c);
      b(i, c) = s / l(i, i);
    }
  }
}

class Workspace {
 public:
  Workspace(std::size_t m, std::size_t k, std::size_t n)
      : kn_a_(k, n), kn_b_(k, n), kk_a_(k, k), kk_b_(k, k), mk_a_(m, k), mk_b_(m, k),
        km_(k, m), mn_(m, n), w_trial_(m, k), h_trial_(k, n) {}

  void mu(const DenseMatrix& a, DenseMatrix& w, DenseMatrix& h) {
    gemm_tn(w, a, kn_a_);       // W^T A
    gemm_tn(w, w, kk_a_);       // W^T W
    gemm_nn(kk_a_, h, kn_b_);   // W^T W H
    update_multiplicative(h, kn_a_, kn_b_);

    gemm_nt(a, h, mk_a_);       // A H^T
    gemm_nt(h, h, kk_a_);       // H H^T
    gemm_nn(w, kk_a_, mk_b_);   // W H H^T
    update_multiplicative(w, mk_a_, mk_b_);
  }

  void als(const DenseMatrix& a, DenseMatrix& w, DenseMatrix& h) {
    gemm_tn(w, w, kk_a_);
    gemm_tn(w, a, h);           // right-hand side W^T A, solved in place
    spd_solve(kk_a_, h, kk_b_);
    clamp_nonnegative(h);

    gemm_nt(h, h, kk_a_);
    gemm_nt(h, a, km_);         // H A^T
    spd_solve(kk_a_, km_, kk_b_);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = km_(j, i);
    }
    clamp_nonnegative(w);
  }

  // R = WH - A into mn_; returns 0.5 * ||R||^2.
  double residual(const DenseMatrix& a, const DenseMatrix& w, const DenseMatrix& h) {
    gemm_nn(w, h, mn_);
    double f = 0.0;
    for (std::size_t t = 0; t < mn_.size(); ++t) {
      mn_.data()[t] -= a.data()[t];
      f += mn_.data()[t] * mn_.data()[t];
    }
    return 0.5 * f;
  }

  // Fixed-step projected gradient: H block first, then W at the new H.
  void pgd_fixed(const DenseMatrix& a, DenseMatrix& w, DenseMatrix& h, double step) {
    residual(a, w, h);
    gemm_nt(mn_, h, mk_a_);
    gemm_tn(w, mn_, kn_a_);
    project(w, mk_a_, step, w_trial_);
    project(h, kn_a_, step, h_trial_);
    std::swap(w, w_trial_);
    std::swap(h, h_trial_);
  }

  // One projected gradient step on (W, H) jointly with Armijo backtracking.
  void pgd_search(const DenseMatrix& a, DenseMatrix& w, DenseMatrix& h, const LineSearch& ls) {
    const double f0 = residual(a, w, h);
    gemm_nt(mn_, h, mk_a_);
    gemm_tn(w, mn_, kn_a_);
    // Each block is quadratic with Hessian W^T W (for H) or H H^T (for W).
    // A full step of 1 overshoots both factors to zero when these are large,
    // so the first trial is capped at 1 / (||W^T W||_F + ||H H^T||_F).
    gemm_tn(w, w, kk_a_);
    double lipschitz = std::sqrt(squared_norm(kk_a_));
    gemm_nt(h, h, kk_a_);
    lipschitz += std::sqrt(squared_norm(kk_a_));
    double step = lipschitz > 0.0 ? std::min(ls.initial_step, 1.0 / lipschitz) : ls.initial_step;
    for (int k = 0; k <= ls.max_backtracks; ++k, step *= ls.shrink) {
      project(w, mk_a_, step, w_trial_);
      project(h, kn_a_, step, h_trial_);
      double predicted = 0.0;
      for (std::size_t t = 0; t < w.size(); ++t) predicted += mk_a_.data()[t] * (w_trial_.data()[t] - w.data()[t]);
      for (std::size_t t = 0; t < h.size(); ++t) predicted += kn_a_.data()[t] * (h_trial_.data()[t] - h.data()[t]);
      gemm_nn(w_trial_, h_trial_, mn_);
      const double f1 = 0.5 * squared_distance(mn_, a);
      if (f1 - f0 <= ls.sufficient_decrease * predicted) {
        std::swap(w, w_trial_);
        std::swap(h, h_trial_);
        return;
      }
    }
  }

  double gradient(const DenseMatrix& a, const DenseMatrix& w, const DenseMatrix& h,
                  DenseMatrix& dw, DenseMatrix& dh) {
    const double f = residual(a, w, h);
    gemm_nt(mn_, h, dw);
    gemm_tn(w, mn_, dh);
    return f;
  }

 private:
  static void update_multiplicative(DenseMatrix& x, const DenseMatrix& num, const DenseMatrix& den) {
    double* xp = x.data();
    for (std::size_t t = 0; t < x.size(); ++t) xp[t] *= num.data()[t] / (den.data()[t] + kMuGuard);
  }

  static void project(const DenseMatrix& x, const DenseMatrix& g, double step, DenseMatrix& out) {
    for (std::size_t t = 0; t < x.size(); ++t) {
      out.data()[t] = std::max(0.0, x.data()[t] - step * g.data()[t]);
    }
  }

  DenseMatrix kn_a_, kn_b_, kk_a_, kk_b_, mk_a_, mk_b_, km_, mn_, w_trial_, h_trial_;
};

void check_shapes(const DenseMatrix& a, const FactorPair& f) {
  if (f.W.rows() != a.rows() || f.H.cols() != a.cols() || f.W.cols() != f.H.rows()) {
    throw DimensionError("factor shapes do not match the target matrix");
  }
}

Workspace workspace_for(const DenseMatrix& a, const FactorPair& f) {
  check_shapes(a, f);
  return Workspace(a.rows(), f.rank(), a.cols());
}

}  // namespace

std::string_view to_string(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::MultiplicativeUpdate: return "mu";
    case AlgorithmId::ALS: return "als";
    case AlgorithmId::ProjectedGradient: return "pgd";
  }
  return "?";
}

std::optional<AlgorithmId> parse_algorithm(std::string_view name) {
  if (name == "mu") return AlgorithmId::MultiplicativeUpdate;
  if (name == "als") return AlgorithmId::ALS;
  if (name == "pgd") return AlgorithmId::ProjectedGradient;
  return std::nullopt;
}

std::size_t default_iterations(AlgorithmId id) {
  return id == AlgorithmId::ProjectedGradient ? 10'000 : 1'000'000;
}

FactorPair init_factors(std::uint64_t seed, std::size_t m, std::size_t k, std::size_t n) {
  if (m == 0 || k == 0 || n == 0) throw std::invalid_argument("init_factors: dimensions must be >= 1");
  std::mt19937_64 engine(seed);
  // Top 53 bits plus one, scaled by 2^-53: a value in (0, 1].
  auto draw = [&engine] { return static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53; };
  FactorPair f{DenseMatrix(m, k), DenseMatrix(k, n)};
  for (double& x : f.W.values()) x = draw();
  for (double& x : f.H.values()) x = draw();
  return f;
}

FactorPair mu_step(const DenseMatrix& a, const FactorPair& f) {
  Workspace ws = workspace_for(a, f);
  FactorPair out = f;
  ws.mu(a, out.W, out.H);
  return out;
}

FactorPair als_step(const DenseMatrix& a, const FactorPair& f) {
  Workspace ws = workspace_for(a, f);
  FactorPair out = f;
  ws.als(a, out.W, out.H);
  return out;
}

double objective(const DenseMatrix& a, const FactorPair& f) {
  check_shapes(a, f);
  const double d = frobenius_distance(a, f.product());
  return 0.5 * d * d;
}

FactorPair objective_gradient(const DenseMatrix& a, const FactorPair& f) {
  Workspace ws = workspace_for(a, f);
  FactorPair g{DenseMatrix(f.W.rows(), f.W.cols()), DenseMatrix(f.H.rows(), f.H.cols())};
  ws.gradient(a, f.W, f.H, g.W, g.H);
  return g;
}

FactorPair pgd_step(const DenseMatrix& a, const FactorPair& f, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("pgd_step: step must be positive");
  Workspace ws = workspace_for(a, f);
  FactorPair out = f;
  ws.pgd_fixed(a, out.W, out.H, step);
  return out;
}

FactorPair pgd_search_step(const DenseMatrix& a, const FactorPair& f, const LineSearch& ls) {
  Workspace ws = workspace_for(a, f);
  FactorPair out = f;
  ws.pgd_search(a, out.W, out.H, ls);
  return out;
}

FactorPair run_nmf(const DenseMatrix& a, const RunConfig& cfg) {
  if (cfg.rank == 0 || cfg.rank > std::min(a.rows(), a.cols())) {
    throw std::invalid_argument("run_nmf: rank " + std::to_string(cfg.rank) +
                                " outside [1, min(m, n)]");
  }
  FactorPair f = init_factors(cfg.seed, a.rows(), cfg.rank, a.cols());
  Workspace ws(a.rows(), cfg.rank, a.cols());
  const LineSearch ls;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    switch (cfg.algorithm) {
      case AlgorithmId::MultiplicativeUpdate: ws.mu(a, f.W, f.H); break;
      case AlgorithmId::ALS: ws.als(a, f.W, f.H); break;
      case AlgorithmId::ProjectedGradient: ws.pgd_search(a, f.W, f.H, ls); break;
    }
    assert(f.W.is_nonnegative() && f.H.is_nonnegative());
  }
  return f;
}

}  // namespace nmftc
