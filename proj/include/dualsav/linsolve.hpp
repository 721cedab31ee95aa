#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "dualsav/curve.hpp"
#include "dualsav/error.hpp"

namespace dualsav {

/// Cholesky factorization, reusable across several right-hand sides. Matrices
/// with at most a few nonzeros per row (the periodic band matrices of the L^2
/// path) are factored by a sparse simplicial Cholesky, everything else densely.
class SpdFactorization {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  explicit SpdFactorization(const Matrix& m) {
    const Eigen::Index n = m.rows();
    const Eigen::Index nnz = (m.array() != 0.0).count();
    if (n > 16 && nnz <= kSparseRowBudget * n) {
      Sparse s = m.sparseView();
      s.makeCompressed();
      sparse_ = std::make_unique<Eigen::SimplicialLLT<Sparse>>(s);
      if (sparse_->info() != Eigen::Success)
        throw Error(ErrorKind::NotPositiveDefinite, "sparse Cholesky factorization failed");
    } else {
      dense_ = std::make_unique<Eigen::LLT<Matrix>>(m);
      if (dense_->info() != Eigen::Success)
        throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
    }
  }

  Vector solve(const Vector& b) const { return sparse_ ? Vector(sparse_->solve(b)) : Vector(dense_->solve(b)); }
  Matrix solve(const Matrix& b) const { return sparse_ ? Matrix(sparse_->solve(b)) : Matrix(dense_->solve(b)); }

  bool is_sparse() const noexcept { return sparse_ != nullptr; }

 private:
  static constexpr Eigen::Index kSparseRowBudget = 8;
  std::unique_ptr<Eigen::LLT<Matrix>> dense_;
  std::unique_ptr<Eigen::SimplicialLLT<Sparse>> sparse_;
};

inline Vector solve_spd(const Matrix& m, const Vector& b) { return SpdFactorization(m).solve(b); }

/// Lumped-mass zero-mean subspace {u : m^T u = 0} and the coefficient of the
/// rank-one stiffness completion K + c m m^T.
struct ZeroMeanContext {
  Vector mass;
  double completion = 0.0;

  explicit ZeroMeanContext(Vector m) : mass(std::move(m)) {
    const double total = mass.sum();
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidConfig, "lumped masses must have positive sum");
    completion = 1.0 / total;
  }
  ZeroMeanContext(Vector m, double c) : ZeroMeanContext(std::move(m)) {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidConfig, "completion coefficient must be positive");
    completion = c;
  }
};

/// F - (1^T F / 1^T m) m, so that the result annihilates constants.
inline Vector dual_zero_mean_project(const Vector& f, const ZeroMeanContext& ctx) {
  return f - (f.sum() / ctx.mass.sum()) * ctx.mass;
}

inline Matrix completed_stiffness(const Matrix& k, const ZeroMeanContext& ctx) {
  return k + ctx.completion * ctx.mass * ctx.mass.transpose();
}

/// Dense M_L (K + c m m^T)^{-1} M_L. On the zero-mean subspace it coincides with
/// M_L K^+ M_L.
inline Matrix hminus1_metric(const Matrix& k, const ZeroMeanContext& ctx) {
  const SpdFactorization completed(completed_stiffness(k, ctx));
  Matrix z = completed.solve(Matrix(ctx.mass.asDiagonal()));
  Matrix a = ctx.mass.asDiagonal() * z;
  return 0.5 * (a + a.transpose());
}

/// Solves the bordered system [[M, m], [m^T, 0]] [V; mu] = [Pi* F; 0] through the
/// Schur complement of an SPD M. Returns V with m^T V = 0.
class ZeroMeanResponseSolver {
 public:
  ZeroMeanResponseSolver(const Matrix& stabilized_metric, ZeroMeanContext ctx)
      : ctx_(std::move(ctx)), factor_(check_factor(stabilized_metric)) {
    minv_m_ = factor_.solve(ctx_.mass);
    schur_ = ctx_.mass.dot(minv_m_);
    if (!(schur_ > 0.0) || !std::isfinite(schur_))
      throw Error(ErrorKind::SingularBorderedSystem, "m^T M^{-1} m is not positive");
  }

  Vector solve(const Vector& f) const {
    const Vector rhs = dual_zero_mean_project(f, ctx_);
    Vector v = factor_.solve(rhs);
    const double mu = ctx_.mass.dot(v) / schur_;
    v -= mu * minv_m_;
    return v;
  }

  const ZeroMeanContext& context() const noexcept { return ctx_; }

 private:
  static SpdFactorization check_factor(const Matrix& m) {
    try {
      return SpdFactorization(m);
    } catch (const Error&) {
      throw Error(ErrorKind::SingularBorderedSystem, "stabilized H^-1 metric is not positive definite");
    }
  }

  ZeroMeanContext ctx_;
  SpdFactorization factor_;
  Vector minv_m_;
  double schur_ = 0.0;
};

/// Solves (M_L K~^{-1} M_L + dt D) V = Pi* F on the zero-mean subspace.
inline Vector solve_zero_mean_response(const Matrix& k, const Matrix& stabilizer, double dt, const Vector& f,
                                       const ZeroMeanContext& ctx) {
  const Matrix m = hminus1_metric(k, ctx) + dt * stabilizer;
  return ZeroMeanResponseSolver(m, ctx).solve(f);
}

}  // namespace dualsav
