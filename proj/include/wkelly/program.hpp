#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "wkelly/errors.hpp"
#include "wkelly/extended_real.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

struct VariableLayout {
  Eigen::Index n_w = 0;       // weights
  Eigen::Index v_rows = 0;    // one dual vector per sample
  Eigen::Index v_cols = 0;
  Eigen::Index n_lambda = 1;  // scalar multiplier
  Eigen::Index total() const { return n_w + v_rows * v_cols + n_lambda; }
};

enum class ObjectiveTerm { LinearV, Entropy, PerspectivePower, RadiusPenalty };

struct ProgramConstraints {
  bool w_on_simplex = true;
  bool v_nonneg = true;
  bool v_rows_on_simplex = true;  // each v^(j) sums to 1 (domain of the payoff conjugate)
  bool lambda_nonneg = true;
  Eigen::Index norm_cap_count = 0;  // p=1: lambda >= ||v^(j)||_* per sample
};

/// Feasibility residuals of a candidate (w, v, lambda).
struct ProgramResiduals {
  double w_sum = 0.0;            // |sum w - 1|
  double w_min = 0.0;            // min_i w_i
  double v_min = 0.0;            // min_{j,i} v_ji
  double v_row_sum_max = 0.0;    // max_j |sum_i v_ji - 1|
  double lambda = 0.0;
  double norm_cap_violation = 0.0;  // max_j (||v_j||_* - lambda), p=1 only

  bool feasible(double tol) const {
    return w_sum <= tol && w_min >= -tol && v_min >= -tol && v_row_sum_max <= tol &&
           lambda >= -tol && norm_cap_violation <= tol;
  }
};

/// Self-contained description of the robust convex program in variables
/// (w, v^(1..N), lambda):
///
///   max (1/N) sum_j [ rhat_j.v_j - (p-1) p^{-p/(p-1)} lambda ||v_j/lambda||_*^{p/(p-1)}
///                     + sum_i v_ji ln(w_i / v_ji) ] - lambda eps^p
///
/// over w on the simplex, each v_j on the simplex, lambda >= 0. For p = 1 the
/// power term disappears and lambda >= ||v_j||_* is enforced per sample.
///
/// Note the per-sample simplex constraint on v_j: the conjugate of the payoff
/// ln(sum_i w_i e^{r_i}) is finite only for distributions v, so sum_i v_ji = 1
/// is part of the program. Dropping it changes the optimal value (the
/// lambda -> infinity limit would no longer reproduce the nominal objective).
class ProgramSpec {
 public:
  ProgramSpec(ReturnsMatrix samples, BallSpec ball)
      : samples_(std::move(samples)), ball_(ball) {}

  const ReturnsMatrix& samples() const { return samples_; }
  const BallSpec& ball() const { return ball_; }

  VariableLayout layout() const {
    return VariableLayout{samples_.n_assets(), samples_.n_samples(), samples_.n_assets(), 1};
  }

  std::vector<ObjectiveTerm> objective_terms() const {
    if (ball_.p == 1.0) {
      return {ObjectiveTerm::LinearV, ObjectiveTerm::Entropy, ObjectiveTerm::RadiusPenalty};
    }
    return {ObjectiveTerm::LinearV, ObjectiveTerm::Entropy,
            ObjectiveTerm::PerspectivePower, ObjectiveTerm::RadiusPenalty};
  }

  ProgramConstraints constraints() const {
    ProgramConstraints c;
    c.norm_cap_count = ball_.p == 1.0 ? samples_.n_samples() : 0;
    return c;
  }

  /// Coefficient (p-1) p^{-p/(p-1)} of the perspective power term; 1/4 at p=2.
  double perspective_coefficient() const {
    const double q = ball_.conjugate_exponent();
    return (ball_.p - 1.0) * std::pow(ball_.p, -q);
  }

  /// Perspective power term (p-1) p^{-q} lambda ||v/lambda||_*^q for one
  /// sample. At lambda = 0 the term is 0 if v = 0 and +inf otherwise.
  ExtendedReal perspective_term(const Eigen::VectorXd& v, double lambda) const {
    if (ball_.p == 1.0) {
      throw UnsupportedOrder("perspective_term: not part of the p = 1 program");
    }
    const double nv = norm_value(v, ball_.dual());
    if (lambda == 0.0) {
      return nv == 0.0 ? ExtendedReal(0.0) : ExtendedReal::pos_infinity();
    }
    const double q = ball_.conjugate_exponent();
    return perspective_coefficient() * std::pow(lambda, 1.0 - q) * std::pow(nv, q);
  }

  /// Objective value at a candidate point, applying the entropy convention
  /// (0 ln 0 = 0; v_ji > 0 with w_i = 0 gives -inf) and the perspective
  /// convention at lambda = 0. Constraint violations other than those domain
  /// conventions are NOT folded in; see residuals().
  ExtendedReal objective(const SimplexWeights& w, const Eigen::MatrixXd& v,
                         double lambda) const {
    const Eigen::MatrixXd& r = samples_.values();
    if (v.rows() != r.rows() || v.cols() != r.cols() || w.size() != r.cols()) {
      throw DimensionMismatch("ProgramSpec::objective: candidate dimensions mismatch");
    }
    if (lambda < 0.0) throw ValidationError("ProgramSpec::objective: lambda must be >= 0");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
      acc += r.row(j).dot(v.row(j));
      for (Eigen::Index i = 0; i < r.cols(); ++i) {
        const double vji = v(j, i);
        if (vji < -1e-12) {
          throw ValidationError("ProgramSpec::objective: negative v entry");
        }
        if (vji <= 0.0) continue;
        if (w[i] <= 0.0) return ExtendedReal::neg_infinity();
        acc += vji * std::log(w[i] / vji);
      }
      if (ball_.p > 1.0) {
        const ExtendedReal pt = perspective_term(v.row(j).transpose(), lambda);
        if (pt.is_pos_infinity()) return ExtendedReal::neg_infinity();
        acc -= pt.value();
      }
    }
    return acc / static_cast<double>(r.rows()) - lambda * std::pow(ball_.epsilon, ball_.p);
  }

  ProgramResiduals residuals(const SimplexWeights& w, const Eigen::MatrixXd& v,
                             double lambda) const {
    ProgramResiduals res;
    res.w_sum = std::abs(w.vec().sum() - 1.0);
    res.w_min = w.vec().minCoeff();
    res.v_min = v.minCoeff();
    res.lambda = lambda;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      res.v_row_sum_max = std::max(res.v_row_sum_max, std::abs(v.row(j).sum() - 1.0));
      if (ball_.p == 1.0) {
        res.norm_cap_violation = std::max(
            res.norm_cap_violation, norm_value(v.row(j).transpose(), ball_.dual()) - lambda);
      }
    }
    return res;
  }

 private:
  ReturnsMatrix samples_;
  BallSpec ball_;
};

/// Builds the program description for given samples and ball.
inline ProgramSpec build_program(const ReturnsMatrix& samples, const BallSpec& ball) {
  if (samples.kind() != ReturnKind::Log) {
    throw ValidationError("build_program: samples must be log returns");
  }
  if (!(ball.p >= 1.0)) {
    throw UnsupportedOrder("build_program: Wasserstein order p must be >= 1");
  }
  ball.validate();
  return ProgramSpec(samples, ball);
}

}  // namespace wkelly
