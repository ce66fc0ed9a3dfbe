#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wkelly/detail/simplex.hpp"
#include "wkelly/errors.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

namespace detail {

inline void require_log_kind(const ReturnsMatrix& samples, const char* who) {
  if (samples.kind() != ReturnKind::Log) {
    throw ValidationError(std::string(who) + ": samples must be log returns");
  }
}

inline void require_dims(const SimplexWeights& w, const ReturnsMatrix& samples,
                         const char* who) {
  if (w.size() != samples.n_assets()) {
    throw DimensionMismatch(std::string(who) + ": weight/asset dimension mismatch");
  }
}

}  // namespace detail

/// Empirical expected log growth: (1/N) sum_j ln(sum_i exp(r_ji) w_i).
inline double kelly_objective(const SimplexWeights& w, const ReturnsMatrix& samples) {
  detail::require_log_kind(samples, "kelly_objective");
  detail::require_dims(w, samples, "kelly_objective");
  const Eigen::MatrixXd& r = samples.values();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    acc += detail::log_sum_exp_weighted(w.vec(), r.row(j).transpose());
  }
  return acc / static_cast<double>(r.rows());
}

/// Analytic gradient: d/dw_i = (1/N) sum_j exp(r_ji) / (sum_k exp(r_jk) w_k).
inline Eigen::VectorXd kelly_gradient(const SimplexWeights& w, const ReturnsMatrix& samples) {
  detail::require_log_kind(samples, "kelly_gradient");
  detail::require_dims(w, samples, "kelly_gradient");
  const Eigen::MatrixXd& r = samples.values();
  const Eigen::Index n = r.cols(), N = r.rows();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double shift = r.row(j).maxCoeff();
    Eigen::VectorXd x = (r.row(j).transpose().array() - shift).exp();
    grad += x / x.dot(w.vec());
  }
  return grad / static_cast<double>(N);
}

/// Solves the empirical Kelly program max_{w in simplex} kelly_objective(w)
/// with a log-barrier Newton homotopy. Optimality is certified by the
/// first-order simplex condition max_i grad_i - grad.w <= tol_rel*(1+|obj|).
inline KellySolution solve_kelly(const ReturnsMatrix& samples,
                                 const SolverSettings& settings = {}) {
  detail::require_log_kind(samples, "solve_kelly");
  settings.validate();
  const Eigen::MatrixXd& r = samples.values();
  const Eigen::Index n = r.cols(), N = r.rows();

  if (n == 1) {
    SimplexWeights w = SimplexWeights::uniform(1);
    return KellySolution{w, r.col(0).mean(), SolveStatus::Optimal};
  }

  // Row-shifted payoffs: x_jk = exp(r_jk - max_k r_jk). Gradients and the
  // first-order gap are invariant to the shift.
  Eigen::MatrixXd X(N, n);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double shift = r.row(j).maxCoeff();
    X.row(j) = (r.row(j).array() - shift).exp();
  }
  const double invN = 1.0 / static_cast<double>(N);

  auto grad_at = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    Eigen::VectorXd y = X * w;
    return invN * (X.transpose() * y.cwiseInverse());
  };
  auto barrier_value = [&](const Eigen::VectorXd& w, double mu) -> double {
    Eigen::VectorXd y = X * w;
    if ((y.array() <= 0.0).any() || (w.array() <= 0.0).any()) {
      return -std::numeric_limits<double>::infinity();
    }
    return invN * y.array().log().sum() + mu * w.array().log().sum();
  };

  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  int iters = 0;
  bool budget_left = true;

  Eigen::MatrixXd kkt(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);

  for (double mu = 1e-2; mu >= 0.5e-12 && budget_left; mu *= 1e-2) {
    for (int stage_it = 0; stage_it < 60; ++stage_it) {
      if (++iters > settings.max_iter) { budget_left = false; break; }
      Eigen::VectorXd y = X * w;
      Eigen::VectorXd invy = y.cwiseInverse();
      Eigen::VectorXd g = invN * (X.transpose() * invy) + mu * w.cwiseInverse();
      Eigen::MatrixXd H = -invN * (X.transpose() * invy.array().square().matrix().asDiagonal() * X);
      H.diagonal() -= mu * w.array().square().inverse().matrix();

      kkt.setZero();
      kkt.topLeftCorner(n, n) = H;
      kkt.topRightCorner(n, 1).setOnes();
      kkt.bottomLeftCorner(1, n).setOnes();
      rhs.head(n) = -g;
      rhs[n] = 0.0;
      Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
      Eigen::VectorXd dw = sol.head(n);

      const double decrement = -dw.dot(H * dw);
      if (!(decrement > 1e-24)) break;

      double alpha = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (dw[i] < 0.0) alpha = std::min(alpha, -0.995 * w[i] / dw[i]);
      }
      const double f0 = barrier_value(w, mu);
      const double slope = g.dot(dw);
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd wn = w + alpha * dw;
        if (barrier_value(wn, mu) >= f0 + 1e-4 * alpha * slope) {
          w = wn;
          w /= w.sum();
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      if (decrement < 1e-18 * (1.0 + mu)) break;
    }
  }

  SimplexWeights weights = make_weights(w);
  const double objective = kelly_objective(weights, samples);
  const Eigen::VectorXd g = grad_at(w);
  const double gap = g.maxCoeff() - g.dot(w);
  const bool optimal = gap <= settings.tol_rel * (1.0 + std::abs(objective));
  return KellySolution{weights, objective,
                       optimal ? SolveStatus::Optimal : SolveStatus::MaxIter};
}

}  // namespace wkelly
