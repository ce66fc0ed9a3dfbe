#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "wkelly/detail/scalar_opt.hpp"
#include "wkelly/detail/simplex.hpp"
#include "wkelly/errors.hpp"
#include "wkelly/inner_oracle.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/program.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

namespace detail {

/// Root of u + beta*e^u = c (beta >= 0), i.e. the log-domain stationarity
/// equation of the per-sample dual maximization. Increasing and convex in u,
/// so Newton converges monotonically once past the root.
inline double solve_log_stationarity(double c, double beta, double tol = 1e-14) {
  if (beta <= 0.0) return c;
  double u = std::min(c, 0.0);
  for (int it = 0; it < 80; ++it) {
    const double e = std::exp(u);
    const double h = u + beta * e - c;
    if (std::abs(h) <= tol * (1.0 + std::abs(c))) break;
    u -= h / (1.0 + beta * e);
  }
  return u;
}

/// Per-sample dual vector for the quadratic power term and euclidean dual
/// norm: max over v in the simplex of sum_i v_i (a_i - ln v_i) - beta2*||v||^2
/// with beta2 = 1/(4 lambda). KKT: ln v_i + 2*beta2*v_i = a_i - 1 - mu.
/// `mu` is carried as a warm start across sweeps.
inline Eigen::VectorXd dual_vector_l2(const Eigen::VectorXd& a, double beta2, double& mu) {
  const Eigen::Index n = a.size();
  const double b2 = 2.0 * beta2;  // coefficient inside the stationarity equation
  Eigen::VectorXd v(n);
  auto fill_v = [&](double m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = std::exp(solve_log_stationarity(a[i] - 1.0 - m, b2));
      s += v[i];
    }
    return s;
  };
  // Bracket the simplex multiplier; sum is strictly decreasing in mu.
  double lo = mu, hi = mu;
  double s = fill_v(mu);
  if (s >= 1.0) {
    while (s >= 1.0) { hi += 4.0; s = fill_v(hi); }
    lo = hi - 4.0;
  } else {
    while (s < 1.0) { lo -= 4.0; s = fill_v(lo); }
    hi = lo + 4.0;
  }
  double m = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    s = fill_v(m);
    const double g = s - 1.0;
    if (std::abs(g) <= 1e-14) break;
    if (g > 0.0) lo = m; else hi = m;
    double deriv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) deriv += v[i] / (1.0 + b2 * v[i]);
    double mn = m + g / deriv;
    if (!(mn > lo && mn < hi)) mn = 0.5 * (lo + hi);
    m = mn;
  }
  mu = m;
  fill_v(m);
  return v;
}

/// Same maximization with a per-coordinate cap: v_i = min(cap, e^{a_i-1-mu}).
inline Eigen::VectorXd dual_vector_capped(const Eigen::VectorXd& a, double cap, double& mu) {
  const Eigen::Index n = a.size();
  Eigen::VectorXd v(n);
  double deriv = 0.0;  // d(sum v)/d(mu), contributed by uncapped coordinates
  auto fill_v = [&](double m) {
    double s = 0.0;
    deriv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::exp(std::min(a[i] - 1.0 - m, 700.0));
      if (e < cap) {
        v[i] = e;
        deriv -= e;
      } else {
        v[i] = cap;
      }
      s += v[i];
    }
    return s;
  };
  double lo = mu, hi = mu;
  if (fill_v(mu) >= 1.0) {
    while (fill_v(hi) >= 1.0 && hi < 1500.0) hi += 8.0;
    lo = hi - 8.0;
  } else {
    while (fill_v(lo) < 1.0 && lo > -1500.0) lo -= 8.0;
    hi = lo + 8.0;
  }
  double m = 0.5 * (lo + hi);
  for (int it = 0; it < 90; ++it) {
    const double g = fill_v(m) - 1.0;
    if (std::abs(g) <= 1e-14) break;
    if (g > 0.0) lo = m; else hi = m;
    double mn = deriv < 0.0 ? m - g / deriv : 0.5 * (lo + hi);
    if (!(mn > lo && mn < hi)) mn = 0.5 * (lo + hi);
    m = mn;
  }
  mu = m;
  fill_v(m);
  return v;
}

/// Norm-capped dual vector for the euclidean dual norm (p = 1):
/// max over v in the simplex with ||v||_2 <= cap. KKT adds 2*eta*v_i with
/// eta >= 0 active only on the norm bound. Both multipliers carry over
/// across sweeps, which keeps the nested solve cheap.
inline Eigen::VectorXd dual_vector_l2_norm_capped(const Eigen::VectorXd& a, double cap,
                                                  double& warm_mu, double& warm_eta) {
  Eigen::VectorXd v = dual_vector_l2(a, 0.0, warm_mu);
  if (v.norm() <= cap) {
    warm_eta = 0.0;
    return v;
  }
  double mu = warm_mu;
  auto norm_at = [&](double eta) { return dual_vector_l2(a, eta, mu).norm(); };
  double elo = 0.0, ehi = 1.0;
  if (warm_eta > 0.0) {
    elo = warm_eta / 8.0;
    ehi = warm_eta * 8.0;
    while (norm_at(elo) <= cap && elo > 1e-14) elo /= 8.0;
    if (norm_at(elo) <= cap) elo = 0.0;
  }
  while (norm_at(ehi) > cap && ehi < 1e12) ehi *= 4.0;
  for (int it = 0; it < 60; ++it) {
    const double em = 0.5 * (elo + ehi);
    if (norm_at(em) > cap) elo = em; else ehi = em;
  }
  warm_eta = ehi;
  return dual_vector_l2(a, ehi, mu);
}

/// Entropy value sum_i v_i (a_i - ln v_i) for v > 0 entries.
inline double entropy_payoff(const Eigen::VectorXd& a, const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0) acc += v[i] * (a[i] - std::log(v[i]));
  }
  return acc;
}

struct SweepResult {
  double snorm_q = 0.0;  // (1/N) sum_j ||v_j||_*^q
};

/// Per-sample multipliers carried across sweeps.
struct SweepWarmth {
  std::vector<double> mu;
  std::vector<double> eta;
  explicit SweepWarmth(size_t n) : mu(n, 0.0), eta(n, 0.0) {}
};

/// One pass of per-sample dual solves at fixed (w, lambda), writing rows of V.
/// For p = 2 the power term is ||v||_*^2/(4 lambda); for p = 1 `lambda` acts
/// as the norm cap.
inline SweepResult sweep_dual_vectors(const Eigen::MatrixXd& r, const Eigen::VectorXd& logw,
                                      const BallSpec& ball, double lambda,
                                      Eigen::MatrixXd& V, SweepWarmth& warm) {
  const Eigen::Index N = r.rows(), n = r.cols();
  const Norm dual = ball.dual();
  SweepResult out;
  Eigen::VectorXd a(n);
  for (Eigen::Index j = 0; j < N; ++j) {
    a = logw + r.row(j).transpose();
    Eigen::VectorXd v;
    if (ball.p == 1.0) {
      if (dual == Norm::L1) {
        v = weighted_softmax(Eigen::VectorXd::Ones(n), a);
      } else if (dual == Norm::Linf) {
        v = dual_vector_capped(a, lambda, warm.mu[static_cast<size_t>(j)]);
      } else {
        v = dual_vector_l2_norm_capped(a, lambda, warm.mu[static_cast<size_t>(j)],
                                       warm.eta[static_cast<size_t>(j)]);
      }
    } else {
      const double q = ball.conjugate_exponent();
      const double kappa = (ball.p - 1.0) * std::pow(ball.p, -q) * std::pow(lambda, 1.0 - q);
      if (dual == Norm::L1) {
        v = weighted_softmax(Eigen::VectorXd::Ones(n), a);
      } else if (dual == Norm::L2 && ball.p == 2.0) {
        v = dual_vector_l2(a, kappa, warm.mu[static_cast<size_t>(j)]);
      } else if (dual == Norm::Linf) {
        // reduce over tau = ||v||_inf
        auto val = [&](double tau) {
          double m = warm.mu[static_cast<size_t>(j)];
          Eigen::VectorXd vt = dual_vector_capped(a, tau, m);
          return entropy_payoff(a, vt) - kappa * std::pow(tau, q);
        };
        auto [tau, fv] = golden_max(val, 1.0 / static_cast<double>(n), 1.0, 36);
        (void)fv;
        v = dual_vector_capped(a, tau, warm.mu[static_cast<size_t>(j)]);
      } else {
        throw UnsupportedOrder("solve_wkelly: unsupported (p, norm) combination");
      }
    }
    V.row(j) = v.transpose();
    out.snorm_q += ball.p == 1.0
                       ? 0.0
                       : std::pow(norm_value(v, dual), ball.conjugate_exponent());
  }
  out.snorm_q /= static_cast<double>(N);
  return out;
}

constexpr double kLambdaCap = 1e12;
constexpr double kLambdaFloor = 1e-10;

/// Stationary lambda for p > 1 given the dual vectors: maximizes
/// -(p-1)p^{-q} lambda^{1-q} S - lambda eps^p with S = (1/N) sum ||v_j||_*^q.
inline double lambda_update(double snorm_q, const BallSpec& ball) {
  if (ball.epsilon <= 0.0) return kLambdaCap;
  const double q = ball.conjugate_exponent();
  const double lam = std::pow(snorm_q, 1.0 / q) /
                     (ball.p * std::pow(ball.epsilon, ball.p - 1.0));
  return std::fmin(std::fmax(lam, kLambdaFloor), kLambdaCap);
}

}  // namespace detail

/// Worst-case expected log growth at fixed weights, evaluated on the
/// conjugate (dual-vector) route: max over (v, lambda) of the program
/// objective with w held fixed.
inline double robust_value(const SimplexWeights& w, const ReturnsMatrix& samples,
                           const BallSpec& ball, const SolverSettings& settings = {}) {
  const ProgramSpec prog = build_program(samples, ball);
  settings.validate();
  if (w.size() != samples.n_assets()) {
    throw DimensionMismatch("robust_value: weight/asset dimension mismatch");
  }
  const Eigen::MatrixXd& r = samples.values();
  const Eigen::Index N = r.rows(), n = r.cols();
  Eigen::VectorXd logw = w.vec().cwiseMax(settings.floor_w).array().log();
  Eigen::MatrixXd V(N, n);
  detail::SweepWarmth warm(static_cast<size_t>(N));

  if (ball.p > 1.0) {
    if (ball.p != 2.0) throw UnsupportedOrder("robust_value: p must be 1 or 2");
    double lambda = ball.epsilon > 0.0 ? 1.0 / (2.0 * ball.epsilon) : detail::kLambdaCap;
    for (int it = 0; it < 200; ++it) {
      auto sw = detail::sweep_dual_vectors(r, logw, ball, lambda, V, warm);
      const double ln = detail::lambda_update(sw.snorm_q, ball);
      const bool done = std::abs(ln - lambda) <= 1e-13 * (1.0 + lambda);
      lambda = ln;
      if (done) break;
    }
    return prog.objective(w, V, lambda).value();
  }

  // p = 1: 1-D concave maximization over the norm cap.
  const Norm dual = ball.dual();
  double floor_lam = dual == Norm::L1 ? 1.0
                     : dual == Norm::Linf ? 1.0 / static_cast<double>(n)
                                          : 1.0 / std::sqrt(static_cast<double>(n));
  auto value_at = [&](double lam) {
    detail::sweep_dual_vectors(r, logw, ball, lam, V, warm);
    return prog.objective(w, V, lam).value();
  };
  if (ball.epsilon <= 0.0 || floor_lam >= 1.0) return value_at(std::max(1.0, floor_lam));
  auto [lam, val] = detail::golden_max(value_at, floor_lam * (1.0 + 1e-12), 1.0, 90);
  (void)lam;
  return val;
}

/// Solves the Wasserstein-robust program of ProgramSpec by exact block
/// ascent: per-sample dual vectors, a closed-form multiplier update, and the
/// weight update w = mean_j v_j (the entropy block optimum). Optimality is
/// certified by the simplex first-order gap of the robust objective,
/// max_i (vbar_i / w_i) - 1, which bounds the remaining suboptimality.
inline RobustSolution solve_wkelly(const ReturnsMatrix& samples, const BallSpec& ball,
                                   const SolverSettings& settings = {}) {
  const ProgramSpec prog = build_program(samples, ball);
  settings.validate();
  if (ball.p != 1.0 && ball.p != 2.0) {
    throw UnsupportedOrder("solve_wkelly: supported Wasserstein orders are p = 1 and p = 2");
  }
  const Eigen::MatrixXd& r = samples.values();
  const Eigen::Index N = r.rows(), n = r.cols();

  Eigen::MatrixXd V(N, n);
  detail::SweepWarmth warm(static_cast<size_t>(N));

  auto certified_result = [&](Eigen::VectorXd w, double lambda) -> RobustSolution {
    // Inner (v, lambda) fixed point at this w, then the gap certificate.
    Eigen::VectorXd logw = w.cwiseMax(settings.floor_w).array().log();
    for (int it = 0; it < 60; ++it) {
      auto sw = detail::sweep_dual_vectors(r, logw, ball, lambda, V, warm);
      if (ball.p == 1.0) break;  // lambda is fixed by the caller for p = 1
      const double ln = detail::lambda_update(sw.snorm_q, ball);
      const bool done = std::abs(ln - lambda) <= 1e-13 * (1.0 + lambda);
      lambda = ln;
      if (done) break;
    }
    Eigen::VectorXd vbar = V.colwise().mean();
    double gap = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) gap = std::max(gap, vbar[i] / std::max(w[i], settings.floor_w));
    gap -= 1.0;
    SimplexWeights weights = make_weights(w);
    const double objective = prog.objective(weights, V, lambda).value();
    const bool optimal = gap <= settings.tol_rel * (1.0 + std::abs(objective));
    return RobustSolution{weights, lambda, V, objective,
                          optimal ? SolveStatus::Optimal : SolveStatus::MaxIter,
                          std::max(gap, 0.0)};
  };

  // The plain block update w <- mean_j v_j is a multiplicative (mirror) step
  // and converges only linearly, so it is overrelaxed in log space with an
  // adaptive exponent; any objective decrease reverts to the last plain
  // step, which is always an ascent.
  auto run_ascent = [&](double lambda, bool update_lambda, int max_iter,
                        double gap_tol, Eigen::VectorXd w) -> RobustSolution {
    Eigen::VectorXd w_safe = w;
    Eigen::VectorXd logw(n);
    double beta = 1.0;
    double phi_prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
      logw = w.cwiseMax(settings.floor_w).array().log();
      auto sw = detail::sweep_dual_vectors(r, logw, ball, lambda, V, warm);
      if (update_lambda) lambda = detail::lambda_update(sw.snorm_q, ball);
      const double phi = prog.objective(make_weights(w), V, lambda).value_or(
          -std::numeric_limits<double>::infinity());
      if (phi < phi_prev - 1e-15 * (1.0 + std::abs(phi_prev))) {
        w = w_safe;  // overshoot: back to the guaranteed ascent point
        beta = 1.0;
        phi_prev = -std::numeric_limits<double>::infinity();
        continue;
      }
      phi_prev = phi;
      Eigen::VectorXd vbar = V.colwise().mean();
      double gap = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) gap = std::max(gap, vbar[i] / std::max(w[i], settings.floor_w));
      gap -= 1.0;
      if (gap <= 2.0 * gap_tol) {
        RobustSolution cand = certified_result(w, lambda);
        if (cand.status == SolveStatus::Optimal ||
            cand.duality_gap_estimate <= gap_tol * (1.0 + std::abs(cand.objective))) {
          return cand;
        }
        lambda = cand.lambda;
      }
      w_safe = vbar;
      if (beta > 1.0) {
        Eigen::VectorXd lw = logw + beta * (vbar.array().log().matrix() - logw);
        lw.array() -= lw.maxCoeff();
        w = lw.array().exp();
        w /= w.sum();
      } else {
        w = vbar;
      }
      beta = std::min(beta * 1.7, 256.0);
    }
    return certified_result(w, lambda);
  };
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  if (ball.p == 2.0) {
    const double lambda0 =
        ball.epsilon > 0.0
            ? std::fmin(std::fmax(1.0 / (2.0 * ball.epsilon), detail::kLambdaFloor), detail::kLambdaCap)
            : detail::kLambdaCap;
    return run_ascent(lambda0, true, settings.max_iter, settings.tol_rel, uniform);
  }

  // p = 1: concave in the cap; optimize it by golden section. The dual norm
  // of any simplex point is at most 1, so caps beyond 1 are slack.
  const Norm dual = ball.dual();
  const double floor_lam = dual == Norm::L1 ? 1.0
                           : dual == Norm::Linf ? 1.0 / static_cast<double>(n)
                                                : 1.0 / std::sqrt(static_cast<double>(n));
  if (ball.epsilon <= 0.0 || floor_lam >= 1.0) {
    return run_ascent(std::max(1.0, floor_lam), false, settings.max_iter, settings.tol_rel,
                      uniform);
  }
  const int eval_iters = std::min(settings.max_iter, 4000);
  Eigen::VectorXd w_carry = uniform;
  auto omega = [&](double lam) {
    // Warm-started inner ascent over (w, v) at this cap; evaluation accuracy
    // only needs to support the 1-D search, the final solve re-certifies.
    RobustSolution sol = run_ascent(lam, false, eval_iters, 1e-6, w_carry);
    w_carry = sol.weights.vec();
    return sol.objective;
  };
  auto [lam_star, best] = detail::golden_max(omega, floor_lam * (1.0 + 1e-10), 1.0, 42);
  (void)best;
  return run_ascent(lam_star, false, settings.max_iter, settings.tol_rel, w_carry);
}

/// Cross-checks a robust solution: feasibility residuals, the primal-dual
/// consistency gap against the independent worst-case oracle, and per-sample
/// Fenchel identity residuals at the reported multiplier.
struct CertificateReport {
  bool status_optimal = false;
  ProgramResiduals residuals;
  bool feasible = false;
  double oracle_objective = 0.0;
  double consistency_gap = 0.0;       // |sol.objective - oracle robust objective|
  bool fenchel_evaluated = false;
  double fenchel_residual_max = 0.0;
  std::vector<double> fenchel_residuals;
};

inline CertificateReport certify_solution(const RobustSolution& sol,
                                          const ReturnsMatrix& samples, const BallSpec& ball,
                                          const InnerEvalConfig& cfg = {},
                                          double feas_tol = 1e-8) {
  const ProgramSpec prog = build_program(samples, ball);
  CertificateReport rep;
  rep.status_optimal = sol.status == SolveStatus::Optimal;
  rep.residuals = prog.residuals(sol.weights, sol.v, sol.lambda);
  rep.feasible = rep.residuals.feasible(feas_tol);
  rep.oracle_objective = robust_objective(sol.weights, samples, ball, cfg);
  rep.consistency_gap = std::abs(sol.objective - rep.oracle_objective);
  if (sol.lambda > 0.0) {
    rep.fenchel_evaluated = true;
    const Eigen::MatrixXd& r = samples.values();
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
      const ExtendedReal a = inner_min_value(sol.weights, sol.lambda, r.row(j).transpose(), ball, cfg);
      const ExtendedReal b = conjugate_inner_value(sol.weights, sol.lambda, r.row(j).transpose(), ball, cfg);
      double res;
      if (a.is_finite() && b.is_finite()) {
        res = std::abs(a.value() - b.value());
      } else if (a == b) {
        res = 0.0;
      } else {
        res = std::numeric_limits<double>::infinity();
      }
      rep.fenchel_residuals.push_back(res);
      rep.fenchel_residual_max = std::max(rep.fenchel_residual_max, res);
    }
  }
  return rep;
}

}  // namespace wkelly
