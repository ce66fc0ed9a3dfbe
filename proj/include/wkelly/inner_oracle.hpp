#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wkelly/detail/scalar_opt.hpp"
#include "wkelly/detail/simplex.hpp"
#include "wkelly/errors.hpp"
#include "wkelly/extended_real.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

struct InnerEvalConfig {
  double r_grid_halfwidth = 2.0;                  // search box half-width around rhat
  double coord_tol = 1e-9;                        // inner minimizer tolerance
  std::pair<double, double> lambda_bracket{1e-6, 1e6};

  void validate() const {
    if (!(r_grid_halfwidth > 0.0)) {
      throw ValidationError("InnerEvalConfig: r_grid_halfwidth must be positive");
    }
    if (!(coord_tol > 0.0)) {
      throw ValidationError("InnerEvalConfig: coord_tol must be positive");
    }
    if (!(lambda_bracket.first > 0.0) || !(lambda_bracket.second > lambda_bracket.first)) {
      throw ValidationError("InnerEvalConfig: lambda_bracket must be ordered and positive");
    }
  }
};

namespace detail {

/// Indices i with w_i > 0. The payoff ln(sum w_i e^{r_i}) only depends on r
/// over the support of w; off-support coordinates of the inner minimizer sit
/// at rhat.
inline std::vector<Eigen::Index> support_of(const Eigen::VectorXd& w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

struct QuadMinResult {
  double value = 0.0;  // min of f(rhat + d) + mu*||d||^2
  bool converged = false;
};

/// Newton minimization of f(rhat+d) + mu*||d||_2^2 over d, restricted to the
/// support of w; f(r) = ln(sum_i w_i e^{r_i}). Since f is exactly linear
/// along the all-ones direction, that component has the closed-form optimum
/// c* = -1/(2 mu m) contributing -1/(4 mu m); Newton runs on the complement
/// subspace {sum d_i = 0}, where travel is bounded by the spread of
/// ln(w) + rhat.
inline QuadMinResult quad_penalized_min(const Eigen::VectorXd& w_supp,
                                        const Eigen::VectorXd& rhat_supp,
                                        double mu, double tol, int max_iter = 200) {
  const Eigen::Index m = w_supp.size();
  const Eigen::VectorXd ell = w_supp.array().log() + rhat_supp.array();
  const double ones_part = -1.0 / (4.0 * mu * static_cast<double>(m));

  QuadMinResult res;
  if (m == 1) {
    res.value = ell[0] + ones_part;
    res.converged = true;
    return res;
  }

  auto value_at = [&](const Eigen::VectorXd& dd) {
    Eigen::VectorXd t = ell + dd;
    const double shift = t.maxCoeff();
    return shift + std::log((t.array() - shift).exp().sum()) + mu * dd.squaredNorm();
  };

  // Two candidate starts: no move, and the centering move that equalizes
  // the effective exponents (the small-mu limit of the optimizer).
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd centered = Eigen::VectorXd::Constant(m, ell.mean()) - ell;
  double fd = value_at(d);
  if (const double fc = value_at(centered); fc < fd) {
    d = centered;
    fd = fc;
  }

  const double gtol = tol * std::max(1.0, mu);
  Eigen::MatrixXd kkt(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd t = ell + d;
    const double shift = t.maxCoeff();
    Eigen::VectorXd s = (t.array() - shift).exp();
    s /= s.sum();
    Eigen::VectorXd g = s + 2.0 * mu * d;
    Eigen::VectorXd pg = g - Eigen::VectorXd::Constant(m, g.mean());  // projected gradient
    if (pg.lpNorm<Eigen::Infinity>() <= gtol) {
      res.converged = true;
      break;
    }
    kkt.setZero();
    kkt.topLeftCorner(m, m) = -s * s.transpose();
    kkt.topLeftCorner(m, m).diagonal() += s;
    kkt.topLeftCorner(m, m).diagonal().array() += 2.0 * mu;
    kkt.topRightCorner(m, 1).setOnes();
    kkt.bottomLeftCorner(1, m).setOnes();
    rhs.head(m) = -g;
    rhs[m] = 0.0;
    Eigen::VectorXd step = kkt.partialPivLu().solve(rhs).head(m);
    const double dec2 = -g.dot(step);  // bounds the remaining value suboptimality
    if (dec2 <= 2e-13 * (1.0 + std::abs(fd))) {
      res.converged = true;
      break;
    }
    double alpha = 1.0;
    const double slope = g.dot(step);
    bool ok = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd dn = d + alpha * step;
      const double fn = value_at(dn);
      if (fn <= fd + 1e-4 * alpha * slope) {
        d = dn;
        fd = fn;
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) {
      // No descent at fp resolution; accept when the model gap is small.
      res.converged = dec2 <= 1e-9 * (1.0 + std::abs(fd));
      break;
    }
  }
  res.value = fd + ones_part;
  return res;
}

/// Exact min of f(rhat + d) over the ground-norm ball ||d|| <= tau for the
/// L1 and Linf ground norms. f is increasing per coordinate, so the budget
/// is spent moving exponents down: uniformly for Linf, by water-filling the
/// largest exponents down to a common level for L1.
inline double ball_constrained_min(const Eigen::VectorXd& w_supp,
                                   const Eigen::VectorXd& rhat_supp, double tau,
                                   Norm ground) {
  const Eigen::Index m = w_supp.size();
  Eigen::VectorXd ell = w_supp.array().log() + rhat_supp.array();
  auto lse = [](const Eigen::VectorXd& t) {
    const double shift = t.maxCoeff();
    return shift + std::log((t.array() - shift).exp().sum());
  };
  if (ground == Norm::Linf) return lse(ell) - tau;
  if (ground != Norm::L1) {
    throw ValidationError("ball_constrained_min: only L1/Linf ground norms");
  }
  std::vector<double> sorted(ell.data(), ell.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // Find the water level theta with sum_i max(ell_i - theta, 0) = tau.
  double spent = 0.0;
  double theta = sorted[0] - tau;  // single-coordinate case
  for (size_t k = 1; k <= sorted.size(); ++k) {
    const double next = k < sorted.size() ? sorted[k] : -std::numeric_limits<double>::infinity();
    const double capacity = spent + static_cast<double>(k) * (sorted[k - 1] - next);
    if (capacity >= tau || k == sorted.size()) {
      theta = sorted[k - 1] - (tau - spent) / static_cast<double>(k);
      break;
    }
    spent = capacity;
  }
  Eigen::VectorXd capped = ell.cwiseMin(theta);
  return lse(capped);
}

/// Entropy maximization over the simplex with a per-coordinate cap:
/// max sum v_i (a_i - ln v_i) s.t. sum v_i = 1, 0 <= v_i <= cap.
/// Solved by bisection on the simplex multiplier; requires cap*m >= 1.
inline double capped_entropy_max(const Eigen::VectorXd& a, double cap) {
  const Eigen::Index m = a.size();
  const double amax = a.maxCoeff();
  auto total = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += std::min(cap, std::exp(a[i] - amax - 1.0 - mu));
    return s - 1.0;
  };
  // total is decreasing in mu; bracket it.
  double lo = -2.0, hi = 2.0;
  while (total(lo) < 0.0 && lo > -800.0) lo -= 4.0;
  while (total(hi) > 0.0 && hi < 800.0) hi += 4.0;
  const double mu = detail::bisect_decreasing(total, lo, hi, 200);
  double val = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = std::min(cap, std::exp(a[i] - amax - 1.0 - mu));
    if (v > 0.0) val += v * (a[i] - std::log(v));
  }
  return val;
}

/// max sum v_i (a_i - ln v_i) s.t. v in simplex, ||v||_2 <= radius.
/// KKT: a_i - 1 - ln v_i - 2 eta v_i = mu, with eta >= 0 active only when the
/// norm bound binds. Nested bisections on (eta, mu).
inline double l2_capped_entropy_max(const Eigen::VectorXd& a, double radius) {
  const Eigen::Index m = a.size();
  const double amax = a.maxCoeff();
  Eigen::VectorXd asc = a.array() - amax;

  auto v_of = [&](double mu, double eta) {
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double b = asc[i] - 1.0 - mu;
      // solve u + 2*eta*e^u = b in u = ln v (strictly increasing in u)
      double u = std::min(b, 0.0);
      if (eta > 0.0) {
        double ulo = b - 2.0 * eta * std::exp(std::min(b, 30.0)) - 1.0, uhi = b;
        u = detail::newton_increasing(
            [&](double x) { return x + 2.0 * eta * std::exp(x) - b; },
            [&](double x) { return 1.0 + 2.0 * eta * std::exp(x); },
            std::min(b, 0.0), ulo, uhi, 1e-14, 80);
      }
      v[i] = std::exp(u);
    }
    return v;
  };
  auto solve_mu = [&](double eta) {
    auto total = [&](double mu) { return v_of(mu, eta).sum() - 1.0; };
    double lo = -4.0, hi = 4.0;
    while (total(lo) < 0.0 && lo > -800.0) lo -= 8.0;
    while (total(hi) > 0.0 && hi < 800.0) hi += 8.0;
    return detail::bisect_decreasing(total, lo, hi, 120);
  };

  Eigen::VectorXd v = v_of(solve_mu(0.0), 0.0);
  if (v.norm() > radius) {
    // ||v(eta)|| decreases toward 1/sqrt(m) as eta grows.
    double elo = 0.0, ehi = 1.0;
    auto norm_at = [&](double eta) { return v_of(solve_mu(eta), eta).norm(); };
    while (norm_at(ehi) > radius && ehi < 1e12) ehi *= 4.0;
    for (int it = 0; it < 120; ++it) {
      const double emid = 0.5 * (elo + ehi);
      if (norm_at(emid) > radius) elo = emid; else ehi = emid;
    }
    v = v_of(solve_mu(ehi), ehi);
  }
  double val = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (v[i] > 0.0) val += v[i] * (a[i] - std::log(v[i]));
  }
  return val;
}

}  // namespace detail

/// Value of inf_{r in R^n} { ln(sum_i e^{r_i} w_i) + lambda*||r - rhat||^p }.
/// Returns the -inf sentinel when the infimum is unbounded below (lambda too
/// small). Numeric minimization: Newton for the smooth cases, 1-D reductions
/// with Newton/projected-gradient inner solves otherwise.
inline ExtendedReal inner_min_value(const SimplexWeights& w, double lambda,
                                    const Eigen::VectorXd& rhat, const BallSpec& ball,
                                    const InnerEvalConfig& cfg = {}) {
  cfg.validate();
  ball.validate();
  if (w.size() != rhat.size()) {
    throw DimensionMismatch("inner_min_value: weight/rhat dimension mismatch");
  }
  if (!rhat.allFinite()) throw DomainError("inner_min_value: rhat must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("inner_min_value: lambda must be finite and >= 0");
  }
  const double p = ball.p;
  if (lambda == 0.0) return ExtendedReal::neg_infinity();  // payoff term alone is unbounded below

  const auto supp = detail::support_of(w.vec());
  const Eigen::Index m = static_cast<Eigen::Index>(supp.size());
  Eigen::VectorXd ws(m), rs(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    ws[k] = w.vec()[supp[static_cast<size_t>(k)]];
    rs[k] = rhat[supp[static_cast<size_t>(k)]];
  }

  if (ball.norm == Norm::L2) {
    if (p == 2.0) {
      auto res = detail::quad_penalized_min(ws, rs, lambda, cfg.coord_tol);
      if (!res.converged) throw NumericFailure("inner_min_value: Newton did not converge");
      return res.value;
    }
    if (p < 2.0) {
      // Tangent-line representation of t^(p/2) in t = ||d||^2 turns the
      // power penalty into a family of quadratic penalties indexed by a
      // scalar sigma; the envelope over sigma is convex. The stationary
      // point r = rhat (sigma -> 0) is handled as an explicit candidate.
      const double theta = 0.5 * p;
      const double pinned = detail::log_sum_exp_weighted(ws, rs);  // value of r = rhat
      auto h = [&](double lnsig) {
        const double sig = std::exp(lnsig);
        const double mu = lambda * theta * std::pow(sig, theta - 1.0);
        auto res = detail::quad_penalized_min(ws, rs, mu, cfg.coord_tol);
        return -(lambda * (1.0 - theta) * std::pow(sig, theta) + res.value);
      };
      double lo = std::log(1e-12), hi = std::log(std::max(1.0, cfg.r_grid_halfwidth));
      double prev_best = std::numeric_limits<double>::infinity();
      for (int expansions = 0; expansions <= 80; ++expansions) {
        auto [x, fx] = detail::golden_max(h, lo, hi, 90);
        if (x < lo + 0.05 * (hi - lo) && expansions <= 12) {
          lo -= std::log(1e4);  // minimizer racing toward sigma = 0, i.e. r = rhat
          continue;
        }
        if (x < hi - 0.05 * (hi - lo)) return std::min(-fx, pinned);
        if (-fx > prev_best - 1e-12 * (1.0 + std::abs(fx))) {
          return std::min(-fx, pinned);  // flattened out at large sigma
        }
        prev_best = -fx;
        lo = hi - 2.0;
        hi += std::log(16.0);
      }
      return ExtendedReal::neg_infinity();  // still descending: unbounded (p = 1 only)
    }
    // p > 2: direct damped Newton on the smooth penalized objective.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd logw = ws.array().log();
    auto value_at = [&](const Eigen::VectorXd& dd) {
      Eigen::VectorXd t = logw + rs + dd;
      const double shift = t.maxCoeff();
      return shift + std::log((t.array() - shift).exp().sum()) +
             lambda * std::pow(dd.norm(), p);
    };
    double fd = value_at(d);
    for (int it = 0; it < 400; ++it) {
      Eigen::VectorXd t = logw + rs + d;
      const double shift = t.maxCoeff();
      Eigen::VectorXd s = (t.array() - shift).exp();
      s /= s.sum();
      const double nd = d.norm();
      Eigen::VectorXd g = s;
      if (nd > 0.0) g += lambda * p * std::pow(nd, p - 2.0) * d;
      if (g.lpNorm<Eigen::Infinity>() <= cfg.coord_tol * std::max(1.0, lambda)) break;
      Eigen::MatrixXd H = -s * s.transpose();
      H.diagonal() += s;
      if (nd > 0.0) {
        H += lambda * p * std::pow(nd, p - 2.0) * Eigen::MatrixXd::Identity(m, m);
        H += lambda * p * (p - 2.0) * std::pow(nd, p - 4.0) * (d * d.transpose());
      }
      H.diagonal().array() += 1e-12;
      Eigen::VectorXd step = H.ldlt().solve(-g);
      double alpha = 1.0;
      bool ok = false;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd dn = d + alpha * step;
        const double fn = value_at(dn);
        if (fn < fd) {
          d = dn;
          fd = fn;
          ok = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!ok) break;
    }
    return fd;
  }

  // L1/Linf ground norms: reduce over the ball radius tau;
  // g(tau) = min_{||d|| <= tau} f + lambda*tau^p is convex in tau and the
  // inner ball minimum has a closed form.
  auto h = [&](double tau) {
    return -(detail::ball_constrained_min(ws, rs, tau, ball.norm) + lambda * std::pow(tau, p));
  };
  double lo = 0.0, hi = 2.0 * cfg.r_grid_halfwidth;
  double prev_best = std::numeric_limits<double>::infinity();
  for (int expansions = 0; expansions <= 60; ++expansions) {
    auto [x, fx] = detail::golden_max(h, lo, hi, 90);
    if (x < hi - 0.02 * (hi - lo)) return -fx;  // interior maximizer
    if (-fx > prev_best - 1e-12 * (1.0 + std::abs(fx))) return -fx;  // flattened out
    prev_best = -fx;
    hi *= 4.0;
  }
  return ExtendedReal::neg_infinity();  // still descending: unbounded (p = 1 only)
}

/// Conjugate of the payoff term, evaluated by the stated closed form:
/// f*(v) = -sum_i v_i ln(w_i / v_i). Entries with v_i = 0 contribute 0;
/// +inf if v_i > 0 while w_i = 0.
inline ExtendedReal conjugate_f(const Eigen::VectorXd& v, const SimplexWeights& w) {
  if (v.size() != w.size()) throw DimensionMismatch("conjugate_f: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < -1e-14) throw ValidationError("conjugate_f: v must be nonnegative");
    if (v[i] <= 0.0) continue;
    if (w[i] <= 0.0) return ExtendedReal::pos_infinity();
    acc -= v[i] * std::log(w[i] / v[i]);
  }
  return acc;
}

/// Conjugate of the norm-power term:
/// h*(z) = rhat.z + (1/(q p^{q-1})) ||z||_*^q with q the conjugate exponent.
inline double conjugate_h(const Eigen::VectorXd& z, const Eigen::VectorXd& rhat,
                          const BallSpec& ball) {
  ball.validate();
  if (ball.p == 1.0) {
    throw UnsupportedOrder("conjugate_h: p = 1 has an indicator conjugate, not a closed form");
  }
  if (z.size() != rhat.size()) throw DimensionMismatch("conjugate_h: dimension mismatch");
  const double q = ball.conjugate_exponent();
  const double coef = 1.0 / (q * std::pow(ball.p, q - 1.0));
  return rhat.dot(z) + coef * std::pow(norm_value(z, ball.dual()), q);
}

/// Value of the per-sample Fenchel dual:
///   max over v in the simplex of
///     sum_i v_i ln(w_i/v_i) + rhat.v - (1/(q p^{q-1})) lambda ||v/lambda||_*^q
/// for p > 1; for p = 1 the power term is replaced by the constraint
/// ||v||_* <= lambda. Computed by numeric concave maximization.
inline ExtendedReal conjugate_inner_value(const SimplexWeights& w, double lambda,
                                          const Eigen::VectorXd& rhat, const BallSpec& ball,
                                          const InnerEvalConfig& cfg = {}) {
  cfg.validate();
  ball.validate();
  if (w.size() != rhat.size()) {
    throw DimensionMismatch("conjugate_inner_value: dimension mismatch");
  }
  if (!(lambda > 0.0)) {
    throw ValidationError("conjugate_inner_value: lambda must be positive");
  }
  const auto supp = detail::support_of(w.vec());
  const Eigen::Index m = static_cast<Eigen::Index>(supp.size());
  Eigen::VectorXd a(m);  // a_i = ln w_i + rhat_i
  for (Eigen::Index k = 0; k < m; ++k) {
    a[k] = std::log(w.vec()[supp[static_cast<size_t>(k)]]) + rhat[supp[static_cast<size_t>(k)]];
  }
  const Norm dual = ball.dual();
  const double p = ball.p;

  if (p == 1.0) {
    const double feastol = 1e-12;
    if (dual == Norm::L1) {
      // ||v||_1 = 1 on the simplex: feasible iff lambda >= 1, bound is slack.
      if (lambda < 1.0 - feastol) return ExtendedReal::neg_infinity();
      return detail::log_sum_exp_weighted(Eigen::VectorXd::Ones(m), a);
    }
    if (dual == Norm::Linf) {
      if (lambda * static_cast<double>(m) < 1.0 - feastol) return ExtendedReal::neg_infinity();
      return detail::capped_entropy_max(a, lambda);
    }
    if (lambda * std::sqrt(static_cast<double>(m)) < 1.0 - feastol) {
      return ExtendedReal::neg_infinity();
    }
    return detail::l2_capped_entropy_max(a, lambda);
  }

  const double q = ball.conjugate_exponent();
  const double kappa = (p - 1.0) * std::pow(p, -q) * std::pow(lambda, 1.0 - q);

  if (dual == Norm::L1) {
    // ||v||_1 = 1 on the simplex, so the power term is the constant kappa.
    return detail::log_sum_exp_weighted(Eigen::VectorXd::Ones(m), a) - kappa;
  }
  if (dual == Norm::Linf) {
    // Reduce over tau = ||v||_inf in [1/m, 1].
    auto h = [&](double tau) { return detail::capped_entropy_max(a, tau) - kappa * std::pow(tau, q); };
    auto [tau, val] = detail::golden_max(h, 1.0 / static_cast<double>(m), 1.0, 120);
    (void)tau;
    return val;
  }

  // Dual L2: exponentiated-gradient ascent on the simplex.
  auto objective = [&](const Eigen::VectorXd& v) {
    double val = -kappa * std::pow(v.norm(), q);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (v[i] > 0.0) val += v[i] * (a[i] - std::log(v[i]));
    }
    return val;
  };
  Eigen::VectorXd v = detail::weighted_softmax(Eigen::VectorXd::Ones(m), a);
  double fv = objective(v);
  double eta = 1.0;
  // The KKT residual of the exponentiated-gradient iterate floors near
  // sqrt(eps) once the value reaches fp accuracy, so the stop combines a
  // modest KKT tolerance with value stagnation.
  const double tol = std::max(cfg.coord_tol, 1e-8);
  bool converged = false;
  double best = fv;
  int stagnant = 0;
  for (int it = 0; it < 100000; ++it) {
    const double nv = v.norm();
    Eigen::VectorXd g = a - v.array().log().matrix();
    g.array() -= 1.0;
    g -= (kappa * q * std::pow(nv, q - 2.0)) * v;
    const double gbar = v.dot(g);
    double kkt = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) kkt = std::max(kkt, v[i] * std::abs(g[i] - gbar));
    if (kkt <= tol * (1.0 + std::abs(fv))) {
      converged = true;
      break;
    }
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd t = v.array().log() + eta * g.array();
      const double shift = t.maxCoeff();
      Eigen::VectorXd vn = (t.array() - shift).exp();
      vn /= vn.sum();
      const double fn = objective(vn);
      if (fn >= fv - 1e-15) {
        v = vn;
        fv = fn;
        moved = true;
        eta = std::min(eta * 1.3, 8.0);
        break;
      }
      eta *= 0.5;
    }
    if (!moved) { converged = true; break; }  // no ascent direction at fp precision
    if (fv > best + 1e-15 * (1.0 + std::abs(best))) {
      best = fv;
      stagnant = 0;
    } else if (++stagnant >= 400) {
      converged = true;  // value pinned at fp optimum
      break;
    }
  }
  if (!converged) throw NumericFailure("conjugate_inner_value: ascent did not converge");
  return std::max(fv, best);
}

/// Worst-case expected log growth at fixed weights:
///   sup_{lambda >= 0} (1/N) sum_j inner_min_value(w, lambda, rhat_j) - lambda eps^p,
/// by golden-section maximization over ln(lambda). For eps = 0 this is the
/// SAA objective.
inline double robust_objective(const SimplexWeights& w, const ReturnsMatrix& samples,
                               const BallSpec& ball, const InnerEvalConfig& cfg = {}) {
  cfg.validate();
  ball.validate();
  if (samples.kind() != ReturnKind::Log) {
    throw ValidationError("robust_objective: samples must be log returns");
  }
  if (w.size() != samples.n_assets()) {
    throw DimensionMismatch("robust_objective: weight/asset dimension mismatch");
  }
  const Eigen::MatrixXd& r = samples.values();
  const Eigen::Index N = r.rows();

  if (ball.epsilon == 0.0) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      acc += detail::log_sum_exp_weighted(w.vec(), r.row(j).transpose());
    }
    return acc / static_cast<double>(N);
  }

  const double epsp = std::pow(ball.epsilon, ball.p);
  auto H = [&](double lnlam) -> ExtendedReal {
    const double lam = std::exp(lnlam);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      ExtendedReal g = inner_min_value(w, lam, r.row(j).transpose(), ball, cfg);
      if (g.is_neg_infinity()) return ExtendedReal::neg_infinity();
      acc += g.value();
    }
    return acc / static_cast<double>(N) - lam * epsp;
  };

  double lo = std::log(cfg.lambda_bracket.first);
  double hi = std::log(cfg.lambda_bracket.second);
  bool at_boundary = false;  // lo sits just above the unbounded region (p = 1 kink)
  if (H(lo).is_neg_infinity()) {
    // Locate the edge of the finite region by bisection on ln(lambda);
    // the objective jumps from -inf at the edge and can attain its max there.
    double bad = lo, good = bad + std::log(8.0);
    while (H(good).is_neg_infinity()) {
      bad = good;
      good += std::log(8.0);
      if (good > hi) throw BracketTooNarrow("robust_objective: no finite lambda in bracket");
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (bad + good);
      if (H(mid).is_neg_infinity()) bad = mid; else good = mid;
    }
    lo = good;
    at_boundary = true;
  }
  auto Hfin = [&](double lnlam) { return H(lnlam).value_or(-1e300); };

  int grow_hi = 0, grow_lo = 0;
  for (;;) {
    auto [x, fx] = detail::golden_max(Hfin, lo, hi, 110);
    const double width = hi - lo;
    if (x > hi - 0.02 * width) {
      if (++grow_hi > 3) throw BracketTooNarrow("robust_objective: maximizing lambda at upper bracket edge");
      hi += std::log(2.0);
      continue;
    }
    if (x < lo + 0.02 * width && !at_boundary) {
      if (++grow_lo > 3) throw BracketTooNarrow("robust_objective: maximizing lambda at lower bracket edge");
      lo -= std::log(2.0);
      continue;
    }
    return std::max(fx, at_boundary ? Hfin(lo) : fx);
  }
}

}  // namespace wkelly
