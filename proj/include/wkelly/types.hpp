#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "wkelly/errors.hpp"

namespace wkelly {

enum class ReturnKind { Log, Simple };

inline const char* to_string(ReturnKind k) {
  return k == ReturnKind::Log ? "log" : "simple";
}

/// Ground norms on log-return space. The dual pairing is fixed:
/// L2<->L2, L1<->Linf, Linf<->L1.
enum class Norm { L2, L1, Linf };

inline Norm dual_norm(Norm n) {
  switch (n) {
    case Norm::L2: return Norm::L2;
    case Norm::L1: return Norm::Linf;
    case Norm::Linf: return Norm::L1;
  }
  throw ValidationError("dual_norm: unknown norm");
}

inline const char* to_string(Norm n) {
  switch (n) {
    case Norm::L2: return "l2";
    case Norm::L1: return "l1";
    case Norm::Linf: return "linf";
  }
  return "?";
}

inline double norm_value(const Eigen::VectorXd& v, Norm n) {
  switch (n) {
    case Norm::L2: return v.norm();
    case Norm::L1: return v.lpNorm<1>();
    case Norm::Linf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  throw ValidationError("norm_value: unknown norm");
}

/// N x n matrix of per-period returns, tagged as log or simple returns.
/// Rows are the support atoms of the empirical return distribution.
class ReturnsMatrix {
 public:
  ReturnsMatrix(Eigen::MatrixXd values, ReturnKind kind,
                std::vector<std::string> asset_labels = {})
      : values_(std::move(values)), kind_(kind), labels_(std::move(asset_labels)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw DimensionMismatch("ReturnsMatrix: need at least 1 sample and 1 asset");
    }
    if (!values_.allFinite()) {
      throw DomainError("ReturnsMatrix: non-finite entry");
    }
    if (kind_ == ReturnKind::Simple && (values_.array() <= -1.0).any()) {
      throw DomainError("ReturnsMatrix: simple return <= -1 (absolute return not positive)");
    }
    if (labels_.empty()) {
      labels_.reserve(static_cast<size_t>(values_.cols()));
      for (Eigen::Index i = 0; i < values_.cols(); ++i) {
        labels_.push_back("a" + std::to_string(i + 1));
      }
    }
    if (static_cast<Eigen::Index>(labels_.size()) != values_.cols()) {
      throw DimensionMismatch("ReturnsMatrix: label count does not match asset count");
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  ReturnKind kind() const { return kind_; }
  Eigen::Index n_samples() const { return values_.rows(); }
  Eigen::Index n_assets() const { return values_.cols(); }
  const std::vector<std::string>& asset_labels() const { return labels_; }

 private:
  Eigen::MatrixXd values_;
  ReturnKind kind_;
  std::vector<std::string> labels_;
};

/// Elementwise r = ln(1+R) or R = exp(r) - 1; labels preserved.
inline ReturnsMatrix convert_returns(const ReturnsMatrix& m, ReturnKind target) {
  if (m.kind() == target) return m;
  Eigen::MatrixXd out;
  if (target == ReturnKind::Log) {
    out = m.values().array().log1p();
  } else {
    out = m.values().array().exp() - 1.0;
  }
  return ReturnsMatrix(std::move(out), target, m.asset_labels());
}

/// Portfolio allocation on the probability simplex.
class SimplexWeights {
 public:
  static constexpr double kNegTol = 1e-12;
  static constexpr double kSumTol = 1e-8;

  const Eigen::VectorXd& vec() const { return w_; }
  Eigen::Index size() const { return w_.size(); }
  double operator[](Eigen::Index i) const { return w_[i]; }

  static SimplexWeights uniform(Eigen::Index n) {
    if (n < 1) throw DimensionMismatch("SimplexWeights::uniform: n must be >= 1");
    return SimplexWeights(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  friend SimplexWeights make_weights(const Eigen::VectorXd& raw);

 private:
  explicit SimplexWeights(Eigen::VectorXd w) : w_(std::move(w)) {}
  Eigen::VectorXd w_;
};

/// Validates raw weights; rejects rather than silently renormalizing.
inline SimplexWeights make_weights(const Eigen::VectorXd& raw) {
  if (raw.size() < 1) throw DimensionMismatch("make_weights: empty vector");
  if (!raw.allFinite()) throw DomainError("make_weights: non-finite entry");
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw[i] < -SimplexWeights::kNegTol) {
      throw NegativeWeight("make_weights: entry " + std::to_string(i) +
                           " is negative (" + std::to_string(raw[i]) + ")");
    }
  }
  const double sum = raw.sum();
  if (std::abs(sum - 1.0) > SimplexWeights::kSumTol) {
    throw SumMismatch("make_weights: entries sum to " + std::to_string(sum) +
                      ", expected 1");
  }
  Eigen::VectorXd w = raw.cwiseMax(0.0);
  return SimplexWeights(std::move(w));
}

/// Wasserstein ball: order p >= 1, radius epsilon >= 0, ground norm.
struct BallSpec {
  double p = 2.0;
  double epsilon = 0.0;
  Norm norm = Norm::L2;

  static BallSpec make(double p, double epsilon, Norm norm = Norm::L2) {
    BallSpec b{p, epsilon, norm};
    b.validate();
    return b;
  }

  void validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) {
      throw UnsupportedOrder("BallSpec: Wasserstein order p must satisfy p >= 1");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw ValidationError("BallSpec: radius epsilon must be finite and >= 0");
    }
  }

  /// Conjugate exponent q = p/(p-1); defined for p > 1 only.
  double conjugate_exponent() const {
    if (p <= 1.0) throw UnsupportedOrder("conjugate_exponent: requires p > 1");
    return p / (p - 1.0);
  }

  Norm dual() const { return dual_norm(norm); }
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct SolverSettings {
  double tol_rel = 1e-7;    // relative optimality tolerance
  double tol_feas = 1e-8;   // feasibility tolerance
  int max_iter = 10000;
  double floor_w = 1e-12;   // weight lower clamp inside log terms

  void validate() const {
    if (!(tol_rel > 0.0 && tol_rel < 1.0)) {
      throw ValidationError("SolverSettings: tol_rel must be in (0,1)");
    }
    if (!(tol_feas > 0.0) || !(floor_w > 0.0) || max_iter <= 0) {
      throw ValidationError("SolverSettings: tolerances and max_iter must be positive");
    }
  }
};

/// Solution of the empirical growth-optimal (Kelly) program.
struct KellySolution {
  SimplexWeights weights;
  double objective = 0.0;  // mean log absolute return per period
  SolveStatus status = SolveStatus::Optimal;
};

/// Solution of the Wasserstein-robust program: weights plus the dual
/// multiplier lambda and the per-sample dual vectors (rows of v).
struct RobustSolution {
  SimplexWeights weights;
  double lambda = 0.0;
  Eigen::MatrixXd v;       // N x n, rows are v^(j)
  double objective = 0.0;  // robust expected log-growth per period
  SolveStatus status = SolveStatus::Optimal;
  double duality_gap_estimate = 0.0;
};

}  // namespace wkelly
