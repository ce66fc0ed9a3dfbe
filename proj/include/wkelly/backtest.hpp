#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "wkelly/errors.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

/// Value path of a simulated portfolio, V_0 = 1.
struct Trajectory {
  std::vector<double> values;          // length T+1, values[0] == 1
  std::vector<double> period_returns;  // length T, portfolio simple returns

  Eigen::Index periods() const { return static_cast<Eigen::Index>(period_returns.size()); }
};

/// Simulates a constant-proportions strategy: rebalance to w every period,
/// V_t = V_{t-1} * (1 + R_t.w). Throws Ruin at the first period where the
/// absolute return is not positive.
inline Trajectory run_constant_mix(const SimplexWeights& w, const ReturnsMatrix& returns) {
  if (returns.kind() != ReturnKind::Simple) {
    throw ValidationError("run_constant_mix: returns must be simple returns");
  }
  if (w.size() != returns.n_assets()) {
    throw DimensionMismatch("run_constant_mix: weight/asset dimension mismatch");
  }
  const Eigen::MatrixXd& r = returns.values();
  Trajectory tr;
  tr.values.reserve(static_cast<size_t>(r.rows()) + 1);
  tr.period_returns.reserve(static_cast<size_t>(r.rows()));
  tr.values.push_back(1.0);
  for (Eigen::Index t = 0; t < r.rows(); ++t) {
    const double pr = r.row(t).dot(w.vec());
    const double next = tr.values.back() * (1.0 + pr);
    if (1.0 + pr <= 0.0 || next <= 0.0) throw Ruin(static_cast<int>(t) + 1);
    tr.period_returns.push_back(pr);
    tr.values.push_back(next);
  }
  return tr;
}

struct MetricsReport {
  double annualized_return = 0.0;
  double annualized_volatility = 0.0;
  double sharpe_ratio = 0.0;         // +/-inf sentinel when volatility is zero
  double max_drawdown = 0.0;         // in [0, 1)
  double log_final_value = 0.0;
  double growth_rate = 0.0;          // per-period, log_final_value / T
  bool zero_volatility = false;

  static constexpr const char* kMetricNames[6] = {
      "annualized_return", "annualized_volatility", "sharpe_ratio",
      "max_drawdown",      "log_final_value",       "growth_rate"};

  double metric(int k) const {
    switch (k) {
      case 0: return annualized_return;
      case 1: return annualized_volatility;
      case 2: return sharpe_ratio;
      case 3: return max_drawdown;
      case 4: return log_final_value;
      default: return growth_rate;
    }
  }
};

/// Annualized return uses geometric compounding, volatility uses sqrt-time
/// scaling of the sample standard deviation of period returns, Sharpe uses a
/// zero risk-free rate, drawdown runs over the discrete path including V_0.
inline MetricsReport performance_metrics(const Trajectory& tr, int periods_per_year = 252) {
  const Eigen::Index T = tr.periods();
  if (T < 1) throw InsufficientData("performance_metrics: need at least one period");
  if (periods_per_year < 1) {
    throw ValidationError("performance_metrics: periods_per_year must be >= 1");
  }
  if (tr.values.size() != static_cast<size_t>(T) + 1) {
    throw LengthMismatch("performance_metrics: values/returns length mismatch");
  }
  MetricsReport m;
  const double vT = tr.values.back();
  m.log_final_value = std::log(vT);
  m.growth_rate = m.log_final_value / static_cast<double>(T);
  m.annualized_return =
      std::pow(vT, static_cast<double>(periods_per_year) / static_cast<double>(T)) - 1.0;

  double mean = 0.0;
  for (double x : tr.period_returns) mean += x;
  mean /= static_cast<double>(T);
  double ss = 0.0;
  for (double x : tr.period_returns) ss += (x - mean) * (x - mean);
  const double var = T > 1 ? ss / static_cast<double>(T - 1) : 0.0;
  m.annualized_volatility = std::sqrt(var * static_cast<double>(periods_per_year));

  if (m.annualized_volatility == 0.0) {
    m.zero_volatility = true;
    if (m.annualized_return > 0.0) {
      m.sharpe_ratio = std::numeric_limits<double>::infinity();
    } else if (m.annualized_return < 0.0) {
      m.sharpe_ratio = -std::numeric_limits<double>::infinity();
    } else {
      m.sharpe_ratio = 0.0;
    }
  } else {
    m.sharpe_ratio = m.annualized_return / m.annualized_volatility;
  }

  double peak = tr.values[0];
  double dd = 0.0;
  for (double v : tr.values) {
    peak = std::max(peak, v);
    dd = std::max(dd, (peak - v) / peak);
  }
  m.max_drawdown = dd;
  return m;
}

/// Per-time-step mean and (population) standard deviation over a bundle of
/// equal-length trajectories.
struct BandSummary {
  std::vector<double> mean;
  std::vector<double> stdev;
};

inline BandSummary aggregate_trajectories(const std::vector<Trajectory>& trs) {
  if (trs.empty()) throw LengthMismatch("aggregate_trajectories: empty bundle");
  const size_t len = trs[0].values.size();
  for (const auto& t : trs) {
    if (t.values.size() != len) {
      throw LengthMismatch("aggregate_trajectories: trajectories differ in length");
    }
  }
  BandSummary out;
  out.mean.assign(len, 0.0);
  out.stdev.assign(len, 0.0);
  const double k = static_cast<double>(trs.size());
  for (size_t t = 0; t < len; ++t) {
    double mu = 0.0;
    for (const auto& tr : trs) mu += tr.values[t];
    mu /= k;
    double ss = 0.0;
    for (const auto& tr : trs) ss += (tr.values[t] - mu) * (tr.values[t] - mu);
    out.mean[t] = mu;
    out.stdev[t] = std::sqrt(ss / k);
  }
  return out;
}

}  // namespace wkelly
