#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace wkelly::detail {

/// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  std::vector<double> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    css += u[static_cast<size_t>(i)];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<size_t>(i)] - t > 0.0) {
      theta = t;
      k = i + 1;
    }
  }
  (void)k;
  return (y.array() - theta).cwiseMax(0.0);
}

/// v_i = w_i * exp(a_i) / sum_k w_k * exp(a_k), computed with max-shift.
/// Entries with w_i == 0 give v_i == 0.
inline Eigen::VectorXd weighted_softmax(const Eigen::VectorXd& w, const Eigen::VectorXd& a) {
  const double shift = a.maxCoeff();
  Eigen::VectorXd v = w.array() * (a.array() - shift).exp();
  const double z = v.sum();
  return v / z;
}

/// ln(sum_i w_i * exp(a_i)) with max-shift; requires some w_i > 0.
inline double log_sum_exp_weighted(const Eigen::VectorXd& w, const Eigen::VectorXd& a) {
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (w[i] > 0.0 && a[i] > shift) shift = a[i];
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (w[i] > 0.0) s += w[i] * std::exp(a[i] - shift);
  }
  return shift + std::log(s);
}

}  // namespace wkelly::detail
