// Acceptance suite: one test per release criterion, each printing a
// PASS/FAIL line with the measured quantity next to its threshold.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "test_support.hpp"
#include "wkelly/cli.hpp"
#include "wkelly/duality_suite.hpp"
#include "wkelly/experiments.hpp"
#include "wkelly/inner_oracle.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/robust_solver.hpp"

using namespace wkelly;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "[CRITERION " << criterion << "] " << (pass ? "PASS" : "FAIL") << " - " << detail
            << std::endl;
  EXPECT_TRUE(pass) << detail;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// Shared instance generator for the small strong-duality fixtures.
ReturnsMatrix duality_instance(int k, double& eps) {
  Rng rng = Rng::substream(11, static_cast<std::uint64_t>(k));
  const int n = 1 + static_cast<int>(rng.below(3));
  const int N = 1 + static_cast<int>(rng.below(5));
  Eigen::MatrixXd r(N, n);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < n; ++i) r(j, i) = 0.05 * rng.normal();
  }
  eps = std::exp(rng.uniform(std::log(1e-3), std::log(0.3)));
  return ReturnsMatrix(r, ReturnKind::Log);
}

}  // namespace

TEST(Acceptance, Criterion1FenchelDualitySuite) {
  const auto t0 = Clock::now();
  const DualityCheckResult res = run_duality_suite(7, 100, 2.0, Norm::L2);
  const double elapsed = seconds_since(t0);
  const bool pass = res.max_gap <= 1e-5 && res.evaluations >= 100 && elapsed < 60.0;
  report(1, pass,
         "Fenchel identity on " + std::to_string(res.evaluations) + " evaluations: max gap " +
             fmt(res.max_gap) + " (tol 1e-5), " + fmt(elapsed) + " s (limit 60 s)");
}

TEST(Acceptance, Criterion2EndToEndStrongDuality) {
  double worst = 0.0;
  int solved = 0;
  for (int k = 0; k < 20; ++k) {
    double eps = 0.0;
    const ReturnsMatrix m = duality_instance(k, eps);
    const BallSpec ball = BallSpec::make(2.0, eps);
    const RobustSolution sol = solve_wkelly(m, ball);
    if (sol.status == SolveStatus::Optimal) ++solved;
    worst = std::max(worst, std::abs(sol.objective - robust_objective(sol.weights, m, ball)));
  }
  const bool pass = worst <= 1e-4 && solved == 20;
  report(2, pass, "solver vs worst-case oracle on 20 instances: max |gap| " + fmt(worst) +
                      " (tol 1e-4), " + std::to_string(solved) + "/20 optimal");
}

TEST(Acceptance, Criterion3SaaRecovery) {
  const ReturnsMatrix m = fixtures::dominance_fixture();
  const KellySolution ks = solve_kelly(m);
  const RobustSolution rs = solve_wkelly(m, BallSpec::make(2.0, 0.0));
  const double dw = (rs.weights.vec() - ks.weights.vec()).lpNorm<Eigen::Infinity>();
  const double dobj = std::abs(rs.objective - ks.objective);
  const bool pass = dw <= 1e-4 && dobj <= 1e-6;
  report(3, pass, "zero-radius solve matches Kelly: |w - w_kelly|_inf " + fmt(dw) +
                      " (tol 1e-4), |objective diff| " + fmt(dobj) + " (tol 1e-6)");
}

TEST(Acceptance, Criterion4SingleAssetClosedForm) {
  Eigen::MatrixXd r(5, 1);
  r << 0.012, -0.02, 0.03, 0.001, -0.007;
  const ReturnsMatrix m(r, ReturnKind::Log);
  double worst = 0.0;
  for (double eps : {0.001, 0.01, 0.1}) {
    const RobustSolution rs = solve_wkelly(m, BallSpec::make(2.0, eps));
    worst = std::max(worst, std::abs(rs.objective - (r.mean() - eps)));
  }
  const bool pass = worst <= 1e-6;
  report(4, pass, "n=1 objective equals mean - eps: max deviation " + fmt(worst) + " (tol 1e-6)");
}

TEST(Acceptance, Criterion5UniformLimit) {
  const ReturnsMatrix m = fixtures::ten_asset_fixture();
  const SweepTable table = diversification_sweep(m, {50.0});
  ASSERT_EQ(table.rows.size(), 1u);
  ASSERT_FALSE(table.rows[0].failed);
  const double dist = (table.rows[0].weights.array() - 0.1).abs().maxCoeff();
  const bool pass = dist <= 1e-2;
  report(5, pass, "delta=50 sweep row: |w - 1/10|_inf " + fmt(dist) + " (tol 1e-2)");
}

TEST(Acceptance, Criterion6RadiusMonotonicity) {
  double worst_violation = 0.0;
  bool all_optimal = true;
  for (std::uint64_t seed : {101, 202, 303}) {
    const ReturnsMatrix m = fixtures::random_log_returns(seed, 40, 4);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 0.001, 0.01, 0.1, 1.0}) {
      const RobustSolution rs = solve_wkelly(m, BallSpec::make(2.0, eps));
      all_optimal = all_optimal && rs.status == SolveStatus::Optimal;
      worst_violation = std::max(worst_violation, rs.objective - prev);
      prev = rs.objective;
    }
  }
  const bool pass = worst_violation <= 1e-8 && all_optimal;
  report(6, pass, "objective non-increasing over the radius grid on 3 fixtures: worst increase " +
                      fmt(std::max(worst_violation, 0.0)) + " (tol 1e-8)");
}

TEST(Acceptance, Criterion7OrderOneVariant) {
  double worst_gap = 0.0, worst_cap = 0.0;
  for (int k = 0; k < 20; ++k) {
    double eps = 0.0;
    const ReturnsMatrix m = duality_instance(k, eps);
    const BallSpec ball = BallSpec::make(1.0, eps);
    const RobustSolution sol = solve_wkelly(m, ball);
    worst_gap = std::max(worst_gap, std::abs(sol.objective - robust_objective(sol.weights, m, ball)));
    for (Eigen::Index j = 0; j < sol.v.rows(); ++j) {
      worst_cap = std::max(worst_cap,
                           norm_value(sol.v.row(j).transpose(), ball.dual()) - sol.lambda);
    }
  }
  const bool pass = worst_gap <= 1e-4 && worst_cap <= 1e-8;
  report(7, pass, "p=1 program vs oracle on 20 instances: max |gap| " + fmt(worst_gap) +
                      " (tol 1e-4), max cap violation " + fmt(std::max(worst_cap, 0.0)) +
                      " (tol 1e-8)");
}

TEST(Acceptance, Criterion8BacktestIdentities) {
  Rng rng(808);
  double worst_gamma = 0.0, worst_dd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(rng.below(300));
    const int n = 1 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd r(T, n);
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) r(t, i) = rng.uniform(-0.08, 0.09);
    }
    const SimplexWeights w = fixtures::random_weights(rng, n);
    const Trajectory tr = run_constant_mix(w, ReturnsMatrix(r, ReturnKind::Simple));
    const MetricsReport m = performance_metrics(tr);
    double gamma = 0.0;
    for (double pr : tr.period_returns) gamma += std::log1p(pr);
    gamma /= static_cast<double>(T);
    worst_gamma = std::max(worst_gamma, std::abs(m.growth_rate - gamma));
    // brute-force double-loop drawdown oracle
    double oracle_dd = 0.0;
    for (size_t i = 0; i < tr.values.size(); ++i) {
      for (size_t j = i; j < tr.values.size(); ++j) {
        oracle_dd = std::max(oracle_dd, (tr.values[i] - tr.values[j]) / tr.values[i]);
      }
    }
    worst_dd = std::max(worst_dd, std::abs(m.max_drawdown - oracle_dd));
  }
  const bool pass = worst_gamma <= 1e-12 && worst_dd == 0.0;
  report(8, pass, "growth-rate identity drift " + fmt(worst_gamma) +
                      " (tol 1e-12) and drawdown oracle mismatch " + fmt(worst_dd) +
                      " on 100 trajectories");
}

TEST(Acceptance, Criterion9DeskScaleStudy) {
  const auto t0 = Clock::now();
  StudyConfig cfg;
  cfg.universe = fixtures::student_t_universe(2024, 20, 310);
  cfg.subset_size = 10;
  cfg.train_periods = 60;
  cfg.trials = 200;
  cfg.delta_grid = {0.0, 0.1, 0.2, 0.4};
  cfg.seed = 2024;
  cfg.threads = 1;
  const StudyReport rep = random_subset_study(cfg);
  const double elapsed = seconds_since(t0);

  // schema validity of the serialized report
  const nlohmann::json j = rep.to_json();
  bool schema_ok = j.contains("meta") && j.contains("cells") && j.contains("aggregates") &&
                   j["meta"]["kind"] == "wkelly_study" && j["cells"].size() == 800u &&
                   j["aggregates"].size() == 4u;
  for (const auto& agg : j["aggregates"]) {
    schema_ok = schema_ok && agg.contains("box") && agg["box"].contains("annualized_volatility") &&
                agg.contains("band") && agg["band"]["mean"].size() == 251u;
  }
  EXPECT_EQ(rep.test_periods, 250);

  // Box statistics must agree with an independent quantile routine.
  bool box_ok = true;
  for (size_t di = 0; di < rep.delta_grid.size(); ++di) {
    std::vector<double> vols;
    for (const auto& c : rep.cells) {
      if (!c.failed && c.delta == rep.delta_grid[di]) {
        vols.push_back(c.metrics.annualized_volatility);
      }
    }
    std::sort(vols.begin(), vols.end());
    const size_t m = vols.size();
    const double med = m % 2 == 1 ? vols[m / 2] : 0.5 * (vols[m / 2 - 1] + vols[m / 2]);
    const BoxStats& b = rep.per_delta[di].box[1];
    box_ok = box_ok && b.count == static_cast<int>(m) && b.min == vols.front() &&
             b.max == vols.back() && b.median == med;
  }

  const double vol_kelly = rep.per_delta.front().box[1].mean;   // delta = 0
  const double vol_robust = rep.per_delta.back().box[1].mean;   // delta = 0.4
  const bool pass = elapsed < 600.0 && schema_ok && box_ok && vol_robust <= vol_kelly &&
                    rep.failed_cells_total() == 0;
  report(9, pass, "200-trial synthetic study in " + fmt(elapsed) +
                      " s (limit 600 s), schema " + (schema_ok ? "valid" : "INVALID") +
                      ", mean ann. volatility delta=0.4 " + fmt(vol_robust) + " <= delta=0 " +
                      fmt(vol_kelly) + ", failed cells " +
                      std::to_string(rep.failed_cells_total()));
}

TEST(Acceptance, Criterion10StudyDeterminism) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "wkelly_acceptance_c10";
  fs::create_directories(dir);
  const std::string prices = (dir / "prices.csv").string();
  fixtures::write_prices_csv(fixtures::student_t_universe(55, 12, 160), prices);

  auto run_study = [&](const std::string& outfile, const std::string& threads) {
    std::ostringstream out, err;
    const int code = run_cli({"study", "--prices", prices, "--deltas", "0,0.1,0.4",
                              "--train-days", "40", "--trials", "30", "--subset-size", "6",
                              "--seed", "31337", "--threads", threads, "--out",
                              (dir / outfile).string()},
                             out, err);
    EXPECT_EQ(code, 0) << err.str();
    std::ifstream f(dir / outfile);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  const std::string a = run_study("a.json", "1");
  const std::string b = run_study("b.json", "1");
  const std::string c = run_study("c.json", "4");
  const bool pass = !a.empty() && a == b && a == c;
  report(10, pass, std::string("study bytes identical across runs (") +
                       (a == b ? "yes" : "NO") + ") and across thread counts (" +
                       (a == c ? "yes" : "NO") + ")");
  fs::remove_all(dir);
}
