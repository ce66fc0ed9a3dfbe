#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wkelly/backtest.hpp"
#include "wkelly/data_ingest.hpp"
#include "wkelly/duality_suite.hpp"
#include "wkelly/experiments.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/robust_solver.hpp"
#include "wkelly/types.hpp"

namespace wkelly {
namespace cli {

inline Norm parse_norm(const std::string& s) {
  if (s == "l2") return Norm::L2;
  if (s == "l1") return Norm::L1;
  if (s == "linf") return Norm::Linf;
  throw ValidationError("unknown norm '" + s + "' (expected l2, l1 or linf)");
}

inline std::vector<double> parse_double_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::string t = detail::trimmed(tok);
    if (t.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
      throw ValidationError(std::string(flag) + ": bad number '" + t + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(flag) + ": empty list");
  return out;
}

inline Date parse_date_flag(const std::string& s, const char* flag) {
  Date d;
  if (!Date::parse(s, d)) {
    throw ValidationError(std::string(flag) + ": bad date '" + s + "' (expected YYYY-MM-DD)");
  }
  return d;
}

/// Writes to --out when given, otherwise to the data stream.
inline void emit(const std::string& text, const std::string& out_path, std::ostream& data) {
  if (out_path.empty()) {
    data << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw IoError("cannot open output file '" + out_path + "'");
  f << text;
  f.flush();
  if (!f) throw IoError("write failure on '" + out_path + "'");
}

/// Exactly one of --delta / --epsilon, mapped to an absolute radius.
inline double resolve_epsilon(const std::optional<double>& delta,
                              const std::optional<double>& epsilon,
                              const ReturnsMatrix& log_samples) {
  if (delta.has_value() == epsilon.has_value()) {
    throw ValidationError("exactly one of --delta and --epsilon is required");
  }
  if (epsilon) {
    if (!(*epsilon >= 0.0)) throw ValidationError("--epsilon must be >= 0");
    return *epsilon;
  }
  return epsilon_from_delta(log_samples, *delta).epsilon();
}

inline nlohmann::json weights_json(const SimplexWeights& w,
                                   const std::vector<std::string>& labels) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    nlohmann::json e;
    e["asset"] = labels[static_cast<size_t>(i)];
    e["weight"] = w[i];
    arr.push_back(e);
  }
  return arr;
}

struct CommonOpts {
  std::string prices;
  std::optional<double> delta, epsilon;
  double p = 2.0;
  std::string norm = "l2";
  std::string format = "json";
  std::string out;
};

}  // namespace cli

/// Parses and runs one CLI invocation. Returns the process exit code:
/// 0 success, 1 domain/validation error, 2 solver or check failure,
/// 3 I/O error. Data goes to `out` (or --out), summaries to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Growth-optimal (Kelly) and Wasserstein-robust portfolio toolkit"};
  app.name("wkelly");
  app.require_subcommand(1);
  int exit_code = 0;

  // --- optimize ---------------------------------------------------------
  cli::CommonOpts oopt;
  auto* opt = app.add_subcommand("optimize", "Solve the robust (or plain Kelly) portfolio");
  opt->add_option("--prices", oopt.prices, "wide CSV price file")->required();
  auto* o_delta = opt->add_option("--delta", oopt.delta, "radius as a multiple of mean |log return|");
  auto* o_eps = opt->add_option("--epsilon", oopt.epsilon, "absolute Wasserstein radius");
  o_delta->excludes(o_eps);
  opt->add_option("--p", oopt.p, "Wasserstein order (1 or 2)")->default_val(2.0);
  opt->add_option("--norm", oopt.norm, "ground norm: l2, l1, linf")->default_val("l2");
  opt->add_option("--format", oopt.format, "csv or json")->default_val("json");
  opt->add_option("--out", oopt.out, "output path (default: stdout)");
  opt->callback([&]() {
    const PriceTable pt = load_prices(oopt.prices);
    const ReturnsMatrix rlog = log_returns(pt);
    const double eps = cli::resolve_epsilon(oopt.delta, oopt.epsilon, rlog);
    const BallSpec ball = BallSpec::make(oopt.p, eps, cli::parse_norm(oopt.norm));
    const RobustSolution sol = solve_wkelly(rlog, ball);
    std::ostringstream body;
    if (oopt.format == "json") {
      nlohmann::json j;
      j["command"] = "optimize";
      j["p"] = ball.p;
      j["norm"] = to_string(ball.norm);
      if (oopt.delta) j["delta"] = *oopt.delta;
      j["epsilon"] = ball.epsilon;
      j["objective"] = detail::json_number(sol.objective);
      j["lambda"] = detail::json_number(sol.lambda);
      j["duality_gap_estimate"] = detail::json_number(sol.duality_gap_estimate);
      j["status"] = to_string(sol.status);
      j["weights"] = cli::weights_json(sol.weights, rlog.asset_labels());
      body << j.dump(2) << "\n";
    } else if (oopt.format == "csv") {
      body << "asset,weight\n";
      for (Eigen::Index i = 0; i < sol.weights.size(); ++i) {
        body << rlog.asset_labels()[static_cast<size_t>(i)] << ","
             << detail::fmt_double(sol.weights[i]) << "\n";
      }
    } else {
      throw ValidationError("--format must be csv or json");
    }
    cli::emit(body.str(), oopt.out, out);
    err << "optimize: objective=" << detail::fmt_double(sol.objective)
        << " status=" << to_string(sol.status) << "\n";
    if (sol.status != SolveStatus::Optimal) exit_code = 2;
  });

  // --- robust-objective ---------------------------------------------------
  cli::CommonOpts ropt;
  std::string r_weights;
  auto* rob = app.add_subcommand("robust-objective",
                                 "Worst-case expected log growth at fixed weights (oracle)");
  rob->add_option("--prices", ropt.prices, "wide CSV price file")->required();
  rob->add_option("--weights", r_weights, "comma-separated portfolio weights")->required();
  auto* r_delta = rob->add_option("--delta", ropt.delta, "radius as a multiple of mean |log return|");
  auto* r_eps = rob->add_option("--epsilon", ropt.epsilon, "absolute Wasserstein radius");
  r_delta->excludes(r_eps);
  rob->add_option("--p", ropt.p, "Wasserstein order")->default_val(2.0);
  rob->add_option("--norm", ropt.norm, "ground norm: l2, l1, linf")->default_val("l2");
  rob->add_option("--format", ropt.format, "csv or json")->default_val("json");
  rob->add_option("--out", ropt.out, "output path (default: stdout)");
  rob->callback([&]() {
    const PriceTable pt = load_prices(ropt.prices);
    const ReturnsMatrix rlog = log_returns(pt);
    const auto wlist = cli::parse_double_list(r_weights, "--weights");
    if (static_cast<Eigen::Index>(wlist.size()) != rlog.n_assets()) {
      throw DimensionMismatch("--weights: expected " + std::to_string(rlog.n_assets()) +
                              " entries, got " + std::to_string(wlist.size()));
    }
    const SimplexWeights w = make_weights(
        Eigen::Map<const Eigen::VectorXd>(wlist.data(), static_cast<Eigen::Index>(wlist.size())));
    const double eps = cli::resolve_epsilon(ropt.delta, ropt.epsilon, rlog);
    const BallSpec ball = BallSpec::make(ropt.p, eps, cli::parse_norm(ropt.norm));
    const double value = robust_objective(w, rlog, ball);
    std::ostringstream body;
    if (ropt.format == "json") {
      nlohmann::json j;
      j["command"] = "robust-objective";
      j["p"] = ball.p;
      j["norm"] = to_string(ball.norm);
      if (ropt.delta) j["delta"] = *ropt.delta;
      j["epsilon"] = ball.epsilon;
      j["value"] = detail::json_number(value);
      j["weights"] = cli::weights_json(w, rlog.asset_labels());
      body << j.dump(2) << "\n";
    } else if (ropt.format == "csv") {
      body << "value\n" << detail::fmt_double(value) << "\n";
    } else {
      throw ValidationError("--format must be csv or json");
    }
    cli::emit(body.str(), ropt.out, out);
  });

  // --- backtest -----------------------------------------------------------
  std::string b_prices, b_weights, b_format = "json", b_out, b_values_out;
  int b_ppy = 252;
  auto* bt = app.add_subcommand("backtest", "Constant-proportions backtest and metrics");
  bt->add_option("--prices", b_prices, "wide CSV price file")->required();
  bt->add_option("--weights", b_weights, "comma-separated portfolio weights")->required();
  bt->add_option("--periods-per-year", b_ppy, "annualization factor")->default_val(252);
  bt->add_option("--format", b_format, "csv or json")->default_val("json");
  bt->add_option("--out", b_out, "output path (default: stdout)");
  bt->add_option("--values-out", b_values_out, "also write the value path CSV (t,value)");
  bt->callback([&]() {
    const PriceTable pt = load_prices(b_prices);
    const ReturnsMatrix rsimple = simple_returns(pt);
    const auto wlist = cli::parse_double_list(b_weights, "--weights");
    if (static_cast<Eigen::Index>(wlist.size()) != rsimple.n_assets()) {
      throw DimensionMismatch("--weights: expected " + std::to_string(rsimple.n_assets()) +
                              " entries, got " + std::to_string(wlist.size()));
    }
    const SimplexWeights w = make_weights(
        Eigen::Map<const Eigen::VectorXd>(wlist.data(), static_cast<Eigen::Index>(wlist.size())));
    const Trajectory tr = run_constant_mix(w, rsimple);
    const MetricsReport m = performance_metrics(tr, b_ppy);
    std::ostringstream body;
    if (b_format == "json") {
      nlohmann::json j;
      j["command"] = "backtest";
      j["periods"] = static_cast<int>(tr.periods());
      j["periods_per_year"] = b_ppy;
      nlohmann::json mj;
      for (int k = 0; k < 6; ++k) {
        mj[MetricsReport::kMetricNames[k]] = detail::json_number(m.metric(k));
      }
      mj["zero_volatility"] = m.zero_volatility;
      j["metrics"] = mj;
      body << j.dump(2) << "\n";
    } else if (b_format == "csv") {
      body << "metric,value\n";
      for (int k = 0; k < 6; ++k) {
        body << MetricsReport::kMetricNames[k] << "," << detail::fmt_double(m.metric(k)) << "\n";
      }
    } else {
      throw ValidationError("--format must be csv or json");
    }
    cli::emit(body.str(), b_out, out);
    if (!b_values_out.empty()) {
      std::ostringstream vb;
      vb << "t,value\n";
      for (size_t t = 0; t < tr.values.size(); ++t) {
        vb << t << "," << detail::fmt_double(tr.values[t]) << "\n";
      }
      cli::emit(vb.str(), b_values_out, out);
    }
  });

  // --- sweep --------------------------------------------------------------
  std::string s_prices, s_deltas, s_norm = "l2", s_format = "csv", s_out;
  double s_p = 2.0;
  auto* sw = app.add_subcommand("sweep", "Diversification sweep over delta values");
  sw->add_option("--prices", s_prices, "wide CSV price file")->required();
  sw->add_option("--deltas", s_deltas, "comma-separated delta grid")->required();
  sw->add_option("--p", s_p, "Wasserstein order")->default_val(2.0);
  sw->add_option("--norm", s_norm, "ground norm: l2, l1, linf")->default_val("l2");
  sw->add_option("--format", s_format, "csv or json")->default_val("csv");
  sw->add_option("--out", s_out, "output path (default: stdout)");
  sw->callback([&]() {
    const PriceTable pt = load_prices(s_prices);
    const ReturnsMatrix rlog = log_returns(pt);
    const SweepTable table = diversification_sweep(
        rlog, cli::parse_double_list(s_deltas, "--deltas"), SolverSettings{}, s_p,
        cli::parse_norm(s_norm));
    std::ostringstream body;
    if (s_format == "csv") {
      table.write_csv(body);
    } else if (s_format == "json") {
      body << table.to_json().dump(2) << "\n";
    } else {
      throw ValidationError("--format must be csv or json");
    }
    cli::emit(body.str(), s_out, out);
    int failed = 0;
    for (const auto& row : table.rows) failed += row.failed ? 1 : 0;
    err << "sweep: " << table.rows.size() << " rows, " << failed << " failed\n";
    if (failed > 0) exit_code = 2;
  });

  // --- study --------------------------------------------------------------
  std::string st_prices, st_deltas = "0,0.1,0.2,0.3,0.4", st_norm = "l2";
  std::string st_format = "json", st_out, st_bands_out, st_box_out;
  std::string st_test_start, st_test_end;
  int st_train = 252, st_trials = 1000, st_subset = 10, st_threads = 1, st_ppy = 252;
  std::uint64_t st_seed = 0;
  double st_p = 2.0;
  auto* st = app.add_subcommand("study", "Randomized out-of-sample study");
  st->add_option("--prices", st_prices, "wide CSV price file")->required();
  st->add_option("--deltas", st_deltas, "comma-separated delta grid")->default_val("0,0.1,0.2,0.3,0.4");
  st->add_option("--train-days", st_train, "training periods")->default_val(252);
  st->add_option("--test-start", st_test_start, "first test date (YYYY-MM-DD)");
  st->add_option("--test-end", st_test_end, "last test date (YYYY-MM-DD)");
  st->add_option("--trials", st_trials, "number of random subsets")->default_val(1000);
  st->add_option("--subset-size", st_subset, "assets per subset")->default_val(10);
  st->add_option("--seed", st_seed, "RNG seed")->default_val(0);
  st->add_option("--threads", st_threads, "worker threads")->default_val(1);
  st->add_option("--periods-per-year", st_ppy, "annualization factor")->default_val(252);
  st->add_option("--p", st_p, "Wasserstein order")->default_val(2.0);
  st->add_option("--norm", st_norm, "ground norm: l2, l1, linf")->default_val("l2");
  st->add_option("--format", st_format, "csv or json")->default_val("json");
  st->add_option("--out", st_out, "output path (default: stdout)");
  st->add_option("--bands-out", st_bands_out, "also write band summary CSV (delta,t,mean,stdev)");
  st->add_option("--box-out", st_box_out, "also write boxplot statistics CSV");
  st->callback([&]() {
    StudyConfig cfg;
    cfg.universe = load_prices(st_prices);
    cfg.subset_size = st_subset;
    cfg.train_periods = st_train;
    if (!st_test_start.empty()) cfg.test_start = cli::parse_date_flag(st_test_start, "--test-start");
    if (!st_test_end.empty()) cfg.test_end = cli::parse_date_flag(st_test_end, "--test-end");
    cfg.trials = st_trials;
    cfg.delta_grid = cli::parse_double_list(st_deltas, "--deltas");
    cfg.seed = st_seed;
    cfg.threads = st_threads;
    cfg.periods_per_year = st_ppy;
    cfg.p = st_p;
    cfg.norm = cli::parse_norm(st_norm);
    const StudyReport rep = random_subset_study(cfg);
    std::ostringstream body;
    if (st_format == "json") {
      body << rep.to_json().dump(2) << "\n";
    } else if (st_format == "csv") {
      rep.write_csv_long(body);
    } else {
      throw ValidationError("--format must be csv or json");
    }
    cli::emit(body.str(), st_out, out);
    if (!st_bands_out.empty()) {
      std::ostringstream bb;
      rep.write_bands_csv(bb);
      cli::emit(bb.str(), st_bands_out, out);
    }
    if (!st_box_out.empty()) {
      std::ostringstream bb;
      rep.write_box_csv(bb);
      cli::emit(bb.str(), st_box_out, out);
    }
    const int failed = rep.failed_cells_total();
    err << "study: " << rep.cells.size() << " cells, " << failed << " failed\n";
    if (failed > 0) exit_code = 2;
  });

  // --- check-duality --------------------------------------------------------
  std::uint64_t cd_seed = 0;
  int cd_instances = 100;
  double cd_p = 2.0, cd_tol = 1e-5;
  std::string cd_norm = "l2";
  auto* cd = app.add_subcommand("check-duality",
                                "Randomized primal/dual identity check of the inner problem");
  cd->add_option("--seed", cd_seed, "RNG seed")->default_val(0);
  cd->add_option("--instances", cd_instances, "number of random instances")->default_val(100);
  cd->add_option("--p", cd_p, "Wasserstein order")->default_val(2.0);
  cd->add_option("--norm", cd_norm, "ground norm: l2, l1, linf")->default_val("l2");
  cd->add_option("--tol", cd_tol, "pass threshold on the max gap")->default_val(1e-5);
  cd->callback([&]() {
    const DualityCheckResult res =
        run_duality_suite(cd_seed, cd_instances, cd_p, cli::parse_norm(cd_norm));
    out << "max_gap=" << detail::fmt_double(res.max_gap) << "\n";
    err << "check-duality: " << res.instances << " instances, " << res.evaluations
        << " evaluations, tol=" << detail::fmt_double(cd_tol) << "\n";
    if (!(res.max_gap <= cd_tol)) exit_code = 2;
  });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("wkelly");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace wkelly
