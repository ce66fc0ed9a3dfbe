#pragma once

#include <algorithm>
#include <atomic>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "wkelly/backtest.hpp"
#include "wkelly/data_ingest.hpp"
#include "wkelly/errors.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/rng.hpp"
#include "wkelly/robust_solver.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

namespace detail {

/// %.17g round-trips doubles and prints identically across runs.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline nlohmann::json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace detail

/// Portfolio concentration measures.
inline double herfindahl_index(const SimplexWeights& w) { return w.vec().squaredNorm(); }

inline double weight_entropy(const SimplexWeights& w) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) h -= w[i] * std::log(w[i]);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Diversification sweep over the radius proportion delta.
// ---------------------------------------------------------------------------

struct SweepRow {
  double delta_scale = 0.0;
  double epsilon = 0.0;
  bool failed = false;
  std::string error;
  SolveStatus status = SolveStatus::Optimal;
  Eigen::VectorXd weights;
  double robust_objective = 0.0;
  double herfindahl = 0.0;
  double entropy = 0.0;
};

struct SweepTable {
  double rbar = 0.0;
  std::vector<std::string> asset_labels;
  std::vector<SweepRow> rows;

  void write_csv(std::ostream& os) const {
    os << "delta,epsilon,objective,status,herfindahl,entropy";
    for (const auto& lab : asset_labels) os << ",w_" << lab;
    os << "\n";
    for (const auto& row : rows) {
      os << detail::fmt_double(row.delta_scale) << "," << detail::fmt_double(row.epsilon) << ",";
      if (row.weights.size() == 0) {
        os << "nan," << (row.failed ? "failed" : to_string(row.status)) << ",nan,nan";
        for (size_t i = 0; i < asset_labels.size(); ++i) os << ",nan";
      } else {
        os << detail::fmt_double(row.robust_objective) << "," << to_string(row.status) << ","
           << detail::fmt_double(row.herfindahl) << "," << detail::fmt_double(row.entropy);
        for (Eigen::Index i = 0; i < row.weights.size(); ++i) {
          os << "," << detail::fmt_double(row.weights[i]);
        }
      }
      os << "\n";
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rbar"] = detail::json_number(rbar);
    j["asset_labels"] = asset_labels;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json rj;
      rj["delta"] = detail::json_number(row.delta_scale);
      rj["epsilon"] = detail::json_number(row.epsilon);
      rj["failed"] = row.failed;
      if (!row.error.empty()) rj["error"] = row.error;
      if (row.weights.size() == 0) {
        rj["status"] = "failed";
      } else {
        rj["status"] = to_string(row.status);
        rj["objective"] = detail::json_number(row.robust_objective);
        rj["herfindahl"] = detail::json_number(row.herfindahl);
        rj["entropy"] = detail::json_number(row.entropy);
        std::vector<double> w(row.weights.data(), row.weights.data() + row.weights.size());
        rj["weights"] = w;
      }
      j["rows"].push_back(rj);
    }
    return j;
  }
};

/// Solves the robust program across a grid of delta values (ascending,
/// duplicates preserved); the delta = 0 row carries the plain Kelly solution.
/// Failed rows are marked and the sweep continues.
inline SweepTable diversification_sweep(const ReturnsMatrix& samples,
                                        std::vector<double> delta_grid,
                                        const SolverSettings& settings = {},
                                        double p = 2.0, Norm norm = Norm::L2) {
  if (samples.kind() != ReturnKind::Log) {
    throw ValidationError("diversification_sweep: samples must be log returns");
  }
  if (delta_grid.empty()) throw ValidationError("diversification_sweep: empty delta grid");
  for (double d : delta_grid) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw ValidationError("diversification_sweep: delta values must be finite and >= 0");
    }
  }
  std::stable_sort(delta_grid.begin(), delta_grid.end());

  SweepTable table;
  table.rbar = samples.values().array().abs().mean();
  table.asset_labels = samples.asset_labels();
  for (double d : delta_grid) {
    SweepRow row;
    row.delta_scale = d;
    row.epsilon = d * table.rbar;
    try {
      if (d == 0.0) {
        KellySolution ks = solve_kelly(samples, settings);
        row.status = ks.status;
        row.weights = ks.weights.vec();
        row.robust_objective = ks.objective;
        row.herfindahl = herfindahl_index(ks.weights);
        row.entropy = weight_entropy(ks.weights);
      } else {
        if (table.rbar == 0.0) {
          throw DegenerateData("diversification_sweep: all returns zero, cannot scale radius");
        }
        RobustSolution rs = solve_wkelly(samples, BallSpec::make(p, row.epsilon, norm), settings);
        row.status = rs.status;
        row.weights = rs.weights.vec();
        row.robust_objective = rs.objective;
        row.herfindahl = herfindahl_index(rs.weights);
        row.entropy = weight_entropy(rs.weights);
      }
      row.failed = row.status != SolveStatus::Optimal;
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Randomized out-of-sample study.
// ---------------------------------------------------------------------------

struct StudyConfig {
  PriceTable universe;
  int subset_size = 10;
  int train_periods = 252;
  std::optional<Date> test_start;  // default: right after the first train_periods rows
  std::optional<Date> test_end;    // default: end of history
  int trials = 1000;
  std::vector<double> delta_grid{0.0, 0.1, 0.2, 0.3, 0.4};
  std::uint64_t seed = 0;
  int threads = 1;
  int periods_per_year = 252;
  double p = 2.0;
  Norm norm = Norm::L2;
  SolverSettings solver;

  void validate() const {
    universe.validate();
    if (subset_size < 1 || subset_size > universe.n_assets()) {
      throw ValidationError("StudyConfig: subset_size must be in [1, n_assets]");
    }
    if (train_periods < 1) throw ValidationError("StudyConfig: train_periods must be >= 1");
    if (trials < 1) throw ValidationError("StudyConfig: trials must be >= 1");
    if (delta_grid.empty()) throw ValidationError("StudyConfig: empty delta grid");
    for (double d : delta_grid) {
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw ValidationError("StudyConfig: delta values must be finite and >= 0");
      }
    }
    if (threads < 1) throw ValidationError("StudyConfig: threads must be >= 1");
    if (periods_per_year < 1) throw ValidationError("StudyConfig: periods_per_year must be >= 1");
    if (test_start && test_end && !(*test_start <= *test_end)) {
      throw ValidationError("StudyConfig: test_start must not exceed test_end");
    }
    solver.validate();
  }
};

struct BoxStats {
  double min = std::numeric_limits<double>::quiet_NaN();
  double q1 = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q3 = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  int count = 0;
};

/// Boxplot statistics with the inclusive-median quartile convention: for an
/// odd count the median element belongs to both halves.
inline BoxStats box_stats(std::vector<double> x) {
  BoxStats b;
  b.count = static_cast<int>(x.size());
  if (x.empty()) return b;
  std::sort(x.begin(), x.end());
  auto median_of = [](const std::vector<double>& v, size_t lo, size_t hi) {  // [lo, hi)
    const size_t m = hi - lo;
    return m % 2 == 1 ? v[lo + m / 2] : 0.5 * (v[lo + m / 2 - 1] + v[lo + m / 2]);
  };
  const size_t m = x.size();
  b.min = x.front();
  b.max = x.back();
  b.median = median_of(x, 0, m);
  const size_t half = (m + 1) / 2;  // inclusive: odd counts keep the median in both halves
  b.q1 = median_of(x, 0, half);
  b.q3 = median_of(x, m - half, m);
  double s = 0.0;
  for (double v : x) s += v;
  b.mean = s / static_cast<double>(m);
  return b;
}

struct TrialCell {
  int trial = 0;
  double delta = 0.0;
  bool failed = false;
  std::string error;
  MetricsReport metrics;
};

struct DeltaAggregate {
  double delta = 0.0;
  std::string label;  // "kelly" for delta = 0, "wasserstein-kelly" otherwise
  int failed_count = 0;
  std::array<BoxStats, 6> box;  // indexed like MetricsReport::kMetricNames
  BandSummary band;
};

struct StudyReport {
  // Echo of the configuration that produced the report.
  int subset_size = 0;
  int train_periods = 0;
  int trials = 0;
  int periods_per_year = 0;
  std::uint64_t seed = 0;
  double p = 2.0;
  Norm norm = Norm::L2;
  std::vector<double> delta_grid;
  std::string test_start, test_end;
  int universe_assets = 0;
  int test_periods = 0;
  std::string quartile_convention = "inclusive-median";

  std::vector<TrialCell> cells;          // trial-major, delta-minor
  std::vector<DeltaAggregate> per_delta;

  int failed_cells_total() const {
    int k = 0;
    for (const auto& c : cells) k += c.failed ? 1 : 0;
    return k;
  }

  /// Long-format CSV: trial,delta,metric,value. Failed cells emit a single
  /// row with metric "failed".
  void write_csv_long(std::ostream& os) const {
    os << "trial,delta,metric,value\n";
    for (const auto& c : cells) {
      if (c.failed) {
        os << c.trial << "," << detail::fmt_double(c.delta) << ",failed,1\n";
        continue;
      }
      for (int k = 0; k < 6; ++k) {
        os << c.trial << "," << detail::fmt_double(c.delta) << ","
           << MetricsReport::kMetricNames[k] << "," << detail::fmt_double(c.metrics.metric(k))
           << "\n";
      }
    }
  }

  /// Band summary CSV: delta,t,mean,stdev.
  void write_bands_csv(std::ostream& os) const {
    os << "delta,t,mean,stdev\n";
    for (const auto& agg : per_delta) {
      for (size_t t = 0; t < agg.band.mean.size(); ++t) {
        os << detail::fmt_double(agg.delta) << "," << t << ","
           << detail::fmt_double(agg.band.mean[t]) << ","
           << detail::fmt_double(agg.band.stdev[t]) << "\n";
      }
    }
  }

  /// Boxplot statistics CSV: delta,metric,min,q1,median,q3,max,mean,count.
  void write_box_csv(std::ostream& os) const {
    os << "delta,metric,min,q1,median,q3,max,mean,count\n";
    for (const auto& agg : per_delta) {
      for (int k = 0; k < 6; ++k) {
        const BoxStats& b = agg.box[static_cast<size_t>(k)];
        os << detail::fmt_double(agg.delta) << "," << MetricsReport::kMetricNames[k] << ","
           << detail::fmt_double(b.min) << "," << detail::fmt_double(b.q1) << ","
           << detail::fmt_double(b.median) << "," << detail::fmt_double(b.q3) << ","
           << detail::fmt_double(b.max) << "," << detail::fmt_double(b.mean) << "," << b.count
           << "\n";
      }
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    nlohmann::json meta;
    meta["kind"] = "wkelly_study";
    meta["subset_size"] = subset_size;
    meta["train_periods"] = train_periods;
    meta["trials"] = trials;
    meta["periods_per_year"] = periods_per_year;
    meta["seed"] = seed;
    meta["p"] = p;
    meta["norm"] = to_string(norm);
    meta["delta_grid"] = delta_grid;
    meta["test_start"] = test_start;
    meta["test_end"] = test_end;
    meta["universe_assets"] = universe_assets;
    meta["test_periods"] = test_periods;
    meta["quartile_convention"] = quartile_convention;
    meta["failed_cells_total"] = failed_cells_total();
    j["meta"] = meta;

    j["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json cj;
      cj["trial"] = c.trial;
      cj["delta"] = c.delta;
      cj["failed"] = c.failed;
      if (c.failed) {
        cj["error"] = c.error;
      } else {
        nlohmann::json mj;
        for (int k = 0; k < 6; ++k) {
          mj[MetricsReport::kMetricNames[k]] = detail::json_number(c.metrics.metric(k));
        }
        cj["metrics"] = mj;
      }
      j["cells"].push_back(cj);
    }

    j["aggregates"] = nlohmann::json::array();
    for (const auto& agg : per_delta) {
      nlohmann::json aj;
      aj["delta"] = agg.delta;
      aj["label"] = agg.label;
      aj["failed_count"] = agg.failed_count;
      nlohmann::json bj;
      for (int k = 0; k < 6; ++k) {
        const BoxStats& b = agg.box[static_cast<size_t>(k)];
        nlohmann::json sj;
        sj["min"] = detail::json_number(b.min);
        sj["q1"] = detail::json_number(b.q1);
        sj["median"] = detail::json_number(b.median);
        sj["q3"] = detail::json_number(b.q3);
        sj["max"] = detail::json_number(b.max);
        sj["mean"] = detail::json_number(b.mean);
        sj["count"] = b.count;
        bj[MetricsReport::kMetricNames[k]] = sj;
      }
      aj["box"] = bj;
      nlohmann::json band;
      nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
      for (double v : agg.band.mean) means.push_back(detail::json_number(v));
      for (double v : agg.band.stdev) stds.push_back(detail::json_number(v));
      band["mean"] = means;
      band["stdev"] = stds;
      aj["band"] = band;
      j["aggregates"].push_back(aj);
    }
    return j;
  }
};

namespace detail {

struct StudyWindows {
  Eigen::Index train_lo = 0, train_hi = 0;  // [lo, hi) rows of the return matrices
  Eigen::Index test_lo = 0, test_hi = 0;
};

inline StudyWindows study_windows(const StudyConfig& cfg, const std::vector<Date>& dates,
                                  Eigen::Index T) {
  // Return row t covers the step ending at dates[t+1].
  StudyWindows wnd;
  Eigen::Index test_first = cfg.train_periods;
  if (cfg.test_start) {
    test_first = T;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (*cfg.test_start <= dates[static_cast<size_t>(t + 1)]) {
        test_first = t;
        break;
      }
    }
  }
  Eigen::Index test_end_excl = T;
  if (cfg.test_end) {
    test_end_excl = 0;
    for (Eigen::Index t = T; t > 0; --t) {
      if (dates[static_cast<size_t>(t)] <= *cfg.test_end) {
        test_end_excl = t;
        break;
      }
    }
  }
  wnd.train_hi = test_first;
  wnd.train_lo = test_first - cfg.train_periods;
  wnd.test_lo = test_first;
  wnd.test_hi = test_end_excl;
  if (wnd.train_lo < 0) {
    throw InsufficientData("random_subset_study: not enough history before the test window");
  }
  if (wnd.test_hi <= wnd.test_lo) {
    throw InsufficientData("random_subset_study: empty test window");
  }
  return wnd;
}

inline ReturnsMatrix submatrix(const ReturnsMatrix& m, Eigen::Index row_lo, Eigen::Index row_hi,
                               const std::vector<int>& cols) {
  Eigen::MatrixXd out(row_hi - row_lo, static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> labels;
  labels.reserve(cols.size());
  for (size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) =
        m.values().block(row_lo, cols[k], row_hi - row_lo, 1);
    labels.push_back(m.asset_labels()[static_cast<size_t>(cols[k])]);
  }
  return ReturnsMatrix(std::move(out), m.kind(), std::move(labels));
}

}  // namespace detail

/// Runs the randomized out-of-sample comparison: per trial, draw a random
/// asset subset, fit the Kelly (delta = 0) and robust portfolios on the
/// train window, and backtest all of them on the test window. Identical
/// configurations produce byte-identical serialized reports regardless of
/// the thread count.
inline StudyReport random_subset_study(const StudyConfig& cfg) {
  cfg.validate();
  const ReturnsMatrix rlog = log_returns(cfg.universe);
  const ReturnsMatrix rsimple = simple_returns(cfg.universe);
  const Eigen::Index T = rlog.n_samples();
  const auto wnd = detail::study_windows(cfg, cfg.universe.dates, T);
  const size_t n_deltas = cfg.delta_grid.size();

  struct TrialOutput {
    std::vector<TrialCell> cells;
    std::vector<Trajectory> trajectories;  // parallel to cells; empty when failed
  };
  std::vector<TrialOutput> results(static_cast<size_t>(cfg.trials));

  auto run_trial = [&](int trial) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(trial));
    std::vector<int> subset = rng.sample_without_replacement(
        static_cast<int>(cfg.universe.n_assets()), cfg.subset_size);
    std::sort(subset.begin(), subset.end());
    ReturnsMatrix train = detail::submatrix(rlog, wnd.train_lo, wnd.train_hi, subset);
    ReturnsMatrix test = detail::submatrix(rsimple, wnd.test_lo, wnd.test_hi, subset);

    TrialOutput out;
    for (double d : cfg.delta_grid) {
      TrialCell cell;
      cell.trial = trial;
      cell.delta = d;
      Trajectory tr;
      try {
        SimplexWeights w = SimplexWeights::uniform(cfg.subset_size);
        SolveStatus status = SolveStatus::Optimal;
        if (d == 0.0) {
          KellySolution ks = solve_kelly(train, cfg.solver);
          w = ks.weights;
          status = ks.status;
        } else {
          const double eps = epsilon_from_delta(train, d).epsilon();
          RobustSolution rs = solve_wkelly(train, BallSpec::make(cfg.p, eps, cfg.norm), cfg.solver);
          w = rs.weights;
          status = rs.status;
        }
        if (status != SolveStatus::Optimal) {
          cell.failed = true;
          cell.error = std::string("solver status: ") + to_string(status);
        } else {
          tr = run_constant_mix(w, test);
          cell.metrics = performance_metrics(tr, cfg.periods_per_year);
        }
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      out.cells.push_back(std::move(cell));
      out.trajectories.push_back(std::move(tr));
    }
    results[static_cast<size_t>(trial)] = std::move(out);
  };

  if (cfg.threads <= 1) {
    for (int t = 0; t < cfg.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= cfg.trials) return;
        run_trial(t);
      }
    };
    std::vector<std::thread> pool;
    const int k = std::min(cfg.threads, cfg.trials);
    pool.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  StudyReport rep;
  rep.subset_size = cfg.subset_size;
  rep.train_periods = cfg.train_periods;
  rep.trials = cfg.trials;
  rep.periods_per_year = cfg.periods_per_year;
  rep.seed = cfg.seed;
  rep.p = cfg.p;
  rep.norm = cfg.norm;
  rep.delta_grid = cfg.delta_grid;
  rep.universe_assets = static_cast<int>(cfg.universe.n_assets());
  rep.test_periods = static_cast<int>(wnd.test_hi - wnd.test_lo);
  rep.test_start = cfg.universe.dates[static_cast<size_t>(wnd.test_lo + 1)].to_string();
  rep.test_end = cfg.universe.dates[static_cast<size_t>(wnd.test_hi)].to_string();

  for (int t = 0; t < cfg.trials; ++t) {
    for (size_t di = 0; di < n_deltas; ++di) {
      rep.cells.push_back(results[static_cast<size_t>(t)].cells[di]);
    }
  }

  for (size_t di = 0; di < n_deltas; ++di) {
    DeltaAggregate agg;
    agg.delta = cfg.delta_grid[di];
    agg.label = agg.delta == 0.0 ? "kelly" : "wasserstein-kelly";
    std::array<std::vector<double>, 6> series;
    std::vector<Trajectory> trajs;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialOutput& out = results[static_cast<size_t>(t)];
      if (out.cells[di].failed) {
        ++agg.failed_count;
        continue;
      }
      for (int k = 0; k < 6; ++k) {
        series[static_cast<size_t>(k)].push_back(out.cells[di].metrics.metric(k));
      }
      trajs.push_back(out.trajectories[di]);
    }
    for (int k = 0; k < 6; ++k) {
      agg.box[static_cast<size_t>(k)] = box_stats(series[static_cast<size_t>(k)]);
    }
    if (!trajs.empty()) agg.band = aggregate_trajectories(trajs);
    rep.per_delta.push_back(std::move(agg));
  }
  return rep;
}

}  // namespace wkelly
