#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wkelly/errors.hpp"
#include "wkelly/types.hpp"

namespace wkelly {

struct Date {
  int year = 1970, month = 1, day = 1;

  friend bool operator==(const Date& a, const Date& b) {
    return a.year == b.year && a.month == b.month && a.day == b.day;
  }
  friend bool operator<(const Date& a, const Date& b) {
    if (a.year != b.year) return a.year < b.year;
    if (a.month != b.month) return a.month < b.month;
    return a.day < b.day;
  }
  friend bool operator<=(const Date& a, const Date& b) { return a < b || a == b; }

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

  static int days_in_month(int y, int m) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[m - 1];
  }

  bool valid() const {
    return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
  }

  /// Parses strict ISO YYYY-MM-DD; returns false on any malformation.
  static bool parse(const std::string& s, Date& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    out.year = std::stoi(s.substr(0, 4));
    out.month = std::stoi(s.substr(5, 2));
    out.day = std::stoi(s.substr(8, 2));
    return out.valid();
  }

  Date next_day() const {
    Date d = *this;
    if (++d.day > days_in_month(d.year, d.month)) {
      d.day = 1;
      if (++d.month > 12) {
        d.month = 1;
        ++d.year;
      }
    }
    return d;
  }
};

/// Price history: strictly increasing dates, positive prices, no gaps.
struct PriceTable {
  std::vector<Date> dates;       // T+1 rows
  Eigen::MatrixXd prices;        // (T+1) x n
  std::vector<std::string> asset_labels;

  Eigen::Index n_rows() const { return prices.rows(); }
  Eigen::Index n_assets() const { return prices.cols(); }

  void validate() const {
    if (prices.rows() < 1 || prices.cols() < 1) {
      throw ValidationError("PriceTable: empty table");
    }
    if (static_cast<Eigen::Index>(dates.size()) != prices.rows() ||
        static_cast<Eigen::Index>(asset_labels.size()) != prices.cols()) {
      throw DimensionMismatch("PriceTable: dates/labels do not match the price matrix");
    }
    if (!(prices.array() > 0.0).all() || !prices.allFinite()) {
      throw NonPositivePrice("PriceTable: prices must be finite and positive");
    }
    for (size_t t = 1; t < dates.size(); ++t) {
      if (!(dates[t - 1] < dates[t])) {
        throw NonMonotoneDates("PriceTable: dates must be strictly increasing");
      }
    }
  }
};

enum class PriceFormat { WideCSV };

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trimmed(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

/// Loads a wide CSV price file: header `date,LABEL1,...,LABELn`, one row per
/// trading day, ISO dates, plain decimal prices. Column order is preserved.
inline PriceTable load_prices(const std::string& path, PriceFormat format = PriceFormat::WideCSV) {
  if (format != PriceFormat::WideCSV) {
    throw ValidationError("load_prices: unknown format");
  }
  std::ifstream in(path);
  if (!in) throw IoError("load_prices: cannot open '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("load_prices: read failure on '" + path + "'");

  // Strip a UTF-8 BOM if present.
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    content.erase(0, 3);
  }

  std::vector<std::string> lines;
  {
    std::string cur;
    std::istringstream ss(content);
    while (std::getline(ss, cur)) lines.push_back(cur);
  }
  while (!lines.empty() && detail::trimmed(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(path + ": empty file");

  const auto header = detail::split_csv_line(lines[0]);
  if (header.empty() || detail::trimmed(header[0]) != "date") {
    throw ParseError(path + ":1: first header column must be 'date'");
  }
  if (header.size() < 2) {
    throw ParseError(path + ":1: no asset columns");
  }
  std::vector<std::string> labels;
  for (size_t c = 1; c < header.size(); ++c) {
    std::string lab = detail::trimmed(header[c]);
    if (lab.empty()) {
      throw ParseError(path + ":1: empty asset label in column " + std::to_string(c + 1));
    }
    labels.push_back(lab);
  }

  const size_t n = labels.size();
  const size_t rows = lines.size() - 1;
  if (rows < 1) throw ParseError(path + ": no data rows");

  PriceTable pt;
  pt.asset_labels = labels;
  pt.prices.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  pt.dates.resize(rows);

  for (size_t rline = 1; rline < lines.size(); ++rline) {
    const size_t lineno = rline + 1;
    const auto cells = detail::split_csv_line(lines[rline]);
    if (cells.size() != n + 1) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(n + 1) + " cells, found " + std::to_string(cells.size()));
    }
    Date d;
    const std::string date_cell = detail::trimmed(cells[0]);
    if (date_cell.empty()) {
      throw MissingValue(path + ":" + std::to_string(lineno) + ": column 1: empty date");
    }
    if (!Date::parse(date_cell, d)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad date '" + date_cell + "'");
    }
    pt.dates[rline - 1] = d;
    for (size_t c = 0; c < n; ++c) {
      const std::string cell = detail::trimmed(cells[c + 1]);
      if (cell.empty()) {
        throw MissingValue(path + ":" + std::to_string(lineno) + ": column " +
                           std::to_string(c + 2) + " (" + labels[c] + "): missing value");
      }
      char* end = nullptr;
      const double px = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || !std::isfinite(px)) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": column " +
                         std::to_string(c + 2) + ": bad number '" + cell + "'");
      }
      if (px <= 0.0) {
        throw NonPositivePrice(path + ":" + std::to_string(lineno) + ": column " +
                               std::to_string(c + 2) + " (" + labels[c] + "): price " +
                               cell + " is not positive");
      }
      pt.prices(static_cast<Eigen::Index>(rline - 1), static_cast<Eigen::Index>(c)) = px;
    }
    if (rline >= 2 && !(pt.dates[rline - 2] < pt.dates[rline - 1])) {
      throw NonMonotoneDates(path + ":" + std::to_string(lineno) + ": date " + date_cell +
                             " does not increase");
    }
  }
  pt.validate();
  return pt;
}

inline ReturnsMatrix log_returns(const PriceTable& pt) {
  pt.validate();
  const Eigen::Index T = pt.n_rows() - 1;
  if (T < 1) throw InsufficientData("log_returns: need at least two price rows");
  Eigen::MatrixXd r(T, pt.n_assets());
  for (Eigen::Index t = 0; t < T; ++t) {
    r.row(t) = (pt.prices.row(t + 1).array() / pt.prices.row(t).array()).log();
  }
  return ReturnsMatrix(std::move(r), ReturnKind::Log, pt.asset_labels);
}

inline ReturnsMatrix simple_returns(const PriceTable& pt) {
  pt.validate();
  const Eigen::Index T = pt.n_rows() - 1;
  if (T < 1) throw InsufficientData("simple_returns: need at least two price rows");
  Eigen::MatrixXd r(T, pt.n_assets());
  for (Eigen::Index t = 0; t < T; ++t) {
    r.row(t) = pt.prices.row(t + 1).array() / pt.prices.row(t).array() - 1.0;
  }
  return ReturnsMatrix(std::move(r), ReturnKind::Simple, pt.asset_labels);
}

/// Radius scaling rule epsilon = delta * rbar, where rbar is the mean
/// absolute per-period log return across all assets and periods.
struct EpsilonRule {
  double delta_scale = 0.0;
  double rbar = 0.0;
  double epsilon() const { return delta_scale * rbar; }
};

inline EpsilonRule epsilon_from_delta(const ReturnsMatrix& samples, double delta_scale) {
  if (samples.kind() != ReturnKind::Log) {
    throw ValidationError("epsilon_from_delta: samples must be log returns");
  }
  if (!(delta_scale >= 0.0) || !std::isfinite(delta_scale)) {
    throw ValidationError("epsilon_from_delta: delta must be finite and >= 0");
  }
  const double rbar = samples.values().array().abs().mean();
  if (rbar == 0.0 && delta_scale > 0.0) {
    throw DegenerateData("epsilon_from_delta: all returns are zero, radius rule degenerates");
  }
  return EpsilonRule{delta_scale, rbar};
}

}  // namespace wkelly
