#pragma once

#include <cmath>
#include <ostream>

#include "wkelly/errors.hpp"

namespace wkelly {

/// Extended-real value: a finite double or an explicit +/-infinity sentinel.
/// Unbounded optimization values are reported through this type so that IEEE
/// infinities never leak out of ordinary arithmetic unnoticed.
class ExtendedReal {
 public:
  ExtendedReal() : value_(0.0), state_(State::Finite) {}
  ExtendedReal(double v) : value_(v), state_(State::Finite) {  // NOLINT(implicit)
    if (!std::isfinite(v)) {
      throw ValidationError("ExtendedReal: finite constructor given non-finite value");
    }
  }

  static ExtendedReal neg_infinity() { return ExtendedReal(State::NegInf); }
  static ExtendedReal pos_infinity() { return ExtendedReal(State::PosInf); }

  bool is_finite() const { return state_ == State::Finite; }
  bool is_neg_infinity() const { return state_ == State::NegInf; }
  bool is_pos_infinity() const { return state_ == State::PosInf; }

  /// Finite value; throws if the sentinel is set.
  double value() const {
    if (!is_finite()) {
      throw Error("ExtendedReal: value() called on infinite sentinel");
    }
    return value_;
  }

  /// Finite value, or the given fallback for either infinity.
  double value_or(double fallback) const { return is_finite() ? value_ : fallback; }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.state_ != b.state_) return false;
    return a.state_ != State::Finite || a.value_ == b.value_;
  }
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.state_ == b.state_) return a.state_ == State::Finite && a.value_ < b.value_;
    if (a.state_ == State::NegInf) return true;
    if (b.state_ == State::PosInf) return a.state_ != State::PosInf;
    return false;
  }
  friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return a < b || a == b; }
  friend bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
  friend bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return b <= a; }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
    if (x.is_neg_infinity()) return os << "-inf";
    if (x.is_pos_infinity()) return os << "+inf";
    return os << x.value_;
  }

 private:
  enum class State { Finite, NegInf, PosInf };
  explicit ExtendedReal(State s) : value_(0.0), state_(s) {}

  double value_;
  State state_;
};

}  // namespace wkelly
