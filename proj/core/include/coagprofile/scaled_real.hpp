#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "coagprofile/errors.hpp"

namespace coagprofile {

/// Sign-mantissa-exponent real number: value = mantissa * 2^exponent with
/// |mantissa| in [1,2) (or exactly 0). The iteration works with factors like
/// exp(x/rho) whose magnitude reaches e^±4000 before they cancel against a
/// partner factor, far outside double range; pairing them as ScaledReal keeps
/// every intermediate exactly representable.
///
/// Conversion back to double throws NumericRange on overflow; underflow
/// flushes to (sub)normal/zero, which is the desired behaviour for tail
/// quantities that are genuinely negligible.
class ScaledReal {
 public:
  /// Exponents beyond this are treated as corrupt input rather than data.
  static constexpr std::int64_t kExpLimit = 1'000'000;

  constexpr ScaledReal() : mantissa_(0.0), exponent_(0) {}

  static ScaledReal zero() { return ScaledReal(); }

  static ScaledReal from_double(double value) {
    if (value == 0.0) return ScaledReal();
    require(std::isfinite(value), ErrorCode::NumericRange,
            "ScaledReal::from_double: non-finite input");
    int exp = 0;
    const double frac = std::frexp(value, &exp);  // |frac| in [0.5, 1)
    return ScaledReal(frac * 2.0, static_cast<std::int64_t>(exp) - 1);
  }

  /// exp(x) as a ScaledReal, valid far outside double range.
  static ScaledReal from_exp(double x) {
    require(std::isfinite(x), ErrorCode::NumericRange, "ScaledReal::from_exp: non-finite input");
    constexpr double kLog2E = 1.4426950408889634074;
    return from_pow2(x * kLog2E);
  }

  /// 2^t as a ScaledReal.
  static ScaledReal from_pow2(double t) {
    require(std::isfinite(t), ErrorCode::NumericRange, "ScaledReal::from_pow2: non-finite input");
    const double ip = std::floor(t);
    require(std::abs(ip) < static_cast<double>(kExpLimit), ErrorCode::NumericRange,
            "ScaledReal::from_pow2: exponent beyond representable range");
    double mant = std::exp2(t - ip);  // in [1, 2]
    auto exponent = static_cast<std::int64_t>(ip);
    if (mant >= 2.0) {
      mant *= 0.5;
      exponent += 1;
    }
    return ScaledReal(mant, exponent);
  }

  bool is_zero() const { return mantissa_ == 0.0; }
  int sign() const { return mantissa_ > 0.0 ? 1 : (mantissa_ < 0.0 ? -1 : 0); }
  double mantissa() const { return mantissa_; }
  std::int64_t exponent() const { return exponent_; }

  /// Natural log of |value|; -inf for zero.
  double log_abs() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    constexpr double kLn2 = 0.69314718055994530942;
    return std::log(std::abs(mantissa_)) + static_cast<double>(exponent_) * kLn2;
  }

  /// Conversion to double. Overflow is an error; underflow flushes toward 0.
  double to_double() const {
    if (is_zero()) return 0.0;
    require(exponent_ <= 1024, ErrorCode::NumericRange,
            "ScaledReal::to_double: magnitude exceeds double range");
    if (exponent_ < -1100) return 0.0;
    return std::ldexp(mantissa_, static_cast<int>(exponent_));
  }

  ScaledReal operator-() const {
    ScaledReal r = *this;
    r.mantissa_ = -r.mantissa_;
    return r;
  }

  ScaledReal operator*(const ScaledReal& other) const {
    if (is_zero() || other.is_zero()) return ScaledReal();
    double mant = mantissa_ * other.mantissa_;  // |mant| in [1, 4)
    std::int64_t exponent = exponent_ + other.exponent_;
    if (std::abs(mant) >= 2.0) {
      mant *= 0.5;
      exponent += 1;
    }
    check_exponent(exponent);
    return ScaledReal(mant, exponent);
  }

  ScaledReal operator*(double factor) const { return *this * from_double(factor); }

  ScaledReal operator+(const ScaledReal& other) const {
    if (is_zero()) return other;
    if (other.is_zero()) return *this;
    const ScaledReal* hi = this;
    const ScaledReal* lo = &other;
    if (hi->exponent_ < lo->exponent_) std::swap(hi, lo);
    const std::int64_t shift = hi->exponent_ - lo->exponent_;
    if (shift > 128) return *hi;  // the smaller term is below 2^-128 relative
    const double sum = hi->mantissa_ + std::ldexp(lo->mantissa_, -static_cast<int>(shift));
    if (sum == 0.0) return ScaledReal();
    int exp = 0;
    const double frac = std::frexp(sum, &exp);
    std::int64_t exponent = hi->exponent_ + static_cast<std::int64_t>(exp) - 1;
    check_exponent(exponent);
    return ScaledReal(frac * 2.0, exponent);
  }

  ScaledReal operator-(const ScaledReal& other) const { return *this + (-other); }

  /// Comparison of |*this| vs |other|: -1, 0, +1.
  int compare_abs(const ScaledReal& other) const {
    if (is_zero() && other.is_zero()) return 0;
    if (is_zero()) return -1;
    if (other.is_zero()) return 1;
    if (exponent_ != other.exponent_) return exponent_ < other.exponent_ ? -1 : 1;
    const double a = std::abs(mantissa_);
    const double b = std::abs(other.mantissa_);
    return a < b ? -1 : (a > b ? 1 : 0);
  }

 private:
  ScaledReal(double mantissa, std::int64_t exponent) : mantissa_(mantissa), exponent_(exponent) {}

  static void check_exponent(std::int64_t exponent) {
    require(exponent > -kExpLimit && exponent < kExpLimit, ErrorCode::NumericRange,
            "ScaledReal: exponent beyond representable range");
  }

  double mantissa_;
  std::int64_t exponent_;
};

inline ScaledReal operator*(double factor, const ScaledReal& value) { return value * factor; }

}  // namespace coagprofile
