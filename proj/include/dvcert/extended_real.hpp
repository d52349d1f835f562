#pragma once

#include <compare>
#include <limits>
#include <ostream>

namespace dvcert {

/// Value in [0, +inf] with a total order. Addition follows the convention
/// a + inf = inf, and every a satisfies a <= inf.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr explicit ExtReal(double v) : v_(v) {}

  static constexpr ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

  [[nodiscard]] constexpr bool is_infinite() const { return v_ == std::numeric_limits<double>::infinity(); }
  [[nodiscard]] constexpr bool is_finite() const { return !is_infinite(); }
  [[nodiscard]] constexpr double value() const { return v_; }

  friend constexpr ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite()) return infinity();
    return ExtReal(a.v_ + b.v_);
  }
  friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }
  friend constexpr bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }

  friend std::ostream& operator<<(std::ostream& os, ExtReal x) {
    if (x.is_infinite()) return os << "inf";
    return os << x.v_;
  }

 private:
  double v_ = 0.0;
};

}  // namespace dvcert
