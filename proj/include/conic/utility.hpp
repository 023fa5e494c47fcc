#pragma once

#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

namespace conic {

/// A real number or one of the two infinities, kept apart from IEEE inf so
/// that callers branch on it explicitly.
class ExtendedReal {
public:
  enum class Kind { Finite, MinusInfinity, PlusInfinity };

  constexpr ExtendedReal(double value = 0.0) noexcept : kind_(Kind::Finite), value_(value) {}

  static constexpr ExtendedReal minus_infinity() noexcept { return ExtendedReal(Kind::MinusInfinity); }
  static constexpr ExtendedReal plus_infinity() noexcept { return ExtendedReal(Kind::PlusInfinity); }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::Finite; }

  /// Throws for the infinities.
  double value() const;
  /// IEEE view: the infinities become +-inf.
  double to_double() const noexcept;

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) noexcept {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.value_ == b.value_);
  }

private:
  constexpr explicit ExtendedReal(Kind kind) noexcept : kind_(kind), value_(0.0) {}

  Kind kind_;
  double value_;
};

std::ostream& operator<<(std::ostream& os, const ExtendedReal& v);

/// Scalar utility u: R -> R, strictly concave and increasing with
/// u' -> 0 at +inf and u' -> inf at -inf.
class UtilityFunction {
public:
  virtual ~UtilityFunction() = default;

  virtual std::string_view family() const = 0;
  virtual double eval(double x) const = 0;
  virtual double deriv(double x) const = 0;
  virtual double deriv2(double x) const = 0;

  /// phi(y, z) = inf_x { z * (-u(x)) + y * x }; -inf when y < 0.
  virtual ExtendedReal conjugate_kernel(double y, double z) const = 0;

  /// The x attaining phi(y, z) for y, z > 0. Also the derivative of phi in y.
  virtual double conjugate_argmin(double y, double z) const = 0;
};

/// u(x) = -a * exp(-x / b).
class ExponentialUtility final : public UtilityFunction {
public:
  static constexpr double exponent_limit = 700.0;

  explicit ExponentialUtility(double a = 1.0, double b = 1.0);

  double scale() const noexcept { return a_; }
  double tolerance() const noexcept { return b_; }

  std::string_view family() const override { return "exponential"; }
  double eval(double x) const override;
  double deriv(double x) const override;
  double deriv2(double x) const override;
  ExtendedReal conjugate_kernel(double y, double z) const override;
  double conjugate_argmin(double y, double z) const override;

private:
  double decay(double x) const;  // exp(-x / b) with the overflow guard

  double a_;
  double b_;
};

/// U(x) = (u_1(x_1), ..., u_d(x_d)).
class UtilitySpec {
public:
  UtilitySpec() = default;
  explicit UtilitySpec(std::vector<std::shared_ptr<const UtilityFunction>> per_asset);

  static UtilitySpec exponential(int d, double a = 1.0, double b = 1.0);

  int dim() const noexcept { return static_cast<int>(per_asset_.size()); }
  const UtilityFunction& operator[](int i) const { return *per_asset_.at(static_cast<std::size_t>(i)); }
  const std::shared_ptr<const UtilityFunction>& share(int i) const { return per_asset_.at(static_cast<std::size_t>(i)); }

private:
  std::vector<std::shared_ptr<const UtilityFunction>> per_asset_;
};

}  // namespace conic
