#include "conic/utility.hpp"

#include "conic/errors.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace conic {

double ExtendedReal::value() const {
  if (kind_ != Kind::Finite) {
    throw Error(ErrorCode::InvalidArgument, "extended real is infinite");
  }
  return value_;
}

double ExtendedReal::to_double() const noexcept {
  switch (kind_) {
    case Kind::MinusInfinity: return -std::numeric_limits<double>::infinity();
    case Kind::PlusInfinity: return std::numeric_limits<double>::infinity();
    case Kind::Finite: break;
  }
  return value_;
}

std::ostream& operator<<(std::ostream& os, const ExtendedReal& v) {
  switch (v.kind()) {
    case ExtendedReal::Kind::MinusInfinity: return os << "-inf";
    case ExtendedReal::Kind::PlusInfinity: return os << "+inf";
    case ExtendedReal::Kind::Finite: break;
  }
  return os << v.value();
}

ExponentialUtility::ExponentialUtility(double a, double b) : a_(a), b_(b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    std::ostringstream msg;
    msg << "exponential utility needs a, b > 0 (got a=" << a << ", b=" << b << ")";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

double ExponentialUtility::decay(double x) const {
  const double e = -x / b_;
  if (!(std::abs(e) <= exponent_limit)) {
    std::ostringstream msg;
    msg << "exponent " << e << " outside [-" << exponent_limit << ", " << exponent_limit << "]";
    throw Error(ErrorCode::Overflow, msg.str());
  }
  return std::exp(e);
}

double ExponentialUtility::eval(double x) const { return -a_ * decay(x); }

double ExponentialUtility::deriv(double x) const { return a_ / b_ * decay(x); }

double ExponentialUtility::deriv2(double x) const { return -a_ / (b_ * b_) * decay(x); }

ExtendedReal ExponentialUtility::conjugate_kernel(double y, double z) const {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::NegativeWeight, "conjugate kernel needs z > 0");
  }
  if (y < 0.0) {
    return ExtendedReal::minus_infinity();
  }
  if (y == 0.0) {
    return 0.0;
  }
  // Stationarity gives exp(-x/b) = y b / (z a).
  return y * b_ - y * b_ * std::log(y * b_ / (z * a_));
}

double ExponentialUtility::conjugate_argmin(double y, double z) const {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::NegativeWeight, "conjugate argmin needs z > 0");
  }
  if (!(y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "conjugate argmin needs y > 0");
  }
  return -b_ * std::log(y * b_ / (z * a_));
}

UtilitySpec::UtilitySpec(std::vector<std::shared_ptr<const UtilityFunction>> per_asset)
    : per_asset_(std::move(per_asset)) {
  for (const auto& u : per_asset_) {
    if (!u) {
      throw Error(ErrorCode::InvalidArgument, "null utility function");
    }
  }
}

UtilitySpec UtilitySpec::exponential(int d, double a, double b) {
  std::vector<std::shared_ptr<const UtilityFunction>> us;
  for (int i = 0; i < d; ++i) {
    us.push_back(std::make_shared<ExponentialUtility>(a, b));
  }
  return UtilitySpec(std::move(us));
}

}  // namespace conic
