#include "qns/loss.hpp"

#include "qns/qcore.hpp"

#include <fmt/format.h>

#include <cmath>

namespace qns {

LossFunction LossFunction::huber(double delta0) {
  if (!(delta0 > 0.0)) throw Error("Huber tuning parameter must be positive");
  return {Kind::Huber, delta0};
}

LossFunction LossFunction::parse(std::string_view name, double delta0) {
  if (name == "quadratic" || name == "least-squares" || name == "linear") return quadratic();
  if (name == "huber") return huber(delta0);
  throw Error(fmt::format("unknown loss '{}'", name));
}

LossValue LossFunction::eval(double z) const {
  if (kind == Kind::Quadratic || std::abs(z) <= delta0) return {0.5 * z * z, z, 1.0};
  const double sign = z > 0.0 ? 1.0 : -1.0;
  return {delta0 * (std::abs(z) - 0.5 * delta0), delta0 * sign, 0.0};
}

double LossFunction::weight(double z) const {
  if (kind == Kind::Quadratic || std::abs(z) <= delta0) return 1.0;
  return delta0 / std::abs(z);
}

std::string LossFunction::name() const {
  return kind == Kind::Quadratic ? "quadratic" : fmt::format("huber(delta0={})", delta0);
}

}  // namespace qns
