#pragma once

#include <string>
#include <string_view>

namespace qns {

struct LossValue {
  double value;
  double psi;     ///< first derivative
  double second;  ///< second derivative
};

struct LossFunction {
  enum class Kind { Quadratic, Huber };

  Kind kind = Kind::Quadratic;
  double delta0 = 1.0;

  static LossFunction quadratic() { return {Kind::Quadratic, 1.0}; }
  static LossFunction huber(double delta0 = 1.0);
  static LossFunction parse(std::string_view name, double delta0 = 1.0);

  LossValue eval(double z) const;
  /// psi(z)/z, with the z -> 0 limit at z = 0.
  double weight(double z) const;
  std::string name() const;
};

/// Convenience wrapper for LossFunction::eval.
inline LossValue loss_eval(const LossFunction& loss, double z) { return loss.eval(z); }

}  // namespace qns
