#pragma once

#include <Eigen/Core>

#include "kinefit/types.hpp"

namespace kinefit {

struct OneEuroParams {
  double min_cutoff = 1.0;  // Hz
  double beta = 0.5;        // speed coefficient
  double d_cutoff = 1.0;    // Hz, cutoff for the derivative estimate

  void validate() const;
};

// Adaptive first-order low-pass: per channel the cutoff rises with the
// filtered derivative magnitude, cutoff = min_cutoff + beta * |dx|, trading
// jitter suppression at rest against lag under motion. Stateful and
// single-owner; serialize calls externally if shared.
class OneEuroFilter {
 public:
  OneEuroFilter(int channels, const OneEuroParams& params);

  // First call returns the sample unchanged and initializes state. Later
  // calls require a strictly increasing timestamp and apply the standard
  // recurrence per channel. Throws Error(InvalidTimestamp) otherwise.
  Eigen::VectorXd step(const Eigen::VectorXd& sample, double t_seconds);

  bool initialized() const { return initialized_; }
  void reset();

 private:
  OneEuroParams params_;
  Eigen::VectorXd x_prev_;
  Eigen::VectorXd dx_prev_;
  double t_prev_ = 0.0;
  bool initialized_ = false;
};

}  // namespace kinefit
