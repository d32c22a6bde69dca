#include "kinefit/smoothing.hpp"

#include <cmath>

namespace kinefit {

namespace {

double smoothing_alpha(double cutoff_hz, double dt) {
  const double tau = 1.0 / (2.0 * M_PI * cutoff_hz);
  return 1.0 / (1.0 + tau / dt);
}

}  // namespace

void OneEuroParams::validate() const {
  if (!(min_cutoff > 0.0) || !(d_cutoff > 0.0))
    throw Error(ErrorCode::InvalidInput, "filter cutoffs must be positive");
  if (!(beta >= 0.0))
    throw Error(ErrorCode::InvalidInput, "filter beta must be non-negative");
}

OneEuroFilter::OneEuroFilter(int channels, const OneEuroParams& params)
    : params_(params),
      x_prev_(Eigen::VectorXd::Zero(channels)),
      dx_prev_(Eigen::VectorXd::Zero(channels)) {
  params_.validate();
  if (channels < 1)
    throw Error(ErrorCode::InvalidInput, "filter needs at least one channel");
}

void OneEuroFilter::reset() {
  initialized_ = false;
  x_prev_.setZero();
  dx_prev_.setZero();
  t_prev_ = 0.0;
}

Eigen::VectorXd OneEuroFilter::step(const Eigen::VectorXd& sample,
                                    double t_seconds) {
  if (sample.size() != x_prev_.size())
    throw Error(ErrorCode::InvalidInput, "sample size does not match filter");
  if (!initialized_) {
    x_prev_ = sample;
    dx_prev_.setZero();
    t_prev_ = t_seconds;
    initialized_ = true;
    return sample;
  }
  const double dt = t_seconds - t_prev_;
  if (!(dt > 0.0))
    throw Error(ErrorCode::InvalidTimestamp,
                "timestamps must be strictly increasing");

  const double alpha_d = smoothing_alpha(params_.d_cutoff, dt);
  Eigen::VectorXd filtered(sample.size());
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    const double dx = (sample[i] - x_prev_[i]) / dt;
    dx_prev_[i] += alpha_d * (dx - dx_prev_[i]);
    const double cutoff = params_.min_cutoff + params_.beta * std::abs(dx_prev_[i]);
    const double alpha = smoothing_alpha(cutoff, dt);
    filtered[i] = x_prev_[i] + alpha * (sample[i] - x_prev_[i]);
  }
  x_prev_ = filtered;
  t_prev_ = t_seconds;
  return filtered;
}

}  // namespace kinefit
