#include "sclab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sclab::optim {

double lr_at(const ScheduleSpec& schedule, double lr_max, long t) {
  if (t < 0) {
    throw std::invalid_argument("lr_at: negative step");
  }
  if (schedule.kind == ScheduleKind::constant) {
    return lr_max;
  }
  const long total = schedule.total_steps;
  if (t > total) {
    throw std::invalid_argument("lr_at: step beyond total_steps");
  }
  const long warmup =
      static_cast<long>(std::ceil(schedule.warmup_frac * static_cast<double>(total)));
  if (warmup > 0 && t <= warmup) {
    return lr_max * static_cast<double>(t) / static_cast<double>(warmup);
  }
  const double floor = schedule.floor_frac * lr_max;
  const double phase = static_cast<double>(t - warmup) / static_cast<double>(total - warmup);
  return floor + (lr_max - floor) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

double dynamic_time(const ScheduleSpec& schedule, double lr_max, long t) {
  if (schedule.kind == ScheduleKind::constant) {
    return lr_max * static_cast<double>(t);
  }
  double tau = 0.0;
  for (long s = 0; s < t; ++s) {
    tau += lr_at(schedule, lr_max, s);
  }
  return tau;
}

OptimState make_state(Eigen::Index rows, Eigen::Index cols) {
  OptimState state;
  state.first_moment = Eigen::MatrixXd::Zero(rows, cols);
  state.second_moment = Eigen::MatrixXd::Zero(rows, cols);
  return state;
}

void sgd_step(Eigen::Ref<Eigen::MatrixXd> w,
              const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr,
              double weight_decay) {
  if (w.rows() != grad.rows() || w.cols() != grad.cols()) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  if (weight_decay != 0.0) {
    w *= (1.0 - lr * weight_decay);
  }
  w -= lr * grad;
}

void adam_step(OptimState& state, Eigen::Ref<Eigen::MatrixXd> w,
               const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr,
               const OptimConfig& config) {
  if (w.rows() != grad.rows() || w.cols() != grad.cols() ||
      state.first_moment.rows() != w.rows() || state.first_moment.cols() != w.cols()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (config.weight_decay != 0.0) {
    w *= (1.0 - lr * config.weight_decay);
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grad;
  state.second_moment = config.beta2 * state.second_moment +
                        (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  w.array() -= lr * (state.first_moment.array() / bc1) /
               ((state.second_moment.array() / bc2).sqrt() + config.eps);
  state.dynamic_time += lr;
}

Optimizer::Optimizer(const OptimConfig& config, Eigen::Index rows, Eigen::Index cols)
    : config_(config), state_(make_state(rows, cols)) {}

void Optimizer::step(Eigen::Ref<Eigen::MatrixXd> w,
                     const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr) {
  if (config_.kind == OptKind::adam) {
    adam_step(state_, w, grad, lr, config_);
  } else {
    sgd_step(w, grad, lr, config_.weight_decay);
    state_.step_count += 1;
    state_.dynamic_time += lr;
  }
  if (config_.schedule.kind == ScheduleKind::constant) {
    state_.dynamic_time = config_.lr_max * static_cast<double>(state_.step_count);
  }
}

}  // namespace sclab::optim
