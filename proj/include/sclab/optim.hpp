#pragma once

#include <Eigen/Dense>

namespace sclab::optim {

enum class OptKind { sgd, adam };
enum class ScheduleKind { constant, warmup_cosine };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  long total_steps = 0;       // T; required for warmup_cosine
  double warmup_frac = 0.01;  // linear ramp over the first ceil(frac*T) steps
  double floor_frac = 0.1;    // cosine decays to floor_frac * lr_max at t = T
};

struct OptimConfig {
  OptKind kind = OptKind::sgd;
  double lr_max = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, multiplicative on w
  ScheduleSpec schedule;
};

struct OptimState {
  Eigen::MatrixXd first_moment;
  Eigen::MatrixXd second_moment;
  long step_count = 0;
  double dynamic_time = 0.0;  // tau = sum of learning rates applied so far
};

double lr_at(const ScheduleSpec& schedule, double lr_max, long t);

// tau(t) = sum_{t'=0}^{t-1} lr_at(t'). Exactly lr_max * t for constant
// schedules; direct summation otherwise.
double dynamic_time(const ScheduleSpec& schedule, double lr_max, long t);

OptimState make_state(Eigen::Index rows, Eigen::Index cols);

// w' = (1 - lr*wd) * w - lr * grad.
void sgd_step(Eigen::Ref<Eigen::MatrixXd> w,
              const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr,
              double weight_decay);

// Bias-corrected Adam with decoupled decay applied before the Adam delta.
// Increments state.step_count and advances state.dynamic_time by lr.
void adam_step(OptimState& state, Eigen::Ref<Eigen::MatrixXd> w,
               const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr,
               const OptimConfig& config);

// Uniform front-end used by the training loops: dispatches on config.kind
// and keeps (step_count, dynamic_time) bookkeeping identical for both
// optimizers. For constant schedules tau is recomputed as lr_max * t so it
// matches dynamic_time() bit-for-bit.
class Optimizer {
 public:
  Optimizer(const OptimConfig& config, Eigen::Index rows, Eigen::Index cols);

  void step(Eigen::Ref<Eigen::MatrixXd> w,
            const Eigen::Ref<const Eigen::MatrixXd>& grad, double lr);

  const OptimState& state() const { return state_; }
  long step_count() const { return state_.step_count; }
  double tau() const { return state_.dynamic_time; }

 private:
  OptimConfig config_;
  OptimState state_;
};

}  // namespace sclab::optim
