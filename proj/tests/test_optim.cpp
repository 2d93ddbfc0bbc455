#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sclab/core_model.hpp"
#include "sclab/optim.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

TEST_CASE("constant schedule") {
  optim::ScheduleSpec sched;
  CHECK(optim::lr_at(sched, 0.25, 0) == 0.25);
  CHECK(optim::lr_at(sched, 0.25, 12345) == 0.25);
}

TEST_CASE("warmup cosine endpoints") {
  optim::ScheduleSpec sched;
  sched.kind = optim::ScheduleKind::warmup_cosine;
  sched.total_steps = 100000;
  const long warm = static_cast<long>(std::ceil(0.01 * 100000));
  CHECK(optim::lr_at(sched, 0.15, 0) == 0.0);
  CHECK(optim::lr_at(sched, 0.15, warm) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(optim::lr_at(sched, 0.15, 100000) == doctest::Approx(0.015).epsilon(1e-12));
  CHECK_THROWS_AS(optim::lr_at(sched, 0.15, 100001), std::invalid_argument);
}

TEST_CASE("warmup cosine is within bounds and smooth") {
  optim::ScheduleSpec sched;
  sched.kind = optim::ScheduleKind::warmup_cosine;
  sched.total_steps = 5000;
  double prev = 0.0;
  for (long t = 0; t <= 5000; ++t) {
    const double lr = optim::lr_at(sched, 1.0, t);
    CHECK(lr >= 0.0);
    CHECK(lr <= 1.0 + 1e-12);
    if (t > 50) CHECK(lr <= prev + 1e-12);  // decreasing after warmup
    prev = lr;
  }
}

TEST_CASE("dynamic time: constant is exact, cosine matches the integral") {
  optim::ScheduleSpec flat;
  CHECK(optim::dynamic_time(flat, 0.023, 2000) == 0.023 * 2000);
  CHECK(optim::dynamic_time(flat, 0.5, 0) == 0.0);

  optim::ScheduleSpec sched;
  sched.kind = optim::ScheduleKind::warmup_cosine;
  sched.total_steps = 100000;
  const double tau = optim::dynamic_time(sched, 0.15, 100000);
  // Closed form: warmup triangle + cosine segment mean (lr_max+floor)/2.
  const double warm = std::ceil(0.01 * 100000);
  const double lr_max = 0.15, floor = 0.015;
  const double warm_sum = lr_max * (warm - 1.0) / 2.0;  // sum of t/warm for t<warm
  const double cosine_sum = (100000.0 - warm) * 0.5 * (lr_max + floor);
  CHECK(tau == doctest::Approx(warm_sum + cosine_sum).epsilon(1e-3));
}

TEST_CASE("sgd step algebra") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(2, 3, 1.0);
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 3, 0.5);

  Eigen::MatrixXd w1 = w;
  optim::sgd_step(w1, g, 0.1, 0.0);
  CHECK((w1.array() - 0.95).abs().maxCoeff() < 1e-15);

  // Pure decoupled shrink when the gradient vanishes.
  Eigen::MatrixXd w2 = w;
  optim::sgd_step(w2, Eigen::MatrixXd::Zero(2, 3), 0.1, 0.3);
  CHECK((w2.array() - (1.0 - 0.1 * 0.3)).abs().maxCoeff() < 1e-15);

  Eigen::MatrixXd w3 = w;
  optim::sgd_step(w3, g, 0.0, 0.7);
  CHECK(w3 == w);
}

TEST_CASE("adam first step is a sign step") {
  optim::OptimConfig cfg;
  cfg.kind = optim::OptKind::adam;
  optim::OptimState state = optim::make_state(1, 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 0.37);
  optim::adam_step(state, w, g, 0.1, cfg);
  CHECK(w(0, 0) == doctest::Approx(-0.1).epsilon(1e-7));
  CHECK(state.step_count == 1);
  CHECK(state.dynamic_time == 0.1);

  Eigen::MatrixXd wn = Eigen::MatrixXd::Zero(1, 1);
  optim::OptimState sn = optim::make_state(1, 1);
  optim::adam_step(sn, wn, Eigen::MatrixXd::Constant(1, 1, -2.0), 0.1, cfg);
  CHECK(wn(0, 0) == doctest::Approx(0.1).epsilon(1e-7));
}

TEST_CASE("adam zero gradient leaves weights, decays moments") {
  optim::OptimConfig cfg;
  cfg.kind = optim::OptKind::adam;
  optim::OptimState state = optim::make_state(2, 2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(2, 2, 3.0);
  Eigen::MatrixXd w0 = w;
  optim::adam_step(state, w, Eigen::MatrixXd::Zero(2, 2), 0.1, cfg);
  CHECK(w == w0);  // fresh zero moments stay zero, so the delta is exactly 0

  state.first_moment.setConstant(0.8);
  state.second_moment.setConstant(0.6);
  optim::adam_step(state, w, Eigen::MatrixXd::Zero(2, 2), 0.1, cfg);
  CHECK(state.first_moment(0, 0) == doctest::Approx(0.9 * 0.8).epsilon(1e-12));
  CHECK(state.second_moment(0, 0) == doctest::Approx(0.999 * 0.6).epsilon(1e-12));
}

TEST_CASE("adam two-step hand table for constant unit gradient") {
  // Hand-computed with lr=0.1, b1=0.9, b2=0.999, eps=1e-8, g=1:
  // both steps have bias-corrected mhat = vhat = 1, so each step moves by
  // -lr / (1 + eps).
  optim::OptimConfig cfg;
  cfg.kind = optim::OptKind::adam;
  optim::OptimState state = optim::make_state(1, 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 1.0);

  optim::adam_step(state, w, g, 0.1, cfg);
  CHECK(w(0, 0) == doctest::Approx(-0.0999999990).epsilon(1e-9));
  optim::adam_step(state, w, g, 0.1, cfg);
  CHECK(w(0, 0) == doctest::Approx(-0.1999999980).epsilon(1e-9));
  CHECK(state.step_count == 2);
  CHECK(state.dynamic_time == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("decoupled decay isolates exponential shrinkage") {
  optim::OptimConfig cfg;
  cfg.kind = optim::OptKind::adam;
  cfg.weight_decay = 0.25;
  optim::OptimState state = optim::make_state(1, 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const double lr = 0.01;
  for (int t = 0; t < 50; ++t) {
    optim::adam_step(state, w, Eigen::MatrixXd::Zero(1, 1), lr, cfg);
  }
  CHECK(w(0, 0) == doctest::Approx(2.0 * std::pow(1.0 - lr * 0.25, 50)).epsilon(1e-4));
}

TEST_CASE("sgd line-search property on random instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    core::TeacherSpec teacher = core::sample_teacher(8, 16, 4.0, seed);
    core::StudentWeights student = core::init_student(8, 16, 1.0, seed + 100);
    core::InputBatch batch = core::sample_input_batch(32, 8, seed + 200);
    core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
    core::StudentWeights next = student;
    optim::sgd_step(next.w, lg.grad, 1e-4, 0.0);
    CHECK(core::loss_and_grad(next, teacher, batch).loss < lg.loss);
  }
}

TEST_CASE("optimizer front-end keeps tau consistent with dynamic_time") {
  optim::OptimConfig cfg;
  cfg.kind = optim::OptKind::sgd;
  cfg.lr_max = 0.023;
  optim::Optimizer opt(cfg, 2, 2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 2, 0.1);
  for (int t = 0; t < 2000; ++t) {
    opt.step(w, g, optim::lr_at(cfg.schedule, cfg.lr_max, t));
  }
  CHECK(opt.tau() == optim::dynamic_time(cfg.schedule, cfg.lr_max, 2000));
  CHECK(opt.tau() == 0.023 * 2000);
}
