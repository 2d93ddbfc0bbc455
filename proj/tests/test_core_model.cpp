#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sclab/core_model.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

// Independent oracle: central finite differences of the batch loss.
Eigen::MatrixXd fd_grad(const core::StudentWeights& student,
                        const core::TeacherSpec& teacher, const core::InputBatch& batch,
                        double h) {
  Eigen::MatrixXd g(student.w.rows(), student.w.cols());
  core::StudentWeights probe = student;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      probe.w = student.w;
      probe.w(i, j) += h;
      const double up = core::loss_and_grad(probe, teacher, batch).loss;
      probe.w(i, j) = student.w(i, j) - h;
      const double dn = core::loss_and_grad(probe, teacher, batch).loss;
      g(i, j) = (up - dn) / (2.0 * h);
    }
  }
  return g;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-10});
}

}  // namespace

TEST_CASE("softmax analytic values") {
  Eigen::VectorXd v(2);
  v << 0.0, std::log(2.0);
  Eigen::VectorXd s = core::softmax(v);
  CHECK(s[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(4, -17.25);
  Eigen::VectorXd u = core::softmax(c);
  for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax max-subtraction survives huge logits") {
  Eigen::VectorXd v(2);
  v << 1000.0, 0.0;
  Eigen::VectorXd s = core::softmax(v);
  CHECK(s.allFinite());
  CHECK(s[0] >= 1.0 - 1e-300);
  CHECK(s[1] < 1e-300);
  CHECK(s[1] >= 0.0);
}

TEST_CASE("softmax shift invariance") {
  rng::Stream stream(11);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd v(16);
    stream.fill_normal(v);
    v *= 10.0;
    const double shift = stream.next_uniform(-1e3, 1e3);
    Eigen::VectorXd a = core::softmax(v);
    Eigen::VectorXd b = core::softmax(v.array() + shift);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(a.sum() - 1.0) < 1e-12);
    CHECK(a.minCoeff() > 0.0);
  }
}

TEST_CASE("softmax rejects non-finite input") {
  Eigen::VectorXd v(2);
  v << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(core::softmax(v), std::invalid_argument);
}

TEST_CASE("kl_loss values and edge cases") {
  Eigen::VectorXd p(2), q(2);
  p << 0.3, 0.7;
  CHECK(core::kl_loss(p, p) == 0.0);

  p << 1.0, 0.0;
  q << 0.5, 0.5;
  CHECK(core::kl_loss(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Direct evaluation of the sum: 0.5*ln 2 + 0.5*ln(2/3).
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(core::kl_loss(p, q) == doctest::Approx(0.14384).epsilon(1e-4));

  // q vanishing where p has mass signals infinite divergence, not a crash.
  p << 0.5, 0.5;
  q << 1.0, 0.0;
  CHECK(std::isinf(core::kl_loss(p, q)));
}

TEST_CASE("kl_loss nonnegative on random distributions") {
  rng::Stream stream(5);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd a(8), b(8);
    stream.fill_normal(a);
    stream.fill_normal(b);
    Eigen::VectorXd p = core::softmax(a);
    Eigen::VectorXd q = core::softmax(b);
    CHECK(core::kl_loss(p, q) >= 0.0);
  }
}

TEST_CASE("sample_teacher zero temperature and determinism") {
  core::TeacherSpec zero = core::sample_teacher(32, 128, 0.0, 7);
  CHECK(zero.effective_weight().cwiseAbs().maxCoeff() == 0.0);

  core::TeacherSpec a = core::sample_teacher(32, 128, 10.0, 7);
  core::TeacherSpec b = core::sample_teacher(32, 128, 10.0, 7);
  CHECK(a.w_hat == b.w_hat);

  CHECK_THROWS_AS(core::sample_teacher(0, 4, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(core::sample_teacher(4, 0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(core::sample_teacher(4, 4, -1.0, 1), std::invalid_argument);
}

TEST_CASE("teacher logit std matches beta_star (Monte Carlo)") {
  core::TeacherSpec teacher = core::sample_teacher(32, 128, 34.1, 7);
  core::InputBatch batch = core::sample_input_batch(100000, 32, rng::derive_seed(7, "mc"));
  Eigen::MatrixXd logits = batch.x * teacher.effective_weight().transpose();
  const double measured = core::measure_beta(logits);
  CHECK(measured > 32.4);
  CHECK(measured < 35.8);
}

TEST_CASE("uniform teacher variant has the same logit scale") {
  core::TeacherSpec teacher =
      core::sample_teacher(32, 128, 12.0, 3, core::TeacherDist::uniform);
  CHECK(teacher.w_hat.cwiseAbs().maxCoeff() <= std::sqrt(3.0));
  core::InputBatch batch = core::sample_input_batch(50000, 32, rng::derive_seed(3, "mc"));
  const double measured = core::measure_beta(batch.x * teacher.effective_weight().transpose());
  CHECK(measured == doctest::Approx(12.0).epsilon(0.06));
}

TEST_CASE("student init statistics") {
  core::StudentWeights zero = core::init_student(32, 128, 0.0, 9);
  CHECK(zero.w.cwiseAbs().maxCoeff() == 0.0);

  const double scale = 2.5;
  core::StudentWeights s = core::init_student(64, 256, scale, 9);
  const double bound = scale / std::sqrt(64.0);
  CHECK(s.w.cwiseAbs().maxCoeff() <= bound);
  const double std_measured = std::sqrt(s.w.array().square().mean());
  CHECK(std_measured == doctest::Approx(scale / std::sqrt(3.0 * 64.0)).epsilon(0.05));
}

TEST_CASE("zero init gives uniform student output") {
  core::TeacherSpec teacher = core::sample_teacher(8, 16, 2.0, 1);
  core::StudentWeights student = core::init_student(8, 16, 0.0, 2);
  core::InputBatch batch = core::sample_input_batch(4, 8, 3);
  core::ModelOutput out = core::forward(student, teacher, batch);
  CHECK((out.q.array() - 1.0 / 16.0).abs().maxCoeff() < 1e-15);
  for (int r = 0; r < 4; ++r) {
    CHECK(std::abs(out.p.row(r).sum() - 1.0) < 1e-12);
    CHECK(std::abs(out.q.row(r).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("loss and grad vanish exactly at the teacher") {
  core::TeacherSpec teacher = core::sample_teacher(8, 16, 5.0, 21);
  core::StudentWeights student;
  student.w = teacher.effective_weight();
  core::InputBatch batch = core::sample_input_batch(32, 8, 22);
  core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradient matches finite differences") {
  core::TeacherSpec teacher = core::sample_teacher(8, 16, 3.0, 31);
  core::StudentWeights student = core::init_student(8, 16, 1.0, 32);
  core::InputBatch batch = core::sample_input_batch(8, 8, 33);
  core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
  Eigen::MatrixXd fd = fd_grad(student, teacher, batch, 1e-5);
  for (Eigen::Index i = 0; i < fd.rows(); ++i) {
    for (Eigen::Index j = 0; j < fd.cols(); ++j) {
      CHECK(rel_err(fd(i, j), lg.grad(i, j)) <= 1e-5);
    }
  }
}

TEST_CASE("directional derivative consistency") {
  rng::Stream stream(41);
  core::TeacherSpec teacher = core::sample_teacher(8, 16, 2.0, 42);
  core::StudentWeights student = core::init_student(8, 16, 0.7, 43);
  core::InputBatch batch = core::sample_input_batch(16, 8, 44);
  core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd dir(16, 8);
    stream.fill_normal(dir);
    dir /= dir.norm();
    const double h = 1e-6;
    core::StudentWeights up = student, dn = student;
    up.w += h * dir;
    dn.w -= h * dir;
    const double fd = (core::loss_and_grad(up, teacher, batch).loss -
                       core::loss_and_grad(dn, teacher, batch).loss) /
                      (2.0 * h);
    const double an = (lg.grad.array() * dir.array()).sum();
    CHECK(rel_err(fd, an) <= 1e-4);
  }
}

TEST_CASE("zero student against a sharp teacher approaches ln n") {
  core::TeacherSpec teacher = core::sample_teacher(32, 128, 577.0, 51);
  core::StudentWeights student = core::init_student(32, 128, 0.0, 52);
  core::InputBatch batch = core::sample_input_batch(4096, 32, 53);
  core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
  const double ln_n = std::log(128.0);
  CHECK(lg.loss >= 0.95 * ln_n);
  CHECK(lg.loss <= 1.0 * ln_n);
}

TEST_CASE("loss_and_grad rejects dimension mismatch") {
  core::TeacherSpec teacher = core::sample_teacher(8, 16, 1.0, 61);
  core::StudentWeights student = core::init_student(9, 16, 1.0, 62);
  core::InputBatch batch = core::sample_input_batch(4, 8, 63);
  CHECK_THROWS_AS(core::loss_and_grad(student, teacher, batch), std::invalid_argument);
}

TEST_CASE("loss_and_grad is bit-deterministic") {
  core::TeacherSpec teacher = core::sample_teacher(16, 32, 8.0, 71);
  core::StudentWeights student = core::init_student(16, 32, 1.0, 72);
  core::InputBatch batch = core::sample_input_batch(64, 16, 73);
  core::LossGrad a = core::loss_and_grad(student, teacher, batch);
  core::LossGrad b = core::loss_and_grad(student, teacher, batch);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
}

TEST_CASE("measure_beta") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(10, 6, 3.25);
  CHECK(core::measure_beta(constant) == 0.0);

  core::TeacherSpec teacher = core::sample_teacher(32, 128, 10.0, 81);
  core::InputBatch batch = core::sample_input_batch(100000, 32, 82);
  const double measured = core::measure_beta(batch.x * teacher.effective_weight().transpose());
  CHECK(measured > 9.7);
  CHECK(measured < 10.3);

  Eigen::MatrixXd empty(0, 6);
  CHECK_THROWS_AS(core::measure_beta(empty), std::invalid_argument);
}

TEST_CASE("alignment cosine") {
  rng::Stream stream(91);
  Eigen::MatrixXd w_star(128, 32);
  stream.fill_normal(w_star);

  CHECK(core::alignment_cosine(3.7 * w_star, w_star).value ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(core::alignment_cosine(-w_star, w_star).value ==
        doctest::Approx(-1.0).epsilon(1e-12));

  core::AlignmentCosine zero =
      core::alignment_cosine(Eigen::MatrixXd::Zero(128, 32), w_star);
  CHECK(zero.value == 0.0);
  CHECK(zero.degenerate);

  CHECK_THROWS_AS(core::alignment_cosine(w_star, Eigen::MatrixXd::Zero(128, 32)),
                  std::invalid_argument);

  // Independent random matrices are nearly orthogonal in Frobenius geometry.
  int outliers = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::MatrixXd w(128, 32);
    stream.fill_normal(w);
    if (std::abs(core::alignment_cosine(w, w_star).value) >= 0.06) ++outliers;
  }
  CHECK(outliers <= 5);
}
