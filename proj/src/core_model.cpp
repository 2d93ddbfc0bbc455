#include "sclab/core_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sclab/rng.hpp"

namespace sclab::core {

namespace {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_finite(v, "softmax");
  const double mx = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - mx).exp();
  return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  require_finite(logits, "softmax_rows");
  Eigen::ArrayXXd shifted =
      logits.array().colwise() - logits.rowwise().maxCoeff().array();
  Eigen::ArrayXXd e = shifted.exp();
  return (e.colwise() / e.rowwise().sum()).matrix();
}

Eigen::MatrixXd log_softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  require_finite(logits, "log_softmax_rows");
  Eigen::ArrayXXd shifted =
      logits.array().colwise() - logits.rowwise().maxCoeff().array();
  Eigen::ArrayXd lse = shifted.exp().rowwise().sum().log();
  return (shifted.colwise() - lse).matrix();
}

double kl_loss(const Eigen::Ref<const Eigen::VectorXd>& p,
               const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_loss: size mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return acc;
}

TeacherSpec sample_teacher(int m, int n, double beta_star, std::uint64_t seed,
                           TeacherDist dist) {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("sample_teacher: m and n must be >= 1");
  }
  if (beta_star < 0.0) {
    throw std::invalid_argument("sample_teacher: beta_star must be >= 0");
  }
  TeacherSpec spec;
  spec.m = m;
  spec.n = n;
  spec.beta_star = beta_star;
  spec.seed = seed;
  spec.dist = dist;
  spec.w_hat.resize(n, m);
  rng::Stream stream(rng::derive_seed(seed, "teacher"));
  if (dist == TeacherDist::normal) {
    stream.fill_normal(spec.w_hat);
  } else {
    // Unit-variance uniform; the logits stay Gaussian by the CLT.
    const double half = std::sqrt(3.0);
    stream.fill_uniform(spec.w_hat, -half, half);
  }
  return spec;
}

StudentWeights init_student(int m, int n, double init_scale, std::uint64_t seed) {
  StudentWeights student;
  student.init_scale = init_scale;
  student.w = Eigen::MatrixXd::Zero(n, m);
  if (init_scale != 0.0) {
    const double half = 1.0 / std::sqrt(static_cast<double>(m));
    rng::Stream stream(rng::derive_seed(seed, "student_init"));
    stream.fill_uniform(student.w, -half, half);
    student.w *= init_scale;
  }
  return student;
}

InputBatch sample_input_batch(int batch, int m, std::uint64_t seed) {
  if (batch < 1 || m < 1) {
    throw std::invalid_argument("sample_input_batch: batch and m must be >= 1");
  }
  InputBatch b;
  b.seed = seed;
  b.x.resize(batch, m);
  rng::Stream stream(seed);
  stream.fill_normal(b.x);
  return b;
}

ModelOutput forward(const StudentWeights& student, const TeacherSpec& teacher,
                    const InputBatch& batch) {
  if (student.w.rows() != teacher.n || student.w.cols() != teacher.m ||
      batch.x.cols() != teacher.m) {
    throw std::invalid_argument("forward: dimension mismatch");
  }
  ModelOutput out;
  out.teacher_logits.noalias() = batch.x * teacher.effective_weight().transpose();
  out.student_logits.noalias() = batch.x * student.w.transpose();
  out.p = softmax_rows(out.teacher_logits);
  out.q = softmax_rows(out.student_logits);
  return out;
}

LossGrad loss_and_grad(const StudentWeights& student, const TeacherSpec& teacher,
                       const InputBatch& batch) {
  if (student.w.rows() != teacher.n || student.w.cols() != teacher.m ||
      batch.x.cols() != teacher.m) {
    throw std::invalid_argument("loss_and_grad: dimension mismatch");
  }
  const double inv_b = 1.0 / static_cast<double>(batch.x.rows());
  Eigen::MatrixXd teacher_logits = batch.x * teacher.effective_weight().transpose();
  Eigen::MatrixXd student_logits = batch.x * student.w.transpose();
  Eigen::MatrixXd log_p = log_softmax_rows(teacher_logits);
  Eigen::MatrixXd log_q = log_softmax_rows(student_logits);
  Eigen::MatrixXd p = log_p.array().exp().matrix();
  Eigen::MatrixXd q = log_q.array().exp().matrix();

  LossGrad result;
  result.loss = (p.array() * (log_p - log_q).array()).sum() * inv_b;
  result.grad.noalias() = (q - p).transpose() * batch.x;
  result.grad *= inv_b;
  return result;
}

double eval_loss(const Eigen::Ref<const Eigen::MatrixXd>& teacher_log_p,
                 const Eigen::Ref<const Eigen::MatrixXd>& teacher_p,
                 const Eigen::Ref<const Eigen::MatrixXd>& student_logits) {
  Eigen::MatrixXd log_q = log_softmax_rows(student_logits);
  const double inv_b = 1.0 / static_cast<double>(student_logits.rows());
  return (teacher_p.array() * (teacher_log_p - log_q).array()).sum() * inv_b;
}

double measure_beta(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  if (logits.rows() == 0) {
    throw std::invalid_argument("measure_beta: empty batch");
  }
  if (logits.cols() < 2) {
    throw std::invalid_argument("measure_beta: need at least 2 classes");
  }
  const double denom = static_cast<double>(logits.cols() - 1);
  Eigen::ArrayXd mean = logits.array().rowwise().mean();
  Eigen::ArrayXd var =
      (logits.array().colwise() - mean).square().rowwise().sum() / denom;
  return var.sqrt().mean();
}

AlignmentCosine alignment_cosine(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                 const Eigen::Ref<const Eigen::MatrixXd>& w_star) {
  if (w.rows() != w_star.rows() || w.cols() != w_star.cols()) {
    throw std::invalid_argument("alignment_cosine: shape mismatch");
  }
  const double norm_star = w_star.norm();
  if (norm_star == 0.0) {
    throw std::invalid_argument("alignment_cosine: w_star must be nonzero");
  }
  const double norm_w = w.norm();
  if (norm_w == 0.0) {
    return {0.0, true};
  }
  const double inner = (w.array() * w_star.array()).sum();
  return {inner / (norm_w * norm_star), false};
}

}  // namespace sclab::core
