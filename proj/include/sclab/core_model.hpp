#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace sclab::core {

// Single-layer softmax teacher-student model. The teacher holds a fixed
// matrix w_hat of unit-variance entries; its effective weight is
// (beta_star / sqrt(m)) * w_hat, so beta_star is the standard deviation of
// the teacher logits for standard-normal inputs. All arithmetic is double
// precision.

enum class TeacherDist { normal, uniform };

struct TeacherSpec {
  int m = 0;                 // hidden dimension
  int n = 0;                 // output classes
  double beta_star = 0.0;    // inverse temperature == teacher logit std
  Eigen::MatrixXd w_hat;     // n x m, unit-variance entries
  std::uint64_t seed = 0;
  TeacherDist dist = TeacherDist::normal;

  Eigen::MatrixXd effective_weight() const {
    return (beta_star / std::sqrt(static_cast<double>(m))) * w_hat;
  }
};

struct StudentWeights {
  Eigen::MatrixXd w;         // n x m, trainable
  double init_scale = 0.0;   // 0 => zero init
};

struct InputBatch {
  Eigen::MatrixXd x;         // B x m, i.i.d. standard normal
  std::uint64_t seed = 0;
};

struct ModelOutput {
  Eigen::MatrixXd teacher_logits;  // B x n
  Eigen::MatrixXd student_logits;  // B x n
  Eigen::MatrixXd p;               // B x n, row-stochastic
  Eigen::MatrixXd q;               // B x n, row-stochastic
};

struct LossGrad {
  double loss = 0.0;         // batch-mean KL(p || q)
  Eigen::MatrixXd grad;      // n x m
};

struct AlignmentCosine {
  double value = 0.0;
  bool degenerate = false;   // true when w == 0
};

// Softmax with row-max subtraction; rejects non-finite input.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits);
// Row-wise log-softmax, same stabilization.
Eigen::MatrixXd log_softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits);

// KL(p || q) from two probability vectors. Terms with p_i == 0 contribute
// exactly 0; p_i > 0 with q_i == 0 yields +infinity rather than a crash.
double kl_loss(const Eigen::Ref<const Eigen::VectorXd>& p,
               const Eigen::Ref<const Eigen::VectorXd>& q);

TeacherSpec sample_teacher(int m, int n, double beta_star, std::uint64_t seed,
                           TeacherDist dist = TeacherDist::normal);

StudentWeights init_student(int m, int n, double init_scale, std::uint64_t seed);

InputBatch sample_input_batch(int batch, int m, std::uint64_t seed);

ModelOutput forward(const StudentWeights& student, const TeacherSpec& teacher,
                    const InputBatch& batch);

// Batch-mean KL divergence and its exact gradient (q - p)^T x / B.
LossGrad loss_and_grad(const StudentWeights& student, const TeacherSpec& teacher,
                       const InputBatch& batch);

// Loss only on precomputed teacher probabilities (used by the trainer's
// held-out evaluation where the teacher side never changes).
double eval_loss(const Eigen::Ref<const Eigen::MatrixXd>& teacher_log_p,
                 const Eigen::Ref<const Eigen::MatrixXd>& teacher_p,
                 const Eigen::Ref<const Eigen::MatrixXd>& student_logits);

// Mean over rows of the per-row standard deviation across classes
// (sample std, n-1 denominator). Rejects empty batches.
double measure_beta(const Eigen::Ref<const Eigen::MatrixXd>& logits);

// Frobenius-cosine between w and w_star; 1 iff w = c * w_star with c > 0.
AlignmentCosine alignment_cosine(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                 const Eigen::Ref<const Eigen::MatrixXd>& w_star);

}  // namespace sclab::core
