#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sclab/trainer.hpp"

namespace sclab::deep {

// Generalized toy model: residual MLP blocks with RMSNorm and squared-ReLU
// in front of the softmax head,
//   h_0 = rmsnorm(x)
//   h_l = w_out_l * relu2(w_in_l * rmsnorm(h_{l-1}) + bias_l) + h_{l-1}
//   logits = head * rmsnorm(h_depth)
// with hand-written reverse-mode gradients of the batch-mean KL loss.

struct DeepSpec {
  int m = 0;
  int n = 0;
  int depth = 0;
  std::vector<Eigen::MatrixXd> w_in;   // depth x (4m x m)
  std::vector<Eigen::MatrixXd> bias;   // depth x (1 x 4m)
  std::vector<Eigen::MatrixXd> w_out;  // depth x (m x 4m)
  Eigen::MatrixXd head;                // n x m
  double rms_eps = 1e-8;
  // Bumped whenever parameters change; deep_backward rejects caches built
  // against a different version.
  std::uint64_t version = 0;
};

struct DeepCache {
  Eigen::MatrixXd x;
  std::vector<Eigen::MatrixXd> h;    // depth+1 entries, h[0] = rmsnorm(x)
  std::vector<Eigen::MatrixXd> u;    // rmsnorm(h[l-1]) per layer
  std::vector<Eigen::MatrixXd> z;    // pre-activations, B x 4m
  std::vector<Eigen::MatrixXd> act;  // relu2(z)
  Eigen::MatrixXd g;                 // rmsnorm(h[depth])
  Eigen::MatrixXd logits;            // B x n
  std::uint64_t version = 0;
  int m = 0, n = 0, depth = 0;
};

struct DeepGrads {
  std::vector<Eigen::MatrixXd> w_in;
  std::vector<Eigen::MatrixXd> bias;
  std::vector<Eigen::MatrixXd> w_out;
  Eigen::MatrixXd head;
};

// v / sqrt(mean(v^2) + eps), no learnable gain.
Eigen::VectorXd rmsnorm(const Eigen::Ref<const Eigen::VectorXd>& v, double eps = 1e-8);
Eigen::MatrixXd rmsnorm_rows(const Eigen::Ref<const Eigen::MatrixXd>& v, double eps);
// Pullback of rmsnorm_rows at input h for output cotangent dg.
Eigen::MatrixXd rmsnorm_backward_rows(const Eigen::Ref<const Eigen::MatrixXd>& h,
                                      const Eigen::Ref<const Eigen::MatrixXd>& dg,
                                      double eps);
Eigen::MatrixXd relu2(const Eigen::Ref<const Eigen::MatrixXd>& z);
Eigen::MatrixXd relu2_backward(const Eigen::Ref<const Eigen::MatrixXd>& z,
                               const Eigen::Ref<const Eigen::MatrixXd>& da);

// Uniform (-1/sqrt(fan_in), +1/sqrt(fan_in)) init scaled by init_scale;
// biases start at zero.
DeepSpec make_deep_spec(int m, int n, int depth, std::uint64_t seed,
                        double init_scale = 1.0, double rms_eps = 1e-8);

// Returns a copy whose head is rescaled so the measured logit std on a
// calibration batch (size calibration_batch) equals beta_star.
DeepSpec calibrate_teacher_beta(const DeepSpec& teacher, double beta_star,
                                std::uint64_t calibration_seed,
                                int calibration_batch = 10000);

Eigen::MatrixXd deep_logits(const DeepSpec& spec,
                            const Eigen::Ref<const Eigen::MatrixXd>& x);
DeepCache deep_forward(const DeepSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& x);

// Exact gradients of mean_b KL(p_b || softmax(logits_b)) for every
// parameter. Rejects caches whose shape or version tag does not match spec.
DeepGrads deep_backward(const DeepSpec& spec, const DeepCache& cache,
                        const Eigen::Ref<const Eigen::MatrixXd>& teacher_probs);

double param_norm(const DeepSpec& spec);

// Adam training of all student parameters on fresh batches; the teacher is
// expected to be calibrated already (calibrate_teacher_beta). Trajectory
// schema matches train::run_training.
train::Trajectory run_deep_training(const DeepSpec& teacher, const DeepSpec& student,
                                    const train::TrainConfig& config);

}  // namespace sclab::deep
