#include "sclab/deep_model.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sclab/rng.hpp"

namespace sclab::deep {

namespace {

Eigen::ArrayXd row_scale(const Eigen::Ref<const Eigen::MatrixXd>& v, double eps) {
  return (v.array().square().rowwise().mean() + eps).sqrt();
}

}  // namespace

Eigen::VectorXd rmsnorm(const Eigen::Ref<const Eigen::VectorXd>& v, double eps) {
  const double s = std::sqrt(v.array().square().mean() + eps);
  return v / s;
}

Eigen::MatrixXd rmsnorm_rows(const Eigen::Ref<const Eigen::MatrixXd>& v, double eps) {
  return (v.array().colwise() / row_scale(v, eps)).matrix();
}

Eigen::MatrixXd rmsnorm_backward_rows(const Eigen::Ref<const Eigen::MatrixXd>& h,
                                      const Eigen::Ref<const Eigen::MatrixXd>& dg,
                                      double eps) {
  // g = h / s with s = sqrt(mean(h^2) + eps):
  // dh = dg / s - h * <h, dg> / (m * s^3)
  const double m = static_cast<double>(h.cols());
  Eigen::ArrayXd s = row_scale(h, eps);
  Eigen::ArrayXd rowdot = (h.array() * dg.array()).rowwise().sum();
  Eigen::ArrayXd coef = rowdot / (m * s * s * s);
  return ((dg.array().colwise() / s) - (h.array().colwise() * coef)).matrix();
}

Eigen::MatrixXd relu2(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  return z.array().max(0.0).square().matrix();
}

Eigen::MatrixXd relu2_backward(const Eigen::Ref<const Eigen::MatrixXd>& z,
                               const Eigen::Ref<const Eigen::MatrixXd>& da) {
  return (da.array() * 2.0 * z.array().max(0.0)).matrix();
}

DeepSpec make_deep_spec(int m, int n, int depth, std::uint64_t seed,
                        double init_scale, double rms_eps) {
  if (m < 1 || n < 1 || depth < 0) {
    throw std::invalid_argument("make_deep_spec: bad dimensions");
  }
  DeepSpec spec;
  spec.m = m;
  spec.n = n;
  spec.depth = depth;
  spec.rms_eps = rms_eps;
  rng::Stream stream(rng::derive_seed(seed, "deep_init"));
  const double half_in = 1.0 / std::sqrt(static_cast<double>(m));
  const double half_out = 1.0 / std::sqrt(static_cast<double>(4 * m));
  spec.w_in.reserve(static_cast<std::size_t>(depth));
  spec.bias.reserve(static_cast<std::size_t>(depth));
  spec.w_out.reserve(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    Eigen::MatrixXd a(4 * m, m);
    stream.fill_uniform(a, -half_in, half_in);
    spec.w_in.push_back(init_scale * a);
    spec.bias.push_back(Eigen::MatrixXd::Zero(1, 4 * m));
    Eigen::MatrixXd b(m, 4 * m);
    stream.fill_uniform(b, -half_out, half_out);
    spec.w_out.push_back(init_scale * b);
  }
  spec.head.resize(n, m);
  stream.fill_uniform(spec.head, -half_in, half_in);
  spec.head *= init_scale;
  return spec;
}

DeepSpec calibrate_teacher_beta(const DeepSpec& teacher, double beta_star,
                                std::uint64_t calibration_seed,
                                int calibration_batch) {
  DeepSpec scaled = teacher;
  if (beta_star == 0.0) {
    scaled.head.setZero();
    return scaled;
  }
  core::InputBatch batch =
      core::sample_input_batch(calibration_batch, teacher.m, calibration_seed);
  const double measured = core::measure_beta(deep_logits(teacher, batch.x));
  if (measured <= 0.0) {
    throw std::runtime_error("calibrate_teacher_beta: teacher produces constant logits");
  }
  scaled.head *= beta_star / measured;
  return scaled;
}

Eigen::MatrixXd deep_logits(const DeepSpec& spec,
                            const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != spec.m) {
    throw std::invalid_argument("deep_logits: input width mismatch");
  }
  Eigen::MatrixXd h = rmsnorm_rows(x, spec.rms_eps);
  for (int l = 0; l < spec.depth; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    Eigen::MatrixXd u = rmsnorm_rows(h, spec.rms_eps);
    Eigen::MatrixXd z = u * spec.w_in[li].transpose();
    z.rowwise() += spec.bias[li].row(0);
    h.noalias() += relu2(z) * spec.w_out[li].transpose();
  }
  return rmsnorm_rows(h, spec.rms_eps) * spec.head.transpose();
}

DeepCache deep_forward(const DeepSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != spec.m) {
    throw std::invalid_argument("deep_forward: input width mismatch");
  }
  DeepCache cache;
  cache.x = x;
  cache.m = spec.m;
  cache.n = spec.n;
  cache.depth = spec.depth;
  cache.version = spec.version;
  cache.h.resize(static_cast<std::size_t>(spec.depth) + 1);
  cache.u.resize(static_cast<std::size_t>(spec.depth));
  cache.z.resize(static_cast<std::size_t>(spec.depth));
  cache.act.resize(static_cast<std::size_t>(spec.depth));
  cache.h[0] = rmsnorm_rows(x, spec.rms_eps);
  for (int l = 0; l < spec.depth; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    cache.u[li] = rmsnorm_rows(cache.h[li], spec.rms_eps);
    cache.z[li] = cache.u[li] * spec.w_in[li].transpose();
    cache.z[li].rowwise() += spec.bias[li].row(0);
    cache.act[li] = relu2(cache.z[li]);
    cache.h[li + 1] = cache.h[li] + cache.act[li] * spec.w_out[li].transpose();
  }
  cache.g = rmsnorm_rows(cache.h[static_cast<std::size_t>(spec.depth)], spec.rms_eps);
  cache.logits.noalias() = cache.g * spec.head.transpose();
  return cache;
}

DeepGrads deep_backward(const DeepSpec& spec, const DeepCache& cache,
                        const Eigen::Ref<const Eigen::MatrixXd>& teacher_probs) {
  if (cache.m != spec.m || cache.n != spec.n || cache.depth != spec.depth ||
      cache.version != spec.version) {
    throw std::invalid_argument("deep_backward: stale or mismatched cache");
  }
  if (teacher_probs.rows() != cache.logits.rows() ||
      teacher_probs.cols() != cache.logits.cols()) {
    throw std::invalid_argument("deep_backward: teacher_probs shape mismatch");
  }
  const double inv_b = 1.0 / static_cast<double>(cache.x.rows());

  DeepGrads grads;
  grads.w_in.resize(static_cast<std::size_t>(spec.depth));
  grads.bias.resize(static_cast<std::size_t>(spec.depth));
  grads.w_out.resize(static_cast<std::size_t>(spec.depth));

  Eigen::MatrixXd q = core::softmax_rows(cache.logits);
  Eigen::MatrixXd dlogits = inv_b * (q - teacher_probs);

  grads.head.noalias() = dlogits.transpose() * cache.g;
  Eigen::MatrixXd dg = dlogits * spec.head;
  Eigen::MatrixXd dh = rmsnorm_backward_rows(
      cache.h[static_cast<std::size_t>(spec.depth)], dg, spec.rms_eps);

  for (int l = spec.depth - 1; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    grads.w_out[li].noalias() = dh.transpose() * cache.act[li];
    Eigen::MatrixXd dact = dh * spec.w_out[li];
    Eigen::MatrixXd dz = relu2_backward(cache.z[li], dact);
    grads.w_in[li].noalias() = dz.transpose() * cache.u[li];
    grads.bias[li] = dz.colwise().sum();
    Eigen::MatrixXd du = dz * spec.w_in[li];
    // Residual branch: dh flows through both the MLP and the skip.
    dh += rmsnorm_backward_rows(cache.h[li], du, spec.rms_eps);
  }
  return grads;
}

double param_norm(const DeepSpec& spec) {
  double acc = spec.head.squaredNorm();
  for (int l = 0; l < spec.depth; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    acc += spec.w_in[li].squaredNorm() + spec.bias[li].squaredNorm() +
           spec.w_out[li].squaredNorm();
  }
  return std::sqrt(acc);
}

train::Trajectory run_deep_training(const DeepSpec& teacher, const DeepSpec& student,
                                    const train::TrainConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto t_begin = Clock::now();
  if (teacher.m != student.m || teacher.n != student.n) {
    throw std::invalid_argument("run_deep_training: teacher/student width mismatch");
  }

  DeepSpec w = student;
  const optim::OptimConfig& ocfg = config.optimizer;

  std::vector<Eigen::MatrixXd*> params;
  for (int l = 0; l < w.depth; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    params.push_back(&w.w_in[li]);
    params.push_back(&w.bias[li]);
    params.push_back(&w.w_out[li]);
  }
  params.push_back(&w.head);
  std::vector<optim::Optimizer> opts;
  opts.reserve(params.size());
  for (auto* p : params) {
    opts.emplace_back(ocfg, p->rows(), p->cols());
  }

  core::InputBatch eval =
      core::sample_input_batch(config.eval_batch, config.m,
                               rng::derive_seed(config.data_seed, "eval"));
  Eigen::MatrixXd eval_teacher_logits = deep_logits(teacher, eval.x);
  Eigen::MatrixXd eval_log_p = core::log_softmax_rows(eval_teacher_logits);
  Eigen::MatrixXd eval_p = eval_log_p.array().exp().matrix();

  train::Trajectory traj;
  traj.config = config;
  const std::vector<long> grid = train::record_steps(config.steps, config.record_every);

  auto record = [&](long step_idx, double tau, double lr) -> bool {
    Eigen::MatrixXd student_logits = deep_logits(w, eval.x);
    train::TrajectoryPoint pt;
    pt.step = step_idx;
    pt.tau = tau;
    pt.lr = lr;
    pt.loss = core::eval_loss(eval_log_p, eval_p, student_logits);
    pt.beta_measured = core::measure_beta(student_logits);
    pt.weight_norm = param_norm(w);
    pt.align_cos = core::alignment_cosine(w.head, teacher.head).value;
    traj.points.push_back(pt);
    return std::isfinite(pt.loss);
  };

  std::size_t grid_pos = 0;
  for (long t = 0; t <= config.steps; ++t) {
    if (grid_pos < grid.size() && grid[grid_pos] == t) {
      const double lr_here =
          t < config.steps ? optim::lr_at(ocfg.schedule, ocfg.lr_max, t)
                           : optim::lr_at(ocfg.schedule, ocfg.lr_max, config.steps);
      if (!record(t, opts.front().tau(), lr_here)) {
        traj.diverged = true;
        break;
      }
      ++grid_pos;
    }
    if (t == config.steps) break;

    core::InputBatch batch = core::sample_input_batch(
        config.batch_size, config.m, rng::derive_seed(config.data_seed, "batch",
                                                      static_cast<std::uint64_t>(t)));
    Eigen::MatrixXd p = core::softmax_rows(deep_logits(teacher, batch.x));
    DeepCache cache = deep_forward(w, batch.x);
    DeepGrads grads = deep_backward(w, cache, p);

    const double lr = optim::lr_at(ocfg.schedule, ocfg.lr_max, t);
    std::vector<Eigen::MatrixXd*> gptrs;
    for (int l = 0; l < w.depth; ++l) {
      const std::size_t li = static_cast<std::size_t>(l);
      gptrs.push_back(&grads.w_in[li]);
      gptrs.push_back(&grads.bias[li]);
      gptrs.push_back(&grads.w_out[li]);
    }
    gptrs.push_back(&grads.head);
    bool finite = true;
    for (auto* g : gptrs) {
      if (!g->allFinite()) finite = false;
    }
    if (!finite) {
      traj.diverged = true;
      break;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      opts[i].step(*params[i], *gptrs[i], lr);
    }
    w.version += 1;
  }

  traj.wall_seconds =
      std::chrono::duration<double>(Clock::now() - t_begin).count();
  return traj;
}

}  // namespace sclab::deep
