#include "sclab/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

#include "sclab/deep_model.hpp"
#include "sclab/io.hpp"
#include "sclab/parallel.hpp"
#include "sclab/rng.hpp"
#include "sclab/version.hpp"

namespace sclab::train {

namespace {

constexpr long kGeometricPoints = 200;

Trajectory run_linear_training(const TrainConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto t_begin = Clock::now();

  core::TeacherSpec teacher = core::sample_teacher(
      config.m, config.n, config.beta_star, config.teacher_seed, config.teacher_dist);
  core::StudentWeights student = core::init_student(
      config.m, config.n, config.init_scale, rng::derive_seed(config.data_seed, "init"));
  const Eigen::MatrixXd w_star = teacher.effective_weight();

  core::InputBatch eval = core::sample_input_batch(
      config.eval_batch, config.m, rng::derive_seed(config.data_seed, "eval"));
  Eigen::MatrixXd eval_teacher_logits = eval.x * w_star.transpose();
  Eigen::MatrixXd eval_log_p = core::log_softmax_rows(eval_teacher_logits);
  Eigen::MatrixXd eval_p = eval_log_p.array().exp().matrix();

  const optim::OptimConfig& ocfg = config.optimizer;
  optim::Optimizer opt(ocfg, config.n, config.m);

  Trajectory traj;
  traj.config = config;
  const std::vector<long> grid = record_steps(config.steps, config.record_every);

  auto record = [&](long step_idx) -> bool {
    Eigen::MatrixXd student_logits = eval.x * student.w.transpose();
    TrajectoryPoint pt;
    pt.step = step_idx;
    pt.tau = opt.tau();
    pt.lr = optim::lr_at(ocfg.schedule, ocfg.lr_max, std::min(step_idx, config.steps));
    pt.loss = core::eval_loss(eval_log_p, eval_p, student_logits);
    pt.beta_measured = core::measure_beta(student_logits);
    pt.weight_norm = student.w.norm();
    pt.align_cos = core::alignment_cosine(student.w, w_star).value;
    traj.points.push_back(pt);
    return std::isfinite(pt.loss);
  };

  std::size_t grid_pos = 0;
  for (long t = 0; t <= config.steps; ++t) {
    if (grid_pos < grid.size() && grid[grid_pos] == t) {
      if (!record(t)) {
        traj.diverged = true;
        break;
      }
      ++grid_pos;
    }
    if (t == config.steps) break;

    core::InputBatch batch = core::sample_input_batch(
        config.batch_size, config.m,
        rng::derive_seed(config.data_seed, "batch", static_cast<std::uint64_t>(t)));
    core::LossGrad lg = core::loss_and_grad(student, teacher, batch);
    if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
      traj.diverged = true;
      break;
    }
    const double lr = optim::lr_at(ocfg.schedule, ocfg.lr_max, t);
    opt.step(student.w, lg.grad, lr);
  }

  traj.wall_seconds = std::chrono::duration<double>(Clock::now() - t_begin).count();
  return traj;
}

const std::vector<std::string> kTeacherFields = {"m", "n", "beta_star"};

bool is_teacher_field(const std::string& field) {
  return std::find(kTeacherFields.begin(), kTeacherFields.end(), field) !=
         kTeacherFields.end();
}

void apply_field(TrainConfig& cfg, const std::string& field, double value) {
  if (field == "m") {
    cfg.m = static_cast<int>(value);
  } else if (field == "n") {
    cfg.n = static_cast<int>(value);
  } else if (field == "beta_star") {
    cfg.beta_star = value;
  } else if (field == "batch_size") {
    cfg.batch_size = static_cast<int>(value);
  } else if (field == "steps") {
    cfg.steps = static_cast<long>(value);
  } else if (field == "init_scale") {
    cfg.init_scale = value;
  } else if (field == "lr_max") {
    cfg.optimizer.lr_max = value;
  } else if (field == "weight_decay") {
    cfg.optimizer.weight_decay = value;
  } else if (field == "beta1") {
    cfg.optimizer.beta1 = value;
  } else if (field == "beta2") {
    cfg.optimizer.beta2 = value;
  } else if (field == "eps") {
    cfg.optimizer.eps = value;
  } else if (field == "depth_student") {
    cfg.depth_student = static_cast<int>(value);
  } else if (field == "depth_teacher") {
    cfg.depth_teacher = static_cast<int>(value);
  } else if (field == "eval_batch") {
    cfg.eval_batch = static_cast<int>(value);
  } else {
    throw std::invalid_argument("sweep: unknown field '" + field + "'");
  }
}

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i) {
    const double f = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    out[static_cast<std::size_t>(i)] = std::pow(10.0, llo + f * (lhi - llo));
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    out[static_cast<std::size_t>(i)] = lo + f * (hi - lo);
  }
  return out;
}

}  // namespace

std::vector<long> record_steps(long steps, long record_every) {
  if (steps < 1) throw std::invalid_argument("record_steps: steps must be >= 1");
  std::set<long> grid{0, steps};
  if (record_every > 0) {
    for (long t = record_every; t < steps; t += record_every) grid.insert(t);
  } else {
    const double lmax = std::log(static_cast<double>(steps));
    for (long k = 0; k < kGeometricPoints; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(kGeometricPoints - 1);
      grid.insert(static_cast<long>(std::llround(std::exp(f * lmax))));
    }
  }
  return {grid.begin(), grid.end()};
}

Trajectory run_training(const TrainConfig& config) {
  if (config.steps < 1 || config.batch_size < 1) {
    throw std::invalid_argument("run_training: steps and batch_size must be >= 1");
  }
  if (config.model == ModelKind::deep) {
    deep::DeepSpec teacher = deep::calibrate_teacher_beta(
        deep::make_deep_spec(config.m, config.n, config.depth_teacher,
                             config.teacher_seed, config.teacher_init_scale),
        config.beta_star, rng::derive_seed(config.teacher_seed, "calibration"));
    deep::DeepSpec student =
        deep::make_deep_spec(config.m, config.n, config.depth_student,
                             rng::derive_seed(config.data_seed, "init"),
                             config.init_scale);
    return deep::run_deep_training(teacher, student, config);
  }
  return run_linear_training(config);
}

std::size_t sweep_cell_count(const SweepConfig& sweep) {
  std::size_t count = 1;
  for (const auto& axis : sweep.axes) {
    if (axis.values.empty()) {
      throw std::invalid_argument("sweep: empty axis '" + axis.field + "'");
    }
    count *= axis.values.size();
  }
  return count;
}

TrainConfig sweep_cell_config(const SweepConfig& sweep, std::size_t index) {
  if (index >= sweep_cell_count(sweep)) {
    throw std::invalid_argument("sweep: cell index out of range");
  }
  TrainConfig cfg = sweep.base;
  // Mixed-radix decode, first axis fastest. The teacher sub-index runs over
  // teacher-affecting axes only, so cells that differ merely in optimizer
  // settings train against the same sampled teacher.
  std::size_t rem = index;
  std::size_t teacher_sub = 0;
  std::size_t teacher_radix = 1;
  for (const auto& axis : sweep.axes) {
    const std::size_t pos = rem % axis.values.size();
    rem /= axis.values.size();
    apply_field(cfg, axis.field, axis.values[pos]);
    if (is_teacher_field(axis.field)) {
      teacher_sub += teacher_radix * pos;
      teacher_radix *= axis.values.size();
    }
  }
  cfg.teacher_seed = rng::derive_seed(sweep.master_seed, "teacher", teacher_sub);
  cfg.data_seed = rng::derive_seed(sweep.master_seed, "data", index);
  return cfg;
}

std::vector<Trajectory> run_sweep(const SweepConfig& sweep, int threads) {
  const std::size_t count = sweep_cell_count(sweep);
  std::vector<Trajectory> cells(count);
  parallel_for_index(count, threads, [&](std::size_t i) {
    cells[i] = run_training(sweep_cell_config(sweep, i));
  });
  return cells;
}

std::filesystem::path run_sweep_to_dir(const SweepConfig& sweep,
                                       const std::filesystem::path& out_dir,
                                       int threads) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<Trajectory> cells = run_sweep(sweep, threads);

  nlohmann::json manifest;
  manifest["name"] = sweep.name;
  manifest["master_seed"] = sweep.master_seed;
  manifest["library_version"] = kVersion;
  manifest["axes"] = nlohmann::json::array();
  for (const auto& axis : sweep.axes) {
    manifest["axes"].push_back({{"field", axis.field}, {"values", axis.values}});
  }
  manifest["cells"] = nlohmann::json::array();

  for (std::size_t i = 0; i < cells.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%03zu.csv", i);
    write_trajectory_csv(out_dir / name, cells[i]);

    nlohmann::json cell;
    cell["index"] = i;
    cell["file"] = name;
    cell["diverged"] = cells[i].diverged;
    cell["teacher_seed"] = cells[i].config.teacher_seed;
    cell["data_seed"] = cells[i].config.data_seed;
    nlohmann::json values;
    std::size_t rem = i;
    for (const auto& axis : sweep.axes) {
      const std::size_t pos = rem % axis.values.size();
      rem /= axis.values.size();
      values[axis.field] = axis.values[pos];
    }
    cell["values"] = values;
    manifest["cells"].push_back(cell);
  }

  const fs::path manifest_path = out_dir / "manifest.json";
  io::atomic_write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

SweepConfig preset(const std::string& name) {
  // The shared temperature grid: eight values log-spaced over three decades,
  // 1/sqrt(3) up to 1000/sqrt(3).
  const std::vector<double> beta_star_grid = logspace(1.0 / std::sqrt(3.0),
                                                      1000.0 / std::sqrt(3.0), 8);
  SweepConfig sweep;
  sweep.name = name;
  TrainConfig& base = sweep.base;

  if (name == "adam_temp_lr") {
    base.optimizer.kind = optim::OptKind::adam;
    base.steps = 2000;
    sweep.axes = {{"beta_star", beta_star_grid}, {"lr_max", logspace(1e-3, 1.0, 12)}};
  } else if (name == "sgd_temp_lr") {
    base.optimizer.kind = optim::OptKind::sgd;
    base.steps = 2000;
    sweep.axes = {{"beta_star", beta_star_grid}, {"lr_max", logspace(1e-2, 1e1, 12)}};
  } else if (name == "adam_init_scan") {
    base.optimizer.kind = optim::OptKind::adam;
    base.steps = 100000;
    base.beta_star = 96.2;
    // init ratio r = beta0 / beta_star; beta0 = init_scale / sqrt(3).
    std::vector<double> scales;
    for (double r : linspace(0.0, 1.0, 8)) {
      scales.push_back(std::sqrt(3.0) * r * base.beta_star);
    }
    sweep.axes = {{"init_scale", scales}, {"lr_max", logspace(1e-3, 1.0, 12)}};
  } else if (name == "adam_cosine") {
    base.optimizer.kind = optim::OptKind::adam;
    base.steps = 100000;
    base.beta_star = 96.2;
    base.optimizer.lr_max = 0.15;
    base.optimizer.schedule.kind = optim::ScheduleKind::warmup_cosine;
    base.optimizer.schedule.total_steps = base.steps;
    std::vector<double> scales;
    for (double r : linspace(0.0, 1.0, 8)) {
      scales.push_back(std::sqrt(3.0) * r * base.beta_star);
    }
    sweep.axes = {{"init_scale", scales}};
  } else if (name == "adam_weight_decay") {
    base.optimizer.kind = optim::OptKind::adam;
    base.optimizer.weight_decay = 0.05;
    base.beta_star = 11.5;
    base.batch_size = 2048;
    base.steps = 1000;
    sweep.axes = {{"lr_max", logspace(1e-3, 1.0, 13)}};
  } else if (name == "deep_residual") {
    base.model = ModelKind::deep;
    base.depth_teacher = 128;
    base.depth_student = 6;
    base.optimizer.kind = optim::OptKind::adam;
    base.optimizer.lr_max = 6e-4;
    base.steps = 40000;
    base.init_scale = 1.0;
    sweep.axes = {{"beta_star", beta_star_grid}};
  } else {
    std::string valid;
    for (const auto& p : preset_names()) valid += " " + p;
    throw std::invalid_argument("unknown preset '" + name + "'; valid:" + valid);
  }
  return sweep;
}

std::vector<std::string> preset_names() {
  return {"adam_temp_lr", "sgd_temp_lr",       "adam_init_scan",
          "adam_cosine",  "adam_weight_decay", "deep_residual"};
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::string out = "step,tau,lr,loss,beta_measured,weight_norm,align_cos\n";
  for (const auto& pt : traj.points) {
    out += std::to_string(pt.step);
    out += ',';
    out += io::format_double(pt.tau);
    out += ',';
    out += io::format_double(pt.lr);
    out += ',';
    out += io::format_double(pt.loss);
    out += ',';
    out += io::format_double(pt.beta_measured);
    out += ',';
    out += io::format_double(pt.weight_norm);
    out += ',';
    out += io::format_double(pt.align_cos);
    out += '\n';
  }
  io::atomic_write_file(path, out);
}

}  // namespace sclab::train
