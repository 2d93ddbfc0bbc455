#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sclab/core_model.hpp"
#include "sclab/optim.hpp"

namespace sclab::train {

enum class ModelKind { linear, deep };

struct TrainConfig {
  int m = 32;
  int n = 128;
  double beta_star = 1.0;
  int batch_size = 1024;
  long steps = 1000;
  optim::OptimConfig optimizer;
  double init_scale = 0.0;  // 0 => zero init
  std::uint64_t teacher_seed = 1;
  std::uint64_t data_seed = 2;
  long record_every = 0;  // 0 => geometric grid, ~200 rows per run
  core::TeacherDist teacher_dist = core::TeacherDist::normal;
  ModelKind model = ModelKind::linear;
  int depth_student = 6;    // deep model only
  int depth_teacher = 128;  // deep model only
  double teacher_init_scale = 1.0;  // deep model only
  int eval_batch = 4096;
};

struct TrajectoryPoint {
  long step = 0;
  double tau = 0.0;
  double lr = 0.0;
  double loss = 0.0;  // batch-mean KL on the fixed held-out batch
  double beta_measured = 0.0;
  double weight_norm = 0.0;
  double align_cos = 0.0;
};

struct Trajectory {
  TrainConfig config;
  std::vector<TrajectoryPoint> points;
  bool diverged = false;
  double wall_seconds = 0.0;
};

// Recording grid: always contains step 0 and the final step; record_every = 0
// selects ~200 geometrically spaced steps so log-log fits stay
// well-conditioned without huge files.
std::vector<long> record_steps(long steps, long record_every);

// One training run: a fresh i.i.d. batch every step (per-step seeds derived
// from data_seed), one optimizer step, evaluation on a held-out batch drawn
// once. Deterministic in (config, seeds); a non-finite loss truncates the
// trajectory and flags it diverged.
Trajectory run_training(const TrainConfig& config);

struct SweepAxis {
  std::string field;  // numeric TrainConfig / OptimConfig field name
  std::vector<double> values;
};

struct SweepConfig {
  std::string name = "sweep";
  TrainConfig base;
  std::vector<SweepAxis> axes;
  std::uint64_t master_seed = 1;
};

// Number of grid cells (product of axis sizes; 1 when there are no axes).
std::size_t sweep_cell_count(const SweepConfig& sweep);
// Cell config for a flat index: axis values applied onto the base config,
// teacher/data seeds derived from (master_seed, cell index). Cells sharing
// all teacher-affecting axis values (m, n, beta_star) share a teacher seed.
TrainConfig sweep_cell_config(const SweepConfig& sweep, std::size_t index);

// Runs every cell (optionally in parallel); divergence of one cell never
// aborts the sweep. Results are ordered by cell index regardless of the
// thread count.
std::vector<Trajectory> run_sweep(const SweepConfig& sweep, int threads = 0);

// As run_sweep, but writes one trajectory CSV per cell plus manifest.json
// into out_dir. Returns the manifest path.
std::filesystem::path run_sweep_to_dir(const SweepConfig& sweep,
                                       const std::filesystem::path& out_dir,
                                       int threads = 0);

// Paper experiment grids: adam_temp_lr, sgd_temp_lr, adam_init_scan,
// adam_cosine, adam_weight_decay, deep_residual.
SweepConfig preset(const std::string& name);
std::vector<std::string> preset_names();

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace sclab::train
