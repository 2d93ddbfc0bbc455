// Command-line surface for the teacher-student softmax laboratory: training
// runs and sweeps, Monte-Carlo thermodynamic curves, the aligned-student ODE,
// power-law fitting, entropy matching, and SVG line plots.
//
// Exit codes: 0 success, 1 internal error, 2 usage error, 3 missing file,
// 4 malformed input, 5 domain/numeric rejection.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "sclab/ansatz_ode.hpp"
#include "sclab/config.hpp"
#include "sclab/core_model.hpp"
#include "sclab/deep_model.hpp"
#include "sclab/entropy.hpp"
#include "sclab/io.hpp"
#include "sclab/optim.hpp"
#include "sclab/rng.hpp"
#include "sclab/scaling_fit.hpp"
#include "sclab/svg.hpp"
#include "sclab/thermo.hpp"
#include "sclab/trainer.hpp"
#include "sclab/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitMalformed = 4;
constexpr int kExitDomain = 5;

int run_train(const std::string& config_path, const std::string& out_path) {
  sclab::train::TrainConfig cfg =
      sclab::config::train_config_from(sclab::config::parse_kv_file(config_path));
  sclab::train::Trajectory traj = sclab::train::run_training(cfg);
  sclab::train::write_trajectory_csv(out_path, traj);
  const auto& last = traj.points.back();
  std::cout << "wrote " << out_path << ": " << traj.points.size() << " rows, final step "
            << last.step << ", final loss " << sclab::io::format_double(last.loss)
            << (traj.diverged ? " (diverged)" : "") << "\n";
  return kExitOk;
}

int run_sweep_cmd(const std::string& preset_name, const std::string& config_path,
                  const std::string& out_dir, int threads) {
  sclab::train::SweepConfig sweep;
  if (!preset_name.empty()) {
    sweep = sclab::train::preset(preset_name);
  } else if (!config_path.empty()) {
    sweep = sclab::config::sweep_config_from(sclab::config::parse_kv_file(config_path));
  } else {
    std::cerr << "error: code=2 sweep needs --preset or --config\n";
    return kExitUsage;
  }
  const fs::path manifest = sclab::train::run_sweep_to_dir(sweep, out_dir, threads);
  std::cout << "wrote " << sclab::train::sweep_cell_count(sweep) << " cells + "
            << manifest.string() << "\n";
  return kExitOk;
}

int run_thermo(double beta_star, int n, int points, int sets, int batch,
               std::uint64_t seed, const std::string& out_path) {
  sclab::thermo::ThermoConfig cfg;
  cfg.num_energy_sets = sets;
  cfg.batch_per_set = batch;
  cfg.seed = seed;
  sclab::thermo::ThermoCurve curve = sclab::thermo::compute_curve(beta_star, n, cfg, points);

  sclab::io::Table t;
  t.columns = {"beta",     "lnZ",      "F",        "U",        "S",
               "L",        "dLdBeta",  "stderr_lnZ", "stderr_F", "stderr_U",
               "stderr_S", "stderr_L", "stderr_dLdBeta"};
  t.data = {curve.beta_grid, curve.lnZ,  curve.F,    curve.U,    curve.S,
            curve.L,         curve.dLdBeta, curve.se_lnZ, curve.se_F, curve.se_U,
            curve.se_S,      curve.se_L, curve.se_dLdBeta};
  sclab::io::atomic_write_file(out_path, sclab::io::to_csv(t));
  std::cout << "wrote " << out_path << ": " << points << " grid points, beta_star "
            << sclab::io::format_double(beta_star) << "\n";
  return kExitOk;
}

int run_ode(const std::string& model_name, double c0, double c2,
            const std::string& curve_path, double beta0, double beta_star,
            double c_eff, int n, double tau_max, double step,
            const std::string& out_path) {
  sclab::ode::UModel model = sclab::ode::LinearHighTempU{};
  if (model_name == "series") {
    model = sclab::ode::SeriesLowTempU{c0, c2};
  } else if (model_name == "linear") {
    model = sclab::ode::LinearHighTempU{};
  } else if (model_name == "tabulated") {
    if (curve_path.empty()) {
      std::cerr << "error: code=2 tabulated model needs --curve\n";
      return kExitUsage;
    }
    sclab::io::Table t = sclab::io::read_csv(curve_path);
    sclab::thermo::ThermoCurve curve;
    curve.beta_grid = t.column("beta");
    curve.U = t.column("U");
    curve.L = t.column("L");
    curve.beta_star = beta_star;
    curve.n = n;
    model = sclab::ode::TabulatedU(curve);
  } else {
    std::cerr << "error: code=2 unknown U model '" << model_name
              << "' (series|linear|tabulated)\n";
    return kExitUsage;
  }

  sclab::ode::OdeRun run =
      sclab::ode::integrate_beta(model, beta0, beta_star, c_eff, n, tau_max, step);
  sclab::io::Table t;
  t.columns = {"tau", "beta", "loss_model"};
  t.data = {run.tau, run.beta, run.loss};
  sclab::io::atomic_write_file(out_path, sclab::io::to_csv(t));
  std::cout << "wrote " << out_path << ": " << run.tau.size() << " rows, final beta "
            << sclab::io::format_double(run.beta[run.beta.size() - 1]) << "\n";
  return kExitOk;
}

int run_fit(const std::string& input_path, const std::string& x_col, bool full,
            const std::string& out_path, std::uint64_t seed) {
  sclab::io::Table t = sclab::io::read_csv(input_path);
  std::string xc = x_col;
  if (xc.empty()) {
    xc = t.has_column("tau") ? "tau" : "step";
  }
  const Eigen::VectorXd& xs_raw = t.column(xc);
  const Eigen::VectorXd& ls_raw = t.column("loss");

  std::vector<double> xs, ls;
  for (Eigen::Index i = 0; i < xs_raw.size(); ++i) {
    if (xs_raw[i] > 0.0 && ls_raw[i] > 0.0) {
      xs.push_back(xs_raw[i]);
      ls.push_back(ls_raw[i]);
    }
  }
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  Eigen::VectorXd l = Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  if (x.size() < 8) {
    throw std::invalid_argument("fit: fewer than 8 usable (positive) rows in " + input_path);
  }

  sclab::fit::IndexWindow w{0, static_cast<std::size_t>(x.size())};
  if (!full) {
    w = sclab::fit::auto_window(x, l);
  }
  const Eigen::Index lo = static_cast<Eigen::Index>(w.lo);
  const Eigen::Index len = static_cast<Eigen::Index>(w.size());
  sclab::fit::PowerLawFit f =
      sclab::fit::fit_power_law_offset(x.segment(lo, len), l.segment(lo, len), seed);

  json out;
  out["c_tau"] = f.coefficient;
  out["alpha_tau"] = f.exponent;
  out["offset"] = f.offset;
  out["window"] = {{"index_lo", w.lo},
                   {"index_hi", w.hi},
                   {"x_lo", x[lo]},
                   {"x_hi", x[static_cast<Eigen::Index>(w.hi) - 1]},
                   {"x_column", xc}};
  out["residual"] = f.rms_residual;
  out["stderr"] = f.bootstrap_stderr;
  out["fittable"] = f.fittable;
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    sclab::io::atomic_write_file(out_path, text);
  }
  return kExitOk;
}

int run_entropy(int n, double target, double tol, int samples, std::uint64_t seed) {
  sclab::entropy::BetaSolution sol =
      sclab::entropy::solve_beta_for_entropy(n, target, tol, samples, seed);
  json out;
  out["beta"] = sol.beta;
  out["bracket"] = {sol.bracket_lo, sol.bracket_hi};
  out["c0_asym"] = std::sqrt(2.0 * std::log(static_cast<double>(n)));
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_plot(const std::vector<std::string>& inputs, const std::string& x_col,
             const std::string& y_col, bool logx, bool logy, double ref_slope,
             bool has_ref, const std::string& out_path) {
  std::vector<sclab::svg::Series> series;
  for (const auto& path : inputs) {
    sclab::io::Table t = sclab::io::read_csv(path);
    sclab::svg::Series s;
    s.label = fs::path(path).stem().string();
    s.x = t.column(x_col);
    s.y = t.column(y_col);
    if (logx || logy) {
      // Keep only rows that are representable on the requested axes.
      std::vector<double> xs, ys;
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        if ((!logx || s.x[i] > 0.0) && (!logy || s.y[i] > 0.0)) {
          xs.push_back(s.x[i]);
          ys.push_back(s.y[i]);
        }
      }
      if (xs.empty()) {
        throw std::invalid_argument("plot: no positive rows in " + path);
      }
      s.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      s.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    }
    series.push_back(std::move(s));
  }
  sclab::svg::AxesSpec axes;
  axes.logx = logx;
  axes.logy = logy;
  axes.x_label = x_col;
  axes.y_label = y_col;
  if (has_ref) axes.ref_slope = ref_slope;
  sclab::io::atomic_write_file(out_path, sclab::svg::render_lines_svg(series, axes));
  std::cout << "wrote " << out_path << ": " << series.size() << " series\n";
  return kExitOk;
}

int run_selftest();

int dispatch(int argc, char** argv) {
  CLI::App app{"sclab: softmax teacher-student scaling laboratory"};
  app.set_version_flag("--version", std::string(sclab::kVersion));
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "single training run from a config file");
  std::string train_config, train_out = "traj.csv";
  train->add_option("--config", train_config, "flat key=value config file")->required();
  train->add_option("--out", train_out, "trajectory CSV path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid of training runs");
  std::string sweep_preset, sweep_config, sweep_dir = "sweep_out";
  int sweep_threads = 0;
  sweep->add_option("--preset", sweep_preset, "one of the named experiment grids");
  sweep->add_option("--config", sweep_config, "sweep config file (comma lists = axes)");
  sweep->add_option("--out-dir", sweep_dir, "output directory");
  sweep->add_option("--threads", sweep_threads, "parallel cells (0 = hardware)");

  // thermo
  auto* thermo = app.add_subcommand("thermo", "Monte-Carlo thermodynamic curve");
  double th_beta_star = 100.0;
  int th_n = 128, th_points = 100, th_sets = 10, th_batch = 1024;
  std::uint64_t th_seed = 1;
  std::string th_out = "thermo.csv";
  thermo->add_option("--beta-star", th_beta_star, "teacher inverse temperature")->required();
  thermo->add_option("--n", th_n, "number of classes")->required();
  thermo->add_option("--points", th_points, "grid points in [0, beta_star]");
  thermo->add_option("--sets", th_sets, "independent energy sets");
  thermo->add_option("--batch", th_batch, "samples per set");
  thermo->add_option("--seed", th_seed, "RNG seed");
  thermo->add_option("--out", th_out, "curve CSV path");

  // ode
  auto* ode = app.add_subcommand("ode", "integrate the aligned-student ODE");
  std::string ode_model = "series", ode_curve, ode_out = "ode.csv";
  double ode_c0 = 0.0, ode_c2 = 1.0, ode_beta0 = 0.0, ode_beta_star = 100.0;
  double ode_c_eff = 1.0, ode_tau_max = 0.0, ode_step = 0.0;
  int ode_n = 128;
  ode->add_option("--model", ode_model, "series|linear|tabulated");
  ode->add_option("--c0", ode_c0, "series constant term");
  ode->add_option("--c2", ode_c2, "series 1/beta^2 coefficient");
  ode->add_option("--curve", ode_curve, "thermo CSV for the tabulated model");
  ode->add_option("--beta0", ode_beta0, "initial beta")->required();
  ode->add_option("--beta-star", ode_beta_star, "target beta")->required();
  ode->add_option("--c-eff", ode_c_eff, "effective step constant");
  ode->add_option("--n", ode_n, "number of classes");
  ode->add_option("--tau-max", ode_tau_max, "integration horizon")->required();
  ode->add_option("--step", ode_step, "RK4 step (0 = tau_max/1e6)");
  ode->add_option("--out", ode_out, "run CSV path");

  // fit
  auto* fit = app.add_subcommand("fit", "offset power-law fit of a loss curve");
  std::string fit_input, fit_x, fit_out;
  std::uint64_t fit_seed = 1;
  bool fit_full = false;
  fit->add_option("--input", fit_input, "CSV with (step|tau, loss) columns")->required();
  fit->add_option("--x", fit_x, "x column (default: tau if present, else step)");
  fit->add_flag("--full", fit_full, "fit all rows instead of the auto-selected window");
  fit->add_option("--seed", fit_seed, "bootstrap seed");
  fit->add_option("--out", fit_out, "also write the JSON report here");

  // entropy
  auto* ent = app.add_subcommand("entropy", "solve beta for a target softmax entropy");
  int ent_n = 32000, ent_samples = 1024;
  double ent_target = 1.69, ent_tol = 0.25;
  std::uint64_t ent_seed = 1;
  ent->add_option("--n", ent_n, "number of classes")->required();
  ent->add_option("--target", ent_target, "target mean entropy (nats)")->required();
  ent->add_option("--tol", ent_tol, "bracket width tolerance");
  ent->add_option("--samples", ent_samples, "Monte-Carlo draws per evaluation");
  ent->add_option("--seed", ent_seed, "RNG seed (shared across evaluations)");

  // plot
  auto* plot = app.add_subcommand("plot", "deterministic SVG line plot");
  std::vector<std::string> plot_inputs;
  std::string plot_x = "tau", plot_y = "loss", plot_out = "plot.svg";
  bool plot_logx = false, plot_logy = false;
  double plot_ref = 0.0;
  plot->add_option("--input", plot_inputs, "CSV files, one series each")
      ->required()
      ->expected(-1);
  plot->add_option("--x", plot_x, "x column");
  plot->add_option("--y", plot_y, "y column");
  plot->add_flag("--logx", plot_logx, "log x axis");
  plot->add_flag("--logy", plot_logy, "log y axis");
  auto* ref_opt = plot->add_option("--ref-slope", plot_ref, "dashed log-log slope guide");
  plot->add_option("--out", plot_out, "SVG output path");

  // selftest
  app.add_subcommand("selftest", "fast invariant checks of every module");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (train->parsed()) return run_train(train_config, train_out);
  if (sweep->parsed()) return run_sweep_cmd(sweep_preset, sweep_config, sweep_dir, sweep_threads);
  if (thermo->parsed())
    return run_thermo(th_beta_star, th_n, th_points, th_sets, th_batch, th_seed, th_out);
  if (ode->parsed())
    return run_ode(ode_model, ode_c0, ode_c2, ode_curve, ode_beta0, ode_beta_star,
                   ode_c_eff, ode_n, ode_tau_max, ode_step, ode_out);
  if (fit->parsed()) return run_fit(fit_input, fit_x, fit_full, fit_out, fit_seed);
  if (ent->parsed()) return run_entropy(ent_n, ent_target, ent_tol, ent_samples, ent_seed);
  if (plot->parsed())
    return run_plot(plot_inputs, plot_x, plot_y, plot_logx, plot_logy, plot_ref,
                    ref_opt->count() > 0, plot_out);
  return run_selftest();
}

// ---------------------------------------------------------------------------
// selftest: one fast check per module invariant family.

struct Check {
  const char* name;
  bool ok;
  std::string detail;
};

int run_selftest() {
  std::vector<Check> checks;
  auto add = [&](const char* name, bool ok, std::string detail = "") {
    checks.push_back({name, ok, std::move(detail)});
  };

  {
    Eigen::VectorXd v(2);
    v << 0.0, std::log(2.0);
    Eigen::VectorXd s = sclab::core::softmax(v);
    Eigen::VectorXd shifted = sclab::core::softmax(v.array() + 123.0);
    add("softmax values + shift invariance",
        std::abs(s[0] - 1.0 / 3.0) < 1e-12 && (s - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
  {
    Eigen::VectorXd p(2), q(2);
    p << 1.0, 0.0;
    q << 0.5, 0.5;
    add("kl analytic value", std::abs(sclab::core::kl_loss(p, q) - std::log(2.0)) < 1e-12);
  }
  {
    sclab::optim::ScheduleSpec sched;
    sched.kind = sclab::optim::ScheduleKind::warmup_cosine;
    sched.total_steps = 1000;
    const double at_warm = sclab::optim::lr_at(sched, 0.5, 10);
    const double at_end = sclab::optim::lr_at(sched, 0.5, 1000);
    add("schedule endpoints",
        std::abs(at_warm - 0.5) < 1e-12 && std::abs(at_end - 0.05) < 1e-12);
    sclab::optim::ScheduleSpec flat;
    add("constant tau is exact",
        sclab::optim::dynamic_time(flat, 0.023, 2000) == 0.023 * 2000);
  }
  {
    sclab::ode::UModel lin = sclab::ode::LinearHighTempU{};
    sclab::ode::OdeRun run = sclab::ode::integrate_beta(lin, 0.0, 1.0, 1.0, 4, 8.0, 1e-3);
    const double expect = sclab::ode::closed_form_high_temp(0.0, 1.0, 1.0, 4, 8.0).beta;
    add("rk4 matches exponential law",
        std::abs(run.beta[run.beta.size() - 1] - expect) < 1e-9);
  }
  {
    Eigen::VectorXd x(4), y(4);
    x << 0, 1, 2, 3;
    y << 0, 0.5, 0.6, 2.0;
    sclab::ode::MonotoneCubic interp(x, y);
    bool mono = true;
    double prev = interp(0.0);
    for (int i = 1; i <= 300; ++i) {
      const double v = interp(3.0 * i / 300.0);
      if (v < prev - 1e-12) mono = false;
      prev = v;
    }
    add("monotone cubic has no overshoot", mono);
  }
  {
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 1.0, 40.0);
    Eigen::VectorXd l = 5.0 * t.array().pow(-1.0 / 3.0);
    sclab::fit::SlopeFit f =
        sclab::fit::loglog_slope(t, l, {0, static_cast<std::size_t>(t.size())});
    add("loglog slope exact on power law", std::abs(f.slope + 1.0 / 3.0) < 1e-12);
  }
  {
    sclab::fit::LossCurve a{Eigen::VectorXd::LinSpaced(10, 1, 10),
                            Eigen::VectorXd::Constant(10, 2.0)};
    sclab::fit::LossCurve b = a;
    const double same = sclab::fit::collapse_score({a, b});
    b.loss *= 2.0;
    const double shifted = sclab::fit::collapse_score({a, b});
    add("collapse score trivial cases",
        same == 0.0 && std::abs(shifted - 1.0) < 1e-12);
  }
  {
    const auto est = sclab::entropy::mean_entropy(64, 0.0, 8, 7);
    add("entropy at beta=0 is ln n", std::abs(est.h - std::log(64.0)) < 1e-12);
  }
  {
    sclab::train::TrainConfig cfg;
    cfg.m = 4;
    cfg.n = 8;
    cfg.beta_star = 3.0;
    cfg.batch_size = 16;
    cfg.steps = 20;
    cfg.eval_batch = 32;
    cfg.optimizer.lr_max = 0.05;
    auto t1 = sclab::train::run_training(cfg);
    auto t2 = sclab::train::run_training(cfg);
    bool same = t1.points.size() == t2.points.size();
    for (std::size_t i = 0; same && i < t1.points.size(); ++i) {
      same = t1.points[i].loss == t2.points[i].loss &&
             t1.points[i].beta_measured == t2.points[i].beta_measured;
    }
    add("training runs are bit-deterministic", same);
  }
  {
    std::vector<sclab::svg::Series> s(1);
    s[0].label = "a";
    s[0].x = Eigen::VectorXd::LinSpaced(5, 1, 5);
    s[0].y = s[0].x;
    sclab::svg::AxesSpec axes;
    add("svg render is deterministic",
        sclab::svg::render_lines_svg(s, axes) == sclab::svg::render_lines_svg(s, axes));
  }

  int failures = 0;
  for (const auto& c : checks) {
    if (c.ok) {
      std::cout << "ok   " << c.name << "\n";
    } else {
      ++failures;
      std::cout << "FAIL " << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    }
  }
  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << " ("
            << checks.size() - failures << "/" << checks.size() << ")\n";
  return failures == 0 ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const sclab::io::FileError& e) {
    std::cerr << "error: code=" << kExitMissingFile << " " << e.what() << "\n";
    return kExitMissingFile;
  } catch (const sclab::io::ParseError& e) {
    std::cerr << "error: code=" << kExitMalformed << " " << e.what() << "\n";
    return kExitMalformed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: code=" << kExitDomain << " " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::domain_error& e) {
    std::cerr << "error: code=" << kExitDomain << " " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: code=" << kExitInternal << " " << e.what() << "\n";
    return kExitInternal;
  }
}
