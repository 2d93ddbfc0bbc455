#include "sclab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sclab/io.hpp"

namespace sclab::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  return static_cast<long>(to_double(key, v));
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + v + "'");
  }
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

// Keys a sweep may turn into axes (numeric TrainConfig/OptimConfig fields).
const std::vector<std::string> kAxisKeys = {
    "m",          "n",    "beta_star", "batch_size", "steps",
    "init_scale", "lr_max", "weight_decay", "beta1",  "beta2",
    "eps",        "depth_student", "depth_teacher", "eval_batch"};

bool is_axis_key(const std::string& key) {
  return std::find(kAxisKeys.begin(), kAxisKeys.end(), key) != kAxisKeys.end();
}

// Applies one scalar key onto the config; returns false for unknown keys.
bool apply_scalar(train::TrainConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "m") cfg.m = static_cast<int>(to_long(key, v));
  else if (key == "n") cfg.n = static_cast<int>(to_long(key, v));
  else if (key == "beta_star") cfg.beta_star = to_double(key, v);
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_long(key, v));
  else if (key == "steps") cfg.steps = to_long(key, v);
  else if (key == "init_scale") cfg.init_scale = to_double(key, v);
  else if (key == "teacher_seed") cfg.teacher_seed = to_seed(key, v);
  else if (key == "data_seed") cfg.data_seed = to_seed(key, v);
  else if (key == "record_every") cfg.record_every = to_long(key, v);
  else if (key == "eval_batch") cfg.eval_batch = static_cast<int>(to_long(key, v));
  else if (key == "depth_student") cfg.depth_student = static_cast<int>(to_long(key, v));
  else if (key == "depth_teacher") cfg.depth_teacher = static_cast<int>(to_long(key, v));
  else if (key == "teacher_init_scale") cfg.teacher_init_scale = to_double(key, v);
  else if (key == "lr_max") cfg.optimizer.lr_max = to_double(key, v);
  else if (key == "beta1") cfg.optimizer.beta1 = to_double(key, v);
  else if (key == "beta2") cfg.optimizer.beta2 = to_double(key, v);
  else if (key == "eps") cfg.optimizer.eps = to_double(key, v);
  else if (key == "weight_decay") cfg.optimizer.weight_decay = to_double(key, v);
  else if (key == "warmup_frac") cfg.optimizer.schedule.warmup_frac = to_double(key, v);
  else if (key == "floor_frac") cfg.optimizer.schedule.floor_frac = to_double(key, v);
  else if (key == "teacher_dist") {
    if (v == "normal") cfg.teacher_dist = core::TeacherDist::normal;
    else if (v == "uniform") cfg.teacher_dist = core::TeacherDist::uniform;
    else throw std::invalid_argument("config: teacher_dist must be normal|uniform, got '" + v + "'");
  } else if (key == "model") {
    if (v == "linear") cfg.model = train::ModelKind::linear;
    else if (v == "deep") cfg.model = train::ModelKind::deep;
    else throw std::invalid_argument("config: model must be linear|deep, got '" + v + "'");
  } else if (key == "optimizer") {
    if (v == "sgd") cfg.optimizer.kind = optim::OptKind::sgd;
    else if (v == "adam") cfg.optimizer.kind = optim::OptKind::adam;
    else throw std::invalid_argument("config: optimizer must be sgd|adam, got '" + v + "'");
  } else if (key == "schedule") {
    if (v == "constant") cfg.optimizer.schedule.kind = optim::ScheduleKind::constant;
    else if (v == "warmup_cosine")
      cfg.optimizer.schedule.kind = optim::ScheduleKind::warmup_cosine;
    else throw std::invalid_argument("config: schedule must be constant|warmup_cosine, got '" + v + "'");
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw io::ParseError("config: " + origin + ":" + std::to_string(lineno) +
                           ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw io::ParseError("config: " + origin + ":" + std::to_string(lineno) +
                           ": empty key or value");
    }
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw io::FileError("cannot open config file: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_kv_text(buf.str(), path.string());
}

train::TrainConfig train_config_from(const std::map<std::string, std::string>& kv) {
  train::TrainConfig cfg;
  for (const auto& [key, value] : kv) {
    if (value.find(',') != std::string::npos) {
      throw std::invalid_argument("config: key '" + key +
                                  "' holds a list; lists are only valid in sweep configs");
    }
    if (!apply_scalar(cfg, key, value)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  cfg.optimizer.schedule.total_steps = cfg.steps;
  return cfg;
}

train::SweepConfig sweep_config_from(const std::map<std::string, std::string>& kv) {
  train::SweepConfig sweep;
  for (const auto& [key, value] : kv) {
    if (key == "master_seed") {
      sweep.master_seed = to_seed(key, value);
      continue;
    }
    if (key == "name") {
      sweep.name = value;
      continue;
    }
    if (value.find(',') != std::string::npos) {
      if (!is_axis_key(key)) {
        throw std::invalid_argument("config: key '" + key + "' cannot be a sweep axis");
      }
      train::SweepAxis axis;
      axis.field = key;
      for (const auto& cell : split_list(value)) {
        axis.values.push_back(to_double(key, cell));
      }
      sweep.axes.push_back(std::move(axis));
      continue;
    }
    if (!apply_scalar(sweep.base, key, value)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  sweep.base.optimizer.schedule.total_steps = sweep.base.steps;
  return sweep;
}

}  // namespace sclab::config
