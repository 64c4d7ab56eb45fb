#pragma once

#include "radarfield/evaluation.hpp"
#include "radarfield/model.hpp"
#include "radarfield/sampling.hpp"
#include "radarfield/trainer.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarfield {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PreprocessConfig {
  double near_field_radius = 2.5;
  int accumulate = 5;
  bool accumulate_overlap = false;
  int holdout_every = 10;  // frame i is held out when i % n == n - 1; 0 disables
  double pose_max_skew = 0.05;
  double scene_padding = 0.5;
};

struct MeshConfig {
  double voxel_size = 0.1;
  double mask_radius = 0.5;
};

struct RunConfig {
  std::uint64_t seed = 42;
  Ablation ablation = Ablation::None;
  ModelConfig model;
  SamplerConfig sampler;
  TrainerConfig trainer;
  PreprocessConfig preprocess;
  MeshConfig mesh;
  EvalConfig eval;

  /// Throws ConfigError with every problem found.
  void validate() const;
  /// Model config with the ablation applied.
  ModelConfig effective_model() const;
};

/// All known keys, sorted.
std::vector<std::string> config_keys();
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
RunConfig parse_config(const std::string& text, RunConfig base = {});
/// Every key in sorted order; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const RunConfig& cfg);

inline constexpr const char* kEnvPrefix = "RADARFIELD_";
/// RADARFIELD_TRAINER__BATCH_SIZE=1024 sets trainer.batch_size: the prefix is
/// dropped, `__` separates sections and the rest is lower-cased.
std::string env_to_key(const std::string& env_name);
/// Applies every RADARFIELD_* entry of `env` (name -> value); returns the keys set.
std::vector<std::string> apply_env_overrides(RunConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

}  // namespace radarfield
