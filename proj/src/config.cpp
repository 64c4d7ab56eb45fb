#include "radarfield/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>

extern char** environ;

namespace radarfield {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = parse_double(k, v); },
          [m](const RunConfig& c) { return fmt(m(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field integer(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) {
            using T = std::remove_reference_t<decltype(m(c))>;
            const long long x = parse_int(k, v);
            if constexpr (std::is_unsigned_v<T>) {
              if (x < 0) throw ConfigError(k + ": must be >= 0");
            }
            m(c) = static_cast<T>(x);
          },
          [m](const RunConfig& c) { return std::to_string(m(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field boolean(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = parse_bool(k, v); },
          [m](const RunConfig& c) { return std::string(m(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

#define RF_MEMBER(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    m["seed"] = integer(RF_MEMBER(seed));
    m["ablation"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                       try {
                         c.ablation = parse_ablation(v);
                       } catch (const std::invalid_argument& e) {
                         throw ConfigError(e.what());
                       }
                     },
                     [](const RunConfig& c) { return to_string(c.ablation); }};
    m["encoding.fourier.L"] = integer(RF_MEMBER(model.fourier.num_frequencies));
    m["encoding.fourier.base"] = real(RF_MEMBER(model.fourier.base_frequency));
    m["encoding.fourier.include_input"] = boolean(RF_MEMBER(model.fourier.include_input));
    m["encoding.sh.degree"] = integer(RF_MEMBER(model.sh.degree));
    m["grid.leaf_resolution"] = real(RF_MEMBER(model.grid.leaf_resolution));
    m["grid.levels"] = integer(RF_MEMBER(model.grid.levels));
    m["grid.feature_dim"] = integer(RF_MEMBER(model.grid.feature_dim));
    m["grid.concat_planes"] = boolean(RF_MEMBER(model.grid.concat_planes));
    m["grid.init_range"] = real(RF_MEMBER(model.grid.init_range));
    m["network.sdf_hidden"] = integer(RF_MEMBER(model.net.sdf_hidden));
    m["network.sdf_layers"] = integer(RF_MEMBER(model.net.sdf_layers));
    m["network.intensity_hidden"] = integer(RF_MEMBER(model.net.intensity_hidden));
    m["network.intensity_layers"] = integer(RF_MEMBER(model.net.intensity_layers));
    m["network.geo_feature"] = boolean(RF_MEMBER(model.net.geo_feature));
    m["network.normals"] = boolean(RF_MEMBER(model.net.normals));
    m["network.sdf_to_intensity"] = boolean(RF_MEMBER(model.net.sdf_to_intensity));
    m["network.intensity_grad_to_sdf"] = boolean(RF_MEMBER(model.net.intensity_grad_to_sdf));
    m["sampler.near_surface"] = integer(RF_MEMBER(sampler.near_surface));
    m["sampler.free_space"] = integer(RF_MEMBER(sampler.free_space));
    m["sampler.truncation"] = real(RF_MEMBER(sampler.truncation));
    m["sampler.free_space_margin"] = real(RF_MEMBER(sampler.free_space_margin));
    m["sampler.near_clip"] = real(RF_MEMBER(sampler.near_clip));
    m["trainer.iterations"] = integer(RF_MEMBER(trainer.iterations));
    m["trainer.learning_rate"] = real(RF_MEMBER(trainer.learning_rate));
    m["trainer.freeze_sdf_after"] = integer(RF_MEMBER(trainer.freeze_sdf_after));
    m["trainer.sigmoid_scale"] = real(RF_MEMBER(trainer.sigmoid_scale));
    m["trainer.intensity_weight"] = real(RF_MEMBER(trainer.intensity_weight));
    m["trainer.batch_size"] = integer(RF_MEMBER(trainer.batch_size));
    m["trainer.free_space_label_clamp"] = real(RF_MEMBER(trainer.free_space_label_clamp));
    m["trainer.snapshot_every"] = integer(RF_MEMBER(trainer.snapshot_every));
    m["preprocess.near_field_radius"] = real(RF_MEMBER(preprocess.near_field_radius));
    m["preprocess.accumulate"] = integer(RF_MEMBER(preprocess.accumulate));
    m["preprocess.accumulate_overlap"] = boolean(RF_MEMBER(preprocess.accumulate_overlap));
    m["preprocess.holdout_every"] = integer(RF_MEMBER(preprocess.holdout_every));
    m["preprocess.pose_max_skew"] = real(RF_MEMBER(preprocess.pose_max_skew));
    m["preprocess.scene_padding"] = real(RF_MEMBER(preprocess.scene_padding));
    m["mesh.voxel_size"] = real(RF_MEMBER(mesh.voxel_size));
    m["mesh.mask_radius"] = real(RF_MEMBER(mesh.mask_radius));
    m["eval.mesh_samples"] = integer(RF_MEMBER(eval.mesh_samples));
    m["eval.seed"] = integer(RF_MEMBER(eval.seed));
    m["eval.tau"] = real(RF_MEMBER(eval.thresholds.tau));
    m["eval.discard"] = real(RF_MEMBER(eval.thresholds.discard));
    m["eval.truncation"] = real(RF_MEMBER(eval.thresholds.truncation));
    m["eval.cell_size"] = real(RF_MEMBER(eval.thresholds.cell_size));
    return m;
  }();
  return f;
}

#undef RF_MEMBER

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&problems](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.emplace_back(e.what());
    }
  };
  check([&] { effective_model().validate(); });
  check([&] { sampler.validate(); });
  check([&] { trainer.validate(); });
  check([&] { eval.thresholds.validate(); });
  check([&] {
    if (preprocess.near_field_radius < 0.0) throw ConfigError("preprocess.near_field_radius must be >= 0");
    if (preprocess.accumulate < 1) throw ConfigError("preprocess.accumulate must be >= 1");
    if (preprocess.holdout_every < 0 || preprocess.holdout_every == 1)
      throw ConfigError("preprocess.holdout_every must be 0 or >= 2");
    if (!(preprocess.scene_padding >= 0.0)) throw ConfigError("preprocess.scene_padding must be >= 0");
  });
  check([&] {
    if (!(mesh.voxel_size > 0.0)) throw ConfigError("mesh.voxel_size must be positive");
  });
  check([&] {
    if (eval.mesh_samples < 1) throw ConfigError("eval.mesh_samples must be >= 1");
  });
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  apply_ablation(m, ablation);
  return m;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

RunConfig parse_config(const std::string& text, RunConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

std::string env_to_key(const std::string& env_name) {
  const std::string prefix = kEnvPrefix;
  if (env_name.rfind(prefix, 0) != 0) return {};
  std::string rest = env_name.substr(prefix.size()), key;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '_' && i + 1 < rest.size() && rest[i + 1] == '_') {
      key += '.';
      ++i;
    } else {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i])));
    }
  }
  return key;
}

std::vector<std::string> apply_env_overrides(RunConfig& cfg, const std::map<std::string, std::string>& env) {
  std::vector<std::string> applied;
  for (const auto& [name, value] : env) {
    const std::string key = env_to_key(name);
    if (key.empty()) continue;
    if (fields().count(key) == 0) continue;  // other RADARFIELD_* variables are not config keys
    set_config_value(cfg, key, value);
    applied.push_back(key);
  }
  return applied;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

}  // namespace radarfield
