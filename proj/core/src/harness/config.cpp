// Copyright 2026 The simnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "simnet/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "simnet/error.hpp"
#include "simnet/rng.hpp"

namespace simnet::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

struct Field {
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define SIZE_FIELD(name)                                                               \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = to_size(#name, v); }, \
           [](const TrainConfig& c) { return std::to_string(c.name); }}}
#define DOUBLE_FIELD(name)                                                               \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
           [](const TrainConfig& c) { return fmt_double(c.name); }}}
#define BOOL_FIELD(name)                                                               \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = to_bool(#name, v); }, \
           [](const TrainConfig& c) { return std::string(c.name ? "true" : "false"); }}}

// Serialization order is this table's order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      SIZE_FIELD(epochs),
      SIZE_FIELD(batch_size),
      DOUBLE_FIELD(lr),
      DOUBLE_FIELD(weight_decay),
      SIZE_FIELD(lr_step),
      DOUBLE_FIELD(lr_gamma),
      {"seed", {[](TrainConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                [](const TrainConfig& c) { return std::to_string(c.seed); }}},
      {"variant",
       {[](TrainConfig& c, const std::string& v) { c.variant = fusion::parse_variant(v); },
        [](const TrainConfig& c) { return fusion::to_string(c.variant); }}},
      // Fusion key alone selects the SIM-Net head (concat, ca_pc2img, ...).
      {"fusion",
       {[](TrainConfig& c, const std::string& v) { c.variant = fusion::parse_fusion_key(v); },
        nullptr}},
      SIZE_FIELD(classes),
      SIZE_FIELD(cloud_dims),
      SIZE_FIELD(points),
      SIZE_FIELD(image_size),
      BOOL_FIELD(augment_image),
      BOOL_FIELD(augment_cloud),
      BOOL_FIELD(masked_image),
      BOOL_FIELD(input_transform),
      BOOL_FIELD(feature_transform),
      DOUBLE_FIELD(transform_reg),
      DOUBLE_FIELD(dropout),
      DOUBLE_FIELD(val_fraction),
      SIZE_FIELD(repeats),
      DOUBLE_FIELD(keep_fraction),
      BOOL_FIELD(zero_z),
      {"manifest", {[](TrainConfig& c, const std::string& v) { c.manifest = v; },
                    [](const TrainConfig& c) { return "\"" + c.manifest + "\""; }}},
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  switch (batch_size) {
    case 8:
    case 16:
    case 32:
    case 64:
    case 128:
      break;
    default:
      throw ConfigError("batch_size must be one of 8, 16, 32, 64, 128");
  }
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
  if (lr_step < 1) throw ConfigError("lr_step must be at least 1");
  if (!(lr_gamma > 0 && lr_gamma <= 1)) throw ConfigError("lr_gamma must be in (0, 1]");
  if (cloud_dims != 3 && cloud_dims != 6) throw ConfigError("cloud_dims must be 3 or 6");
  if (points < 1) throw ConfigError("points must be positive");
  if (image_size < 8) throw ConfigError("image_size must be at least 8");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("val_fraction must be in (0, 1)");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (!(keep_fraction > 0 && keep_fraction <= 1)) {
    throw ConfigError("keep_fraction must be in (0, 1]");
  }
  model_config(*this).validate();
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = unquote(trim(body.substr(eq + 1)));
    bool found = false;
    for (const auto& [name, field] : fields()) {
      if (name == key) {
        field.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    if (!field.get) continue;
    out += name + " = " + field.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const TrainConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_text(cfg))));
  return buf;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) { return to_text(a) == to_text(b); }

fusion::ModelConfig model_config(const TrainConfig& cfg) {
  fusion::ModelConfig m;
  m.variant = cfg.variant;
  m.point = enc::PointEncoderConfig::defaults(cfg.cloud_dims);
  m.point.use_input_transform = cfg.input_transform;
  m.point.use_feature_transform = cfg.feature_transform;
  m.point.transform_reg_weight = cfg.transform_reg;
  m.image.input_size = cfg.image_size;
  m.ccm_image.input_size = cfg.image_size;
  m.classes = cfg.classes;
  m.dropout = cfg.dropout;
  return m;
}

}  // namespace simnet::harness
