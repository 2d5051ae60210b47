// Copyright 2026 The signret Authors.
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

#include "signret/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <istream>

#include "signret/errors.hpp"

namespace signret {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

// %.17g round-trips every double.
std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field size_field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<T>(to_u64(k, v));
          },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = to_double(k, v); },
          [member](const TrainConfig& c) { return exact(c.*member); }};
}

Field bool_field(bool TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = to_bool(k, v); },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"batch_size", size_field(&TrainConfig::batch_size)},
      {"learning_rate", double_field(&TrainConfig::learning_rate)},
      {"epochs", size_field(&TrainConfig::epochs)},
      {"alpha", double_field(&TrainConfig::alpha)},
      {"beta", double_field(&TrainConfig::beta)},
      {"sigma", double_field(&TrainConfig::sigma)},
      {"tau_init", double_field(&TrainConfig::tau_init)},
      {"fine_strategy",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.fine_strategy = parse_fine_strategy(v); },
        [](const TrainConfig& c) { return to_string(c.fine_strategy); }}},
      {"global_strategy",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.global_strategy = parse_global_strategy(v); },
        [](const TrainConfig& c) { return to_string(c.global_strategy); }}},
      {"augment",
       {[](TrainConfig& c, const std::string&, const std::string& v) { c.augment = parse_augment_kind(v); },
        [](const TrainConfig& c) { return to_string(c.augment); }}},
      {"augment_rate", double_field(&TrainConfig::augment_rate)},
      {"seed", size_field(&TrainConfig::seed)},
      {"max_clips", size_field(&TrainConfig::max_clips)},
      {"max_words", size_field(&TrainConfig::max_words)},
      {"dim", size_field(&TrainConfig::dim)},
      {"depth", size_field(&TrainConfig::depth)},
      {"ffn_mult", size_field(&TrainConfig::ffn_mult)},
      {"positional", bool_field(&TrainConfig::positional)},
      {"input_norm", bool_field(&TrainConfig::input_norm)},
      {"normalize", bool_field(&TrainConfig::normalize)},
      {"window", size_field(&TrainConfig::window)},
      {"stride", size_field(&TrainConfig::stride)},
      {"eval_every", size_field(&TrainConfig::eval_every)},
      {"adam_beta1", double_field(&TrainConfig::adam_beta1)},
      {"adam_beta2", double_field(&TrainConfig::adam_beta2)},
      {"adam_eps", double_field(&TrainConfig::adam_eps)},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, key, trim(value));
}

std::string get_config_value(const TrainConfig& cfg, const std::string& key) { return field(key).get(cfg); }

TrainConfig parse_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

std::string config_to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + "=" + f.get(cfg) + "\n";
  return out;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(cfg.tau_init > 0.0)) throw ConfigError("tau_init must be positive");
  if (!(cfg.augment_rate >= 0.0 && cfg.augment_rate <= 1.0)) throw ConfigError("augment_rate must lie in [0, 1]");
  if (cfg.max_clips == 0 || cfg.max_words == 0) throw ConfigError("max lengths must be positive");
  if (cfg.dim == 0) throw ConfigError("dim must be positive");
  if (cfg.window == 0 || cfg.stride == 0) throw ConfigError("window and stride must be positive");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0 && cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

}  // namespace signret
