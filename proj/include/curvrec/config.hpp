#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/io.hpp"
#include "curvrec/pipeline.hpp"

namespace curvrec {

/// Everything a run needs. Paths are inputs, not parameters: they are left
/// out of the configuration hash so that artifacts from the same settings
/// compare equal across datasets.
struct RunConfig {
  std::string images;
  std::string ground_truth;
  std::string test_images;
  std::string test_ground_truth;

  std::vector<double> orientations{0, 22.5, 45, 67.5, 90, 112.5, 135, 157.5};
  std::vector<double> scales{2, 4, 8};
  int kernel_size = 21;
  int patch_side = 33;
  int thickness = 5;
  double C = 0.1;
  double epsilon = 1e-3;
  int max_iter = 1000;
  int samples = 2000;
  MarginMode margin = MarginMode::loss_scaled;
  bool standardize = true;
  std::optional<double> rho;  // empty = calibrate
  int stride = 0;             // 0 = thickness
  int min_length = 40;
  int max_paths = 1000;
  double graph_threshold = 0;
  bool invert_weights = false;
  std::optional<double> tolerance;  // empty = thickness
  std::uint64_t seed = 0;
  Polarity polarity = Polarity::dark;
  io::Channel channel = io::Channel::luma;

  void set(const std::string& key, const std::string& value);
  std::string canonical() const;
  std::uint64_t hash() const;
  void validate() const;
  PipelineParams params() const;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] inline void bad(const std::string& key, const std::string& value, const char* expected) {
  throw InvalidParameter("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) bad(key, v, "a number");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) bad(key, v, "an integer");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad(key, v, "true or false");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad(key, v, "a comma-separated list of numbers");
  return out;
}

inline std::string num(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

}  // namespace config_detail

inline void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  using namespace config_detail;
  const std::string key = lower(trim(raw_key));
  const std::string v = trim(raw_value);
  if (key == "images") images = v;
  else if (key == "ground_truth") ground_truth = v;
  else if (key == "test_images") test_images = v;
  else if (key == "test_ground_truth") test_ground_truth = v;
  else if (key == "orientations") orientations = to_list(key, v);
  else if (key == "scales") scales = to_list(key, v);
  else if (key == "kernel_size") kernel_size = to_int<int>(key, v);
  else if (key == "patch_side") patch_side = to_int<int>(key, v);
  else if (key == "thickness") thickness = to_int<int>(key, v);
  else if (key == "c") C = to_double(key, v);
  else if (key == "epsilon") epsilon = to_double(key, v);
  else if (key == "max_iter") max_iter = to_int<int>(key, v);
  else if (key == "samples") samples = to_int<int>(key, v);
  else if (key == "margin") {
    const auto l = lower(v);
    if (l == "loss_scaled") margin = MarginMode::loss_scaled;
    else if (l == "unit") margin = MarginMode::unit;
    else bad(key, v, "loss_scaled or unit");
  } else if (key == "standardize") standardize = to_bool(key, v);
  else if (key == "rho") rho = lower(v) == "auto" ? std::nullopt : std::optional(to_double(key, v));
  else if (key == "stride") stride = lower(v) == "auto" ? 0 : to_int<int>(key, v);
  else if (key == "min_length") min_length = to_int<int>(key, v);
  else if (key == "max_paths") max_paths = to_int<int>(key, v);
  else if (key == "graph_threshold") graph_threshold = to_double(key, v);
  else if (key == "invert_weights") invert_weights = to_bool(key, v);
  else if (key == "tolerance") tolerance = lower(v) == "auto" ? std::nullopt : std::optional(to_double(key, v));
  else if (key == "seed") seed = to_int<std::uint64_t>(key, v);
  else if (key == "polarity") {
    const auto l = lower(v);
    if (l == "dark") polarity = Polarity::dark;
    else if (l == "bright") polarity = Polarity::bright;
    else bad(key, v, "dark or bright");
  } else if (key == "channel") {
    const auto l = lower(v);
    if (l == "luma") channel = io::Channel::luma;
    else if (l == "green") channel = io::Channel::green;
    else bad(key, v, "luma or green");
  } else {
    throw InvalidParameter("unknown config key '" + raw_key + "'");
  }
}

/// Parameter settings in a fixed key order, one key=value per line.
inline std::string RunConfig::canonical() const {
  using namespace config_detail;
  std::ostringstream o;
  o << "orientations=" << list(orientations) << '\n'
    << "scales=" << list(scales) << '\n'
    << "kernel_size=" << kernel_size << '\n'
    << "patch_side=" << patch_side << '\n'
    << "thickness=" << thickness << '\n'
    << "C=" << num(C) << '\n'
    << "epsilon=" << num(epsilon) << '\n'
    << "max_iter=" << max_iter << '\n'
    << "samples=" << samples << '\n'
    << "margin=" << to_string(margin) << '\n'
    << "standardize=" << (standardize ? "true" : "false") << '\n'
    << "rho=" << (rho ? num(*rho) : "auto") << '\n'
    << "stride=" << (stride > 0 ? std::to_string(stride) : "auto") << '\n'
    << "min_length=" << min_length << '\n'
    << "max_paths=" << max_paths << '\n'
    << "graph_threshold=" << num(graph_threshold) << '\n'
    << "invert_weights=" << (invert_weights ? "true" : "false") << '\n'
    << "tolerance=" << (tolerance ? num(*tolerance) : "auto") << '\n'
    << "seed=" << seed << '\n'
    << "polarity=" << (polarity == Polarity::bright ? "bright" : "dark") << '\n'
    << "channel=" << (channel == io::Channel::green ? "green" : "luma") << '\n';
  return o.str();
}

/// 64-bit FNV-1a of the canonical parameter text.
inline std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline void RunConfig::validate() const {
  params().bank.validate();
  if (patch_side < 3 || patch_side % 2 == 0) throw InvalidParameter("patch_side must be odd and >= 3");
  if (thickness < 1 || thickness > patch_side || thickness % 2 == 0)
    throw InvalidParameter("thickness must be odd and lie in [1, patch_side]");
  if (!(C > 0)) throw InvalidParameter("C must be positive");
  if (!(epsilon > 0)) throw InvalidParameter("epsilon must be positive");
  if (max_iter < 1) throw InvalidParameter("max_iter must be >= 1");
  if (rho && !(*rho > 0 && *rho <= 1)) throw InvalidParameter("rho must lie in (0, 1] or be auto");
  if (stride < 0) throw InvalidParameter("stride must be positive or auto");
  if (min_length < 1) throw InvalidParameter("min_length must be >= 1");
  if (max_paths < 0) throw InvalidParameter("max_paths must be >= 0");
  if (!(graph_threshold >= 0)) throw InvalidParameter("graph_threshold must be >= 0");
  if (tolerance && !(*tolerance >= 0)) throw InvalidParameter("tolerance must be >= 0");
  for (const auto* p : {&images, &ground_truth, &test_images, &test_ground_truth})
    if (!p->empty() && !std::filesystem::exists(*p)) throw InvalidInput("path '" + *p + "' does not exist");
}

inline PipelineParams RunConfig::params() const {
  PipelineParams p;
  p.bank.orientations = orientations;
  p.bank.scales = scales;
  p.bank.kernel_size = kernel_size;
  p.polarity = polarity;
  p.patch_side = patch_side;
  p.thickness = thickness;
  p.samples = samples < 0 ? 0 : static_cast<std::size_t>(samples);
  p.train = {.C = C, .epsilon = epsilon, .max_iter = max_iter, .margin = margin, .standardize = standardize};
  p.rho = rho.value_or(0.0);
  p.stride = stride;
  p.min_length = min_length;
  p.max_paths = max_paths;
  p.graph_threshold = graph_threshold;
  p.weight_mode = invert_weights ? WeightMode::inverted : WeightMode::score;
  p.tolerance = tolerance.value_or(thickness);
  p.seed = seed;
  return p;
}

/// Applies key=value lines; blank lines and '#' comments are ignored.
inline void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (config_detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidParameter(origin + ":" + std::to_string(n) + ": expected key=value");
    try {
      cfg.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const InvalidParameter& e) {
      throw InvalidParameter(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

/// Per-dataset settings. The synthetic preset matches the `synth` generator.
inline const std::map<std::string, std::string>& preset_texts() {
  static const std::map<std::string, std::string> presets{
      {"drive", "min_length=40\nscales=2,4,8\nthickness=5\npolarity=dark\nchannel=green\n"},
      {"reca", "min_length=30\nscales=4,8,12\nthickness=5\npolarity=dark\n"},
      {"aerial", "min_length=80\nscales=4,8,12\nthickness=9\npolarity=bright\n"},
      {"cracks", "min_length=30\nscales=2,4,8\nthickness=3\npolarity=dark\n"},
      {"synthetic", "min_length=40\nscales=2,4,8\nthickness=5\npolarity=bright\n"},
  };
  return presets;
}

inline void apply_preset(RunConfig& cfg, const std::string& name) {
  const auto& all = preset_texts();
  const auto it = all.find(config_detail::lower(name));
  if (it == all.end()) throw InvalidParameter("unknown preset '" + name + "'");
  apply_config_text(cfg, it->second, "preset " + name);
}

}  // namespace curvrec
