#pragma once

// Key-value run configuration.
//
//   # comment
//   section.key = value
//
// Unknown keys and malformed values raise ConfigError. Every key is optional;
// omitted keys keep the standard benchmark defaults below.
//
// Keys:
//   experiment = towers | cue_ablation | sparse
//   experiment.seeds = 1,2,3          training seeds (one run per seed)
//   experiment.variants = a,b,...     subset of the experiment's variants
//   experiment.workers = N            parallel variant runs (0: one per core)
//   scene.min_objects, scene.max_objects, scene.num_points,
//   scene.image_width, scene.image_height, scene.focal,
//   scene.heading_range_deg, scene.depth_noise, scene.num_classes (1..3)
//   noise.jitter, noise.drop_prob, noise.class_confusion,
//   noise.false_positive_rate, noise.noisy_scores, noise.max_boxes, noise.min_score
//   sampling.method = none | uniform | keypoint
//   sampling.fraction (of the dense depth cloud), sampling.pixel_radius,
//   sampling.max_keypoints, sampling.min_response
//   net.num_classes, net.heading_bins, net.num_seeds, net.feature_dim,
//   net.encoder_hidden, net.hidden, net.encoder_radius, net.encoder_neighbors,
//   net.num_proposals, net.cluster_radius, net.cluster_votes,
//   net.max_boxes_per_seed, net.r_pos, net.r_neg, net.anchor (sx,sy,sz)
//   cue.vote, cue.ray, cue.semantic, cue.texture
//   weights.img, weights.point, weights.joint
//   train.steps, train.batch, train.lr, train.scene_pool,
//   train.lr_decay_steps (a,b,...), train.lr_decay
//   eval.scenes, eval.seed, eval.iou, eval.nms

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imvote/train.hpp"

namespace imvote {

enum class ExperimentKind { Towers, CueAblation, Sparse };

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Towers: return "towers";
    case ExperimentKind::CueAblation: return "cue_ablation";
    case ExperimentKind::Sparse: return "sparse";
  }
  return "?";
}

struct SparseSpec {
  SamplingMethod method = SamplingMethod::Uniform;
  double fraction = 1.0;  // of the dense depth cloud
};

struct RunConfig {
  DataSpec data;
  std::optional<SparseSpec> sparse;  // applied to `data` per scene size
  NetConfig net;
  TrainConfig train;
  EvalConfig eval;
  ExperimentKind experiment = ExperimentKind::Towers;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> variants;  // empty: all
  int workers = 0;
};

// Detection noise of the standard benchmark: 5% relative jitter, 20% drops,
// Beta-distributed scores.
inline NoiseSpec standard_noise() {
  NoiseSpec n;
  n.jitter = 0.05;
  n.drop_prob = 0.2;
  n.noisy_scores = true;
  return n;
}

inline RunConfig standard_benchmark() {
  RunConfig c;
  c.data.noise = standard_noise();
  return c;
}

// Resolves a fractional sparse spec into an absolute point count.
inline SamplingSpec sampling_for(const SparseSpec& s, const SimConfig& sim, const SamplingSpec& base = {}) {
  SamplingSpec out = base;
  out.method = s.method;
  const double dense = static_cast<double>(sim.image_width) * sim.image_height;
  out.target_count = std::max(1, static_cast<int>(std::lround(s.fraction * dense)));
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

// Ordered key/value pairs of a config file; duplicate keys are an error.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string val = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (seen.count(key)) throw ConfigError("duplicate key '" + key + "'");
    seen[key] = lineno;
    out.emplace_back(std::move(key), std::move(val));
  }
  return out;
}

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  auto i32 = [&](int& dst) { dst = static_cast<int>(parse_int(key, v)); };
  auto f64 = [&](double& dst) { dst = parse_double(key, v); };
  auto flag = [&](bool& dst) { dst = parse_bool(key, v); };

  SimConfig& s = c.data.sim;
  NoiseSpec& n = c.data.noise;
  NetConfig& net = c.net;

  if (key == "experiment") {
    if (v == "towers") c.experiment = ExperimentKind::Towers;
    else if (v == "cue_ablation") c.experiment = ExperimentKind::CueAblation;
    else if (v == "sparse") c.experiment = ExperimentKind::Sparse;
    else throw ConfigError("experiment: unknown kind '" + v + "'");
  } else if (key == "experiment.seeds") {
    c.seeds.clear();
    for (const auto& item : split_list(v)) c.seeds.push_back(parse_u64(key, item));
    if (c.seeds.empty()) throw ConfigError("experiment.seeds is empty");
  } else if (key == "experiment.variants") {
    c.variants = split_list(v);
  } else if (key == "experiment.workers") {
    i32(c.workers);
  } else if (key == "scene.min_objects") {
    i32(s.min_objects);
  } else if (key == "scene.max_objects") {
    i32(s.max_objects);
  } else if (key == "scene.num_points") {
    i32(s.num_points);
  } else if (key == "scene.image_width") {
    i32(s.image_width);
  } else if (key == "scene.image_height") {
    i32(s.image_height);
  } else if (key == "scene.focal") {
    f64(s.focal);
  } else if (key == "scene.heading_range_deg") {
    s.heading_range = parse_double(key, v) * std::numbers::pi / 180.0;
  } else if (key == "scene.depth_noise") {
    f64(s.depth_noise);
  } else if (key == "scene.num_classes") {
    const auto k = parse_int(key, v);
    if (k < 1 || k > static_cast<long long>(s.classes.size()))
      throw ConfigError("scene.num_classes must be in [1, " + std::to_string(s.classes.size()) + "]");
    s.classes.resize(static_cast<std::size_t>(k));
  } else if (key == "noise.jitter") {
    f64(n.jitter);
  } else if (key == "noise.drop_prob") {
    f64(n.drop_prob);
  } else if (key == "noise.class_confusion") {
    f64(n.class_confusion);
  } else if (key == "noise.false_positive_rate") {
    f64(n.false_positive_rate);
  } else if (key == "noise.noisy_scores") {
    flag(n.noisy_scores);
  } else if (key == "noise.max_boxes") {
    i32(n.max_boxes);
  } else if (key == "noise.min_score") {
    f64(n.min_score);
  } else if (key == "sampling.method") {
    if (v == "none") {
      c.sparse.reset();
    } else if (v == "uniform" || v == "keypoint") {
      if (!c.sparse) c.sparse = SparseSpec{};
      c.sparse->method = v == "uniform" ? SamplingMethod::Uniform : SamplingMethod::Keypoint;
    } else {
      throw ConfigError("sampling.method: unknown method '" + v + "'");
    }
  } else if (key == "sampling.fraction") {
    if (!c.sparse) c.sparse = SparseSpec{};
    f64(c.sparse->fraction);
    if (!(c.sparse->fraction > 0.0 && c.sparse->fraction <= 1.0))
      throw ConfigError("sampling.fraction must be in (0, 1]");
  } else if (key == "sampling.pixel_radius") {
    if (!c.data.sampling) c.data.sampling = SamplingSpec{};
    f64(c.data.sampling->pixel_radius);
  } else if (key == "sampling.max_keypoints") {
    if (!c.data.sampling) c.data.sampling = SamplingSpec{};
    i32(c.data.sampling->max_keypoints);
  } else if (key == "sampling.min_response") {
    if (!c.data.sampling) c.data.sampling = SamplingSpec{};
    f64(c.data.sampling->min_response);
  } else if (key == "net.num_classes") {
    i32(net.num_classes);
  } else if (key == "net.heading_bins") {
    i32(net.num_heading_bins);
  } else if (key == "net.num_seeds") {
    i32(net.num_seeds);
  } else if (key == "net.feature_dim") {
    i32(net.feature_dim);
  } else if (key == "net.encoder_hidden") {
    i32(net.encoder_hidden);
  } else if (key == "net.hidden") {
    i32(net.hidden);
  } else if (key == "net.encoder_radius") {
    f64(net.encoder_radius);
  } else if (key == "net.encoder_neighbors") {
    i32(net.encoder_max_neighbors);
  } else if (key == "net.num_proposals") {
    i32(net.num_proposals);
  } else if (key == "net.cluster_radius") {
    f64(net.cluster_radius);
  } else if (key == "net.cluster_votes") {
    i32(net.cluster_max_votes);
  } else if (key == "net.max_boxes_per_seed") {
    i32(net.max_boxes_per_seed);
  } else if (key == "net.r_pos") {
    f64(net.r_pos);
  } else if (key == "net.r_neg") {
    f64(net.r_neg);
  } else if (key == "net.anchor") {
    const auto parts = split_list(v);
    if (parts.size() != 3) throw ConfigError("net.anchor: expected sx,sy,sz");
    net.anchors = {{parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])}};
  } else if (key == "cue.vote") {
    flag(net.cue_mask.vote);
  } else if (key == "cue.ray") {
    flag(net.cue_mask.ray);
  } else if (key == "cue.semantic") {
    flag(net.cue_mask.semantic);
  } else if (key == "cue.texture") {
    flag(net.cue_mask.texture);
  } else if (key == "weights.img") {
    f64(c.train.weights.img);
  } else if (key == "weights.point") {
    f64(c.train.weights.point);
  } else if (key == "weights.joint") {
    f64(c.train.weights.joint);
  } else if (key == "train.steps") {
    i32(c.train.steps);
  } else if (key == "train.batch") {
    i32(c.train.batch);
  } else if (key == "train.lr") {
    f64(c.train.lr);
  } else if (key == "train.scene_pool") {
    i32(c.train.scene_pool);
  } else if (key == "train.lr_decay_steps") {
    c.train.lr_decay_steps.clear();
    for (const auto& item : split_list(v)) c.train.lr_decay_steps.push_back(static_cast<int>(parse_int(key, item)));
  } else if (key == "train.lr_decay") {
    f64(c.train.lr_decay);
  } else if (key == "eval.scenes") {
    i32(c.eval.scenes);
  } else if (key == "eval.seed") {
    c.eval.seed = parse_u64(key, v);
  } else if (key == "eval.iou") {
    f64(c.eval.iou_thresh);
  } else if (key == "eval.nms") {
    f64(c.eval.nms_iou);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void validate(const RunConfig& c) {
  c.data.sim.validate();
  c.net.validate();
  c.train.weights.validate();
  if (c.train.steps < 0 || c.train.batch < 1) throw ConfigError("train.steps must be >= 0, train.batch >= 1");
  if (!(c.train.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (c.eval.scenes < 1) throw ConfigError("eval.scenes must be >= 1");
  if (c.workers < 0) throw ConfigError("experiment.workers must be >= 0");
  const auto& n = c.data.noise;
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(n.drop_prob) || !prob(n.class_confusion) || n.jitter < 0.0 || n.false_positive_rate < 0.0)
    throw ConfigError("noise parameters out of range");
}

// Resolves the sampling spec for the configured scene size.
inline void finalize(RunConfig& c) {
  if (c.sparse) c.data.sampling = sampling_for(*c.sparse, c.data.sim, c.data.sampling.value_or(SamplingSpec{}));
  else c.data.sampling.reset();
  validate(c);
}

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig c = standard_benchmark();
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(c, k, v);
  finalize(c);
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_run_config(in);
}

}  // namespace imvote
