#pragma once

// Training loop and evaluation over simulated scenes.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <optional>
#include <vector>

#include "imvote/evalkit/metrics.hpp"
#include "imvote/pipeline.hpp"
#include "imvote/scene_sim.hpp"

namespace imvote {

// SplitMix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

// How scenes, detections and point clouds are produced.
struct DataSpec {
  SimConfig sim;
  NoiseSpec noise;
  std::optional<SamplingSpec> sampling;  // none: the simulator's uniform cloud
};

struct Sample {
  SceneGT scene;
  std::vector<int> point_subset;  // indices into scene.dense_points when sampling is set
};

inline Sample make_sample(const DataSpec& data, std::uint64_t scene_seed) {
  Sample s{generate_scene(data.sim, scene_seed), {}};
  if (data.sampling) {
    s.point_subset = subsample(s.scene.dense_points, *data.sampling, s.scene.rig, s.scene.image,
                               derive_seed(scene_seed, 0x5A3B));
  }
  return s;
}

inline NetInput make_input(const Sample& sample, const DataSpec& data, std::uint64_t noise_seed,
                           int num_classes) {
  const SceneGT& sc = sample.scene;
  NetInput in;
  if (data.sampling) {
    for (int i : sample.point_subset) {
      in.points.push_back(sc.dense_points[i]);
      in.labels.push_back(sc.dense_labels[i]);
    }
  } else {
    in.points = sc.points;
    in.labels = sc.labels;
  }
  in.heights = point_heights(in.points);
  in.rig = sc.rig;
  in.image = &sc.image;
  in.detections = oracle_detections(sc, data.noise, noise_seed, std::min(num_classes, data.sim.num_classes()));
  for (const auto& o : sc.objects) in.gt.push_back({o.box, o.class_id});
  return in;
}

struct TrainConfig {
  int steps = 2000;
  int batch = 8;
  double lr = 1e-3;
  std::vector<int> lr_decay_steps;
  double lr_decay = 0.1;
  TowerWeights weights;
  std::uint64_t seed = 1;
  int scene_pool = 0;  // 0: a fresh scene for every draw
};

struct TrainResult {
  Model model;
  std::vector<double> loss_trace;
};

// Draws training scenes (from a fixed pool when scene_pool > 0), averages the
// blended loss over each batch and applies one Adam step per batch.
inline TrainResult train(const DataSpec& data, const NetConfig& net, const TrainConfig& tc,
                         const std::function<void(int, double)>& on_step = {}) {
  tc.weights.validate();
  if (tc.steps < 0 || tc.batch < 1) throw ConfigError("steps must be >= 0 and batch >= 1");
  TrainResult out{make_model(net, derive_seed(tc.seed, 0x1417)), {}};
  Model& model = out.model;
  nn::Adam adam(tc.lr);
  std::vector<std::optional<Sample>> pool(std::max(0, tc.scene_pool));

  for (int step = 0; step < tc.steps; ++step) {
    double lr = tc.lr;
    for (int s : tc.lr_decay_steps)
      if (step >= s) lr *= tc.lr_decay;
    adam.set_learning_rate(lr);

    Model grad = zeros_like(model);
    double loss = 0.0;
    for (int b = 0; b < tc.batch; ++b) {
      const std::uint64_t draw = static_cast<std::uint64_t>(step) * tc.batch + b;
      std::optional<Sample> fresh;
      const Sample* sample;
      if (tc.scene_pool > 0) {
        const std::size_t slot = draw % pool.size();
        if (!pool[slot]) pool[slot] = make_sample(data, derive_seed(tc.seed, 0x7EA1, slot));
        sample = &*pool[slot];
      } else {
        fresh = make_sample(data, derive_seed(tc.seed, 0x7EA1, draw));
        sample = &*fresh;
      }
      const NetInput in = make_input(*sample, data, derive_seed(tc.seed, 0xDE7, draw), net.num_classes);
      const PreparedScene prepared = prepare_scene(in, net);
      loss += scene_loss(model, prepared, tc.weights, &grad).total;
    }
    loss /= tc.batch;
    if (!std::isfinite(loss)) throw DivergedLoss();
    const double inv = 1.0 / tc.batch;
    grad.for_each_mlp([&](nn::Mlp& m) {
      for (auto& l : m.layers) {
        l.weight *= inv;
        l.bias *= inv;
      }
    });
    adam.step(parameter_views(model), parameter_views(std::as_const(grad)));
    out.loss_trace.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  return out;
}

struct EvalConfig {
  std::uint64_t seed = 1000;
  int scenes = 100;
  double iou_thresh = 0.25;
  double nms_iou = 0.25;
};

struct TowerEval {
  eval::ApReport ap;
  double mean_vote_distance = 0.0;  // over votes cast by seeds on objects
};

using EvalResult = std::array<TowerEval, 3>;

// Evaluates every tower on held-out scenes.
inline EvalResult evaluate(const Model& model, const DataSpec& data, const EvalConfig& ec) {
  std::array<std::vector<eval::DetectionResult3D>, 3> dets;
  std::vector<eval::GroundTruth3D> gts;
  std::array<double, 3> dist_sum{};
  std::array<long, 3> dist_n{};
  for (int i = 0; i < ec.scenes; ++i) {
    const std::uint64_t seed = derive_seed(ec.seed, 0xE7A1, static_cast<std::uint64_t>(i));
    const Sample sample = make_sample(data, seed);
    const NetInput in = make_input(sample, data, derive_seed(seed, 0xDE7), model.cfg.num_classes);
    const PreparedScene prepared = prepare_scene(in, model.cfg);
    for (const auto& g : in.gt) gts.push_back({g.box, g.class_id, i});
    for (TowerKind t : kAllTowers) {
      const int ti = static_cast<int>(t);
      const TowerOutput out = run_tower(model, prepared, t);
      std::vector<eval::DetectionResult3D> scene_dets;
      for (const auto& b : out.boxes) scene_dets.push_back({b.box, b.class_id, b.score, i});
      for (auto& d : eval::nms3d(scene_dets, ec.nms_iou)) dets[ti].push_back(d);
      for (int r = 0; r < out.targets.rows(); ++r) {
        const int label = prepared.seed_labels[out.seed_index[r]];
        if (label < 0) continue;
        const Vec3 c = in.gt[label].box.center;
        dist_sum[ti] += (Vec3{out.targets(r, 0), out.targets(r, 1), out.targets(r, 2)} - c).norm();
        ++dist_n[ti];
      }
    }
  }
  EvalResult res;
  for (int t = 0; t < 3; ++t) {
    res[t].ap = eval::average_precision(dets[t], gts, ec.iou_thresh);
    res[t].mean_vote_distance = dist_n[t] ? dist_sum[t] / static_cast<double>(dist_n[t]) : 0.0;
  }
  return res;
}

}  // namespace imvote
