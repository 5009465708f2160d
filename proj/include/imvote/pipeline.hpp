#pragma once

// Scene-level forward/backward: encode seeds once, fuse image cues, run the
// three towers and blend their losses.

#include <array>
#include <optional>
#include <vector>

#include "imvote/votenet.hpp"

namespace imvote {

// Everything the network sees for one scene. Points are upright, labels are
// object indices into `gt` (or -1 for background).
struct NetInput {
  std::vector<Point3> points;
  std::vector<double> heights;
  std::vector<int> labels;
  CameraRig rig;
  const RgbImage* image = nullptr;
  std::vector<Detection2D> detections;
  std::vector<GtObject> gt;
};

inline void apply_cue_mask(Eigen::Ref<Eigen::VectorXd> cue, const CueMask& mask) {
  if (!mask.vote) cue.segment(0, 2).setZero();
  if (!mask.ray) cue.segment(2, 3).setZero();
  const int nc = static_cast<int>(cue.size()) - GeomCue::kDims - kTextureDims;
  if (!mask.semantic) cue.segment(GeomCue::kDims, nc).setZero();
  if (!mask.texture) cue.tail(kTextureDims).setZero();
}

// Parameter-independent part of a scene: seed layout and image cues.
struct PreparedScene {
  SeedLayout layout;
  std::vector<Point3> seed_pos;
  std::vector<int> seed_labels;
  std::vector<int> fused_seed;              // originating seed per fused row
  std::vector<ImageCueVector> fused_cues;   // masked cue per fused row
  std::vector<GtObject> gt;
};

inline PreparedScene prepare_scene(const NetInput& in, const NetConfig& cfg) {
  if (!in.image) throw ConfigError("scene has no image");
  if (in.points.size() != in.heights.size() || in.points.size() != in.labels.size()) {
    throw DimensionMismatch("points, heights and labels differ in length");
  }
  PreparedScene s;
  const int k = std::min<int>(cfg.num_seeds, static_cast<int>(in.points.size()));
  s.layout = layout_seeds(in.points, in.heights, k, cfg.encoder_radius, cfg.encoder_max_neighbors);
  for (int i : s.layout.seeds) {
    s.seed_pos.push_back(in.points[i]);
    s.seed_labels.push_back(in.labels[i]);
  }
  for (std::size_t i = 0; i < s.seed_pos.size(); ++i) {
    const SeedPoint sp{s.seed_pos[i], in.heights[s.layout.seeds[i]], {}};
    for (auto& cue : assemble_cues(sp, in.rig, in.detections, *in.image, cfg.max_boxes_per_seed,
                                   cfg.num_classes)) {
      apply_cue_mask(cue.values, cfg.cue_mask);
      s.fused_seed.push_back(static_cast<int>(i));
      s.fused_cues.push_back(std::move(cue));
    }
  }
  s.gt = in.gt;
  return s;
}

// Fused seeds for the current encoder features.
inline std::vector<FusedSeed> fused_seeds(const PreparedScene& s, const nn::Matrix& features) {
  std::vector<FusedSeed> out;
  out.reserve(s.fused_seed.size());
  for (std::size_t r = 0; r < s.fused_seed.size(); ++r) {
    const int i = s.fused_seed[r];
    out.push_back({s.seed_pos[i], features.row(i).transpose(), s.fused_cues[r], i});
  }
  return out;
}

inline std::vector<FusedSeed> tower_seeds(TowerKind t, const std::vector<FusedSeed>& fused) {
  switch (t) {
    case TowerKind::Point: return strip_to_point_only(fused);
    case TowerKind::Image: return strip_to_image_only(fused);
    case TowerKind::Joint: return fused;
  }
  return fused;
}

// Loads fused seeds into a tower cache (input rows, positions, seed indices).
inline void load_tower_input(const std::vector<FusedSeed>& seeds, TowerCache& tc) {
  const int n = static_cast<int>(seeds.size());
  const int d = n ? seeds.front().width() : 0;
  tc.input.resize(n, d);
  tc.pos.resize(n, 3);
  tc.seed_index.resize(n);
  for (int r = 0; r < n; ++r) {
    const auto& s = seeds[r];
    tc.input.row(r).head(s.point_feat.size()) = s.point_feat.transpose();
    tc.input.row(r).tail(s.image_cue.values.size()) = s.image_cue.values.transpose();
    tc.pos.row(r) << s.pos.x, s.pos.y, s.pos.z;
    tc.seed_index[r] = s.seed_index;
  }
}

struct SceneLoss {
  double total = 0.0;
  std::array<double, 3> tower{};
  std::array<LossTerms, 3> terms{};
};

// Blended loss of one scene. Towers with zero weight are skipped entirely.
// When `grad` is non-null the gradient of the blended loss is added to it.
inline SceneLoss scene_loss(const Model& m, const PreparedScene& s, const TowerWeights& w,
                            Model* grad) {
  const NetConfig& cfg = m.cfg;
  SceneLoss out;
  EncoderCache enc;
  const nn::Matrix feats = encode_features(m.encoder, s.layout, &enc);
  const std::vector<FusedSeed> fused = fused_seeds(s, feats);
  nn::Matrix d_feats = nn::Matrix::Zero(feats.rows(), feats.cols());
  bool any_feat_grad = false;

  for (TowerKind t : kAllTowers) {
    const double wt = w[t];
    if (wt == 0.0) continue;
    const int ti = static_cast<int>(t);
    TowerCache tc;
    load_tower_input(tower_seeds(t, fused), tc);
    tower_forward(m.towers[ti], cfg, tc);
    std::vector<int> labels(tc.seed_index.size());
    for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = s.seed_labels[tc.seed_index[r]];
    nn::Matrix dp, dt;
    out.terms[ti] = detection_loss(tc, cfg, labels, s.gt, grad ? &dp : nullptr, grad ? &dt : nullptr);
    out.tower[ti] = out.terms[ti].total();
    out.total += wt * out.tower[ti];
    if (!grad) continue;
    if (wt != 1.0) {
      dp *= wt;
      dt *= wt;
    }
    const nn::Matrix d_in = tower_backward(m.towers[ti], cfg, tc, dp, std::move(dt), grad->towers[ti]);
    if (t == TowerKind::Image) continue;
    const int f = cfg.feature_dim;
    for (int r = 0; r < d_in.rows(); ++r) d_feats.row(tc.seed_index[r]) += d_in.row(r).head(f);
    any_feat_grad = true;
  }
  if (grad && any_feat_grad) encode_backward(m.encoder, enc, d_feats, grad->encoder);
  return out;
}

// Tower output for inference: decoded proposals and the votes that made them.
struct TowerOutput {
  std::vector<DecodedBox> boxes;
  nn::Matrix targets;             // vote targets, one row per tower input row
  std::vector<int> seed_index;
};

inline TowerOutput run_tower(const Model& m, const PreparedScene& s, TowerKind t) {
  const nn::Matrix feats = encode_features(m.encoder, s.layout);
  TowerCache tc;
  load_tower_input(tower_seeds(t, fused_seeds(s, feats)), tc);
  tower_forward(m.tower(t), m.cfg, tc);
  TowerOutput out;
  for (int p = 0; p < tc.proposals.rows(); ++p) {
    const Point3 c = tc.clusters[p].center_pos;
    out.boxes.push_back(decode_proposal({tc.proposals.row(p).transpose(), c}, m.cfg));
  }
  out.targets = std::move(tc.targets);
  out.seed_index = std::move(tc.seed_index);
  return out;
}

}  // namespace imvote
