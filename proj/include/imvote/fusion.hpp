#pragma once

// Seed fusion: every seed is duplicated once per image cue it receives and
// its point feature is concatenated with that cue.

#include <vector>

#include <Eigen/Dense>

#include "imvote/image_cues.hpp"

namespace imvote {

struct FusedSeed {
  Point3 pos;
  Eigen::VectorXd point_feat;
  ImageCueVector image_cue;
  int seed_index = 0;  // index of the originating seed

  int width() const { return static_cast<int>(point_feat.size() + image_cue.values.size()); }

  // [point feature, image cue]
  Eigen::VectorXd features() const {
    Eigen::VectorXd out(width());
    out << point_feat, image_cue.values;
    return out;
  }
};

inline std::vector<FusedSeed> fuse(const std::vector<SeedPoint>& seeds, const CameraRig& rig,
                                   const std::vector<Detection2D>& dets, const RgbImage& image,
                                   int k_max, int num_classes = kDefaultNumClasses) {
  if (seeds.empty()) throw TooFewPoints("fuse needs at least one seed");
  std::vector<FusedSeed> out;
  out.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (auto& cue : assemble_cues(seeds[i], rig, dets, image, k_max, num_classes)) {
      out.push_back({seeds[i].pos, seeds[i].feature, std::move(cue), static_cast<int>(i)});
    }
  }
  return out;
}

// One entry per original seed with the image cue zeroed.
inline std::vector<FusedSeed> strip_to_point_only(const std::vector<FusedSeed>& fs) {
  std::vector<FusedSeed> out;
  std::vector<bool> seen;
  for (const auto& s : fs) {
    if (s.seed_index >= static_cast<int>(seen.size())) seen.resize(s.seed_index + 1, false);
    if (seen[s.seed_index]) continue;
    seen[s.seed_index] = true;
    FusedSeed copy = s;
    copy.image_cue.values.setZero();
    copy.image_cue.valid = false;
    out.push_back(std::move(copy));
  }
  return out;
}

inline std::vector<FusedSeed> strip_to_image_only(const std::vector<FusedSeed>& fs) {
  std::vector<FusedSeed> out = fs;
  for (auto& s : out) s.point_feat.setZero();
  return out;
}

}  // namespace imvote
