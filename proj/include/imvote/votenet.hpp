#pragma once

// Minimal deep Hough voting detector with three towers (image-only,
// point-only, joint). One shared seed encoder feeds all towers; each tower has
// its own vote MLP, vote-grouping layer and proposal head.
//
// Every forward step caches what its backward step needs. Gradients are
// exact for the piecewise-smooth loss: index choices (sampling, grouping,
// max-pool winners, objectness labels) are treated as locally constant.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imvote/box3d.hpp"
#include "imvote/fusion.hpp"
#include "imvote/nn.hpp"
#include "imvote/sampling.hpp"

namespace imvote {

enum class TowerKind { Image = 0, Point = 1, Joint = 2 };
inline constexpr std::array<TowerKind, 3> kAllTowers{TowerKind::Image, TowerKind::Point,
                                                     TowerKind::Joint};

inline const char* tower_name(TowerKind t) {
  switch (t) {
    case TowerKind::Image: return "image";
    case TowerKind::Point: return "point";
    case TowerKind::Joint: return "joint";
  }
  return "?";
}

// Which image-cue groups reach the towers; masked groups are zeroed.
struct CueMask {
  bool vote = true;
  bool ray = true;
  bool semantic = true;
  bool texture = true;
};

struct NetConfig {
  int num_classes = kDefaultNumClasses;  // NC
  int num_heading_bins = 12;             // NH
  std::vector<Vec3> anchors{{0.6, 0.6, 0.6}};  // NS size anchors
  int num_seeds = 128;                   // K
  int feature_dim = 32;                  // F
  int encoder_hidden = 32;
  int hidden = 64;
  double encoder_radius = 0.3;
  int encoder_max_neighbors = 16;
  int num_proposals = 32;
  double cluster_radius = 0.3;
  int cluster_max_votes = 16;
  int max_boxes_per_seed = 3;            // K_max for seed duplication
  double r_pos = 0.3;
  double r_neg = 0.6;
  CueMask cue_mask;

  int num_size_anchors() const { return static_cast<int>(anchors.size()); }
  int cue_dim() const { return ImageCueVector::width(num_classes); }
  int fused_dim() const { return feature_dim + cue_dim(); }
  int proposal_width() const {
    return 5 + 2 * num_heading_bins + 4 * num_size_anchors() + num_classes;
  }
  double heading_bin_width() const { return 2.0 * std::numbers::pi / num_heading_bins; }

  void validate() const {
    if (num_classes < 1 || num_heading_bins < 1 || anchors.empty() || num_seeds < 1 ||
        feature_dim < 1 || encoder_hidden < 1 || hidden < 1 || num_proposals < 1 ||
        cluster_max_votes < 1 || encoder_max_neighbors < 1 || max_boxes_per_seed < 1) {
      throw ConfigError("network dimensions must be positive");
    }
    if (!(encoder_radius > 0.0) || !(cluster_radius > 0.0)) throw ConfigError("radii must be positive");
    if (!(r_pos > 0.0) || r_neg < r_pos) throw ConfigError("need 0 < r_pos <= r_neg");
    for (const auto& a : anchors)
      if (!(a.x > 0 && a.y > 0 && a.z > 0)) throw ConfigError("anchor sizes must be positive");
  }
};

// Offsets into a proposal row.
struct ProposalLayout {
  int nh, ns, nc;
  explicit ProposalLayout(const NetConfig& c)
      : nh(c.num_heading_bins), ns(c.num_size_anchors()), nc(c.num_classes) {}
  int objectness() const { return 0; }
  int center() const { return 2; }
  int heading_scores() const { return 5; }
  int heading_residuals() const { return 5 + nh; }
  int size_scores() const { return 5 + 2 * nh; }
  int size_residuals() const { return 5 + 2 * nh + ns; }
  int class_scores() const { return 5 + 2 * nh + 4 * ns; }
  int width() const { return 5 + 2 * nh + 4 * ns + nc; }
};

struct TowerParams {
  nn::Mlp vote;   // D -> H -> H -> 3 + D
  nn::Mlp group;  // 3 + D -> H -> H, rectified, then max-pooled per cluster
  nn::Mlp head;   // H -> H -> proposal width
};

struct Model {
  NetConfig cfg;
  nn::Mlp encoder;  // 4 -> encoder_hidden -> F, rectified, max-pooled per seed
  std::array<TowerParams, 3> towers;

  TowerParams& tower(TowerKind t) { return towers[static_cast<int>(t)]; }
  const TowerParams& tower(TowerKind t) const { return towers[static_cast<int>(t)]; }

  template <class Fn>
  void for_each_mlp(Fn&& fn) {
    fn(encoder);
    for (auto& t : towers) {
      fn(t.vote);
      fn(t.group);
      fn(t.head);
    }
  }
  template <class Fn>
  void for_each_mlp(Fn&& fn) const {
    fn(encoder);
    for (const auto& t : towers) {
      fn(t.vote);
      fn(t.group);
      fn(t.head);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_mlp([&](const nn::Mlp& m) { n += m.parameter_count(); });
    return n;
  }
};

inline Model make_model(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.cfg = cfg;
  const int d = cfg.fused_dim();
  const int h = cfg.hidden;
  m.encoder = nn::make_mlp({4, cfg.encoder_hidden, cfg.feature_dim}, true, rng);
  for (auto& t : m.towers) {
    t.vote = nn::make_mlp({d, h, h, 3 + d}, false, rng, 0.1);
    t.group = nn::make_mlp({3 + d, h, h}, true, rng);
    t.head = nn::make_mlp({h, h, cfg.proposal_width()}, false, rng, 0.1);
  }
  return m;
}

inline Model zeros_like(const Model& m) {
  Model z = m;
  z.for_each_mlp([](nn::Mlp& mlp) { mlp = nn::zeros_like(mlp); });
  return z;
}

// Flat views over every parameter block, in for_each_mlp order.
inline std::vector<Eigen::Map<nn::Vector>> parameter_views(Model& m) {
  std::vector<Eigen::Map<nn::Vector>> out;
  m.for_each_mlp([&](nn::Mlp& mlp) {
    for (auto& l : mlp.layers) {
      out.emplace_back(l.weight.data(), l.weight.size());
      out.emplace_back(l.bias.data(), l.bias.size());
    }
  });
  return out;
}

inline std::vector<Eigen::Map<const nn::Vector>> parameter_views(const Model& m) {
  std::vector<Eigen::Map<const nn::Vector>> out;
  m.for_each_mlp([&](const nn::Mlp& mlp) {
    for (const auto& l : mlp.layers) {
      out.emplace_back(l.weight.data(), l.weight.size());
      out.emplace_back(l.bias.data(), l.bias.size());
    }
  });
  return out;
}

// --- loss weighting -------------------------------------------------------

struct TowerWeights {
  double img = 0.3;
  double point = 0.3;
  double joint = 0.4;

  double operator[](TowerKind t) const {
    return t == TowerKind::Image ? img : (t == TowerKind::Point ? point : joint);
  }
  void validate() const {
    if (!(img >= 0.0 && point >= 0.0 && joint >= 0.0)) throw ConfigError("tower weights must be >= 0");
    if (img == 0.0 && point == 0.0 && joint == 0.0) throw ConfigError("tower weights are all zero");
  }
};

inline double blended_loss(double l_img, double l_point, double l_joint, const TowerWeights& w) {
  return w.img * l_img + w.point * l_point + w.joint * l_joint;
}

// --- seed encoder -----------------------------------------------------------

struct SeedLayout {
  std::vector<int> seeds;    // indices into the cloud
  std::vector<int> offsets;  // neighbor rows of seed k: [offsets[k], offsets[k + 1])
  nn::Matrix input;          // per neighbor: [(p - seed) / radius, height]
};

inline SeedLayout layout_seeds(std::span<const Point3> points, std::span<const double> heights,
                               int num_seeds, double radius, int max_neighbors) {
  if (static_cast<int>(points.size()) < num_seeds || num_seeds < 1) throw TooFewPoints();
  SeedLayout out;
  out.seeds = farthest_point_sample(points, num_seeds, 0);
  std::vector<std::vector<int>> groups;
  groups.reserve(out.seeds.size());
  int rows = 0;
  for (int s : out.seeds) {
    groups.push_back(ball_query(points, s, radius, max_neighbors));
    rows += static_cast<int>(groups.back().size());
  }
  out.input.resize(rows, 4);
  out.offsets.reserve(out.seeds.size() + 1);
  int r = 0;
  for (std::size_t k = 0; k < out.seeds.size(); ++k) {
    out.offsets.push_back(r);
    const Point3 c = points[out.seeds[k]];
    for (int j : groups[k]) {
      const Vec3 d = (points[j] - c) / radius;
      out.input(r, 0) = d.x;
      out.input(r, 1) = d.y;
      out.input(r, 2) = d.z;
      out.input(r, 3) = heights[j];
      ++r;
    }
  }
  out.offsets.push_back(r);
  return out;
}

struct PoolCache {
  std::vector<int> argmax;  // winning row per (group, channel), row-major
};

// Channel-wise max over row ranges [offsets[g], offsets[g + 1]).
inline nn::Matrix max_pool(const nn::Matrix& x, const std::vector<int>& offsets, PoolCache* cache) {
  const int groups = static_cast<int>(offsets.size()) - 1;
  const int ch = static_cast<int>(x.cols());
  nn::Matrix out(groups, ch);
  if (cache) cache->argmax.assign(static_cast<std::size_t>(groups) * ch, 0);
  for (int g = 0; g < groups; ++g) {
    for (int c = 0; c < ch; ++c) {
      int best = offsets[g];
      double v = x(best, c);
      for (int r = offsets[g] + 1; r < offsets[g + 1]; ++r) {
        if (x(r, c) > v) {
          v = x(r, c);
          best = r;
        }
      }
      out(g, c) = v;
      if (cache) cache->argmax[static_cast<std::size_t>(g) * ch + c] = best;
    }
  }
  return out;
}

inline nn::Matrix max_pool_backward(const nn::Matrix& grad, const PoolCache& cache, int rows) {
  nn::Matrix out = nn::Matrix::Zero(rows, grad.cols());
  const int ch = static_cast<int>(grad.cols());
  for (int g = 0; g < grad.rows(); ++g)
    for (int c = 0; c < ch; ++c) out(cache.argmax[static_cast<std::size_t>(g) * ch + c], c) += grad(g, c);
  return out;
}

struct EncoderCache {
  nn::MlpCache mlp;
  PoolCache pool;
  int rows = 0;
};

inline nn::Matrix encode_features(const nn::Mlp& encoder, const SeedLayout& layout,
                                  EncoderCache* cache = nullptr) {
  const nn::Matrix h = nn::forward(encoder, layout.input, cache ? &cache->mlp : nullptr);
  if (cache) cache->rows = static_cast<int>(h.rows());
  return max_pool(h, layout.offsets, cache ? &cache->pool : nullptr);
}

inline void encode_backward(const nn::Mlp& encoder, const EncoderCache& cache,
                            const nn::Matrix& d_features, nn::Mlp& grad) {
  nn::backward(encoder, cache.mlp, max_pool_backward(d_features, cache.pool, cache.rows), grad);
}

// Samples K seeds by farthest point sampling (from index 0) and gives each a
// max-pooled neighborhood feature.
inline std::vector<SeedPoint> encode_seeds(std::span<const Point3> points,
                                           std::span<const double> heights, const NetConfig& cfg,
                                           const nn::Mlp& encoder) {
  const SeedLayout layout =
      layout_seeds(points, heights, cfg.num_seeds, cfg.encoder_radius, cfg.encoder_max_neighbors);
  const nn::Matrix feats = encode_features(encoder, layout);
  std::vector<SeedPoint> out;
  out.reserve(layout.seeds.size());
  for (std::size_t k = 0; k < layout.seeds.size(); ++k) {
    const int i = layout.seeds[k];
    out.push_back({points[i], heights[i], feats.row(static_cast<int>(k)).transpose()});
  }
  return out;
}

// --- voting -----------------------------------------------------------------

struct Vote3D {
  Point3 target;
  Eigen::VectorXd feature;
};

inline Vote3D vote(const FusedSeed& fs, const nn::Mlp& params) {
  const int d = fs.width();
  if (params.in() != d || params.out() != 3 + d) throw DimensionMismatch();
  nn::Matrix x(1, d);
  x.row(0) = fs.features().transpose();
  const nn::Matrix y = nn::forward(params, x);
  Vote3D v;
  v.target = fs.pos + Vec3{y(0, 0), y(0, 1), y(0, 2)};
  v.feature = x.row(0).transpose() + y.row(0).tail(d).transpose();
  return v;
}

struct VoteCluster {
  int center = 0;            // index of the vote used as cluster center
  Point3 center_pos;
  std::vector<int> members;  // center first
};

inline std::vector<VoteCluster> cluster_votes(std::span<const Point3> targets, double radius,
                                              int num_proposals, int max_votes) {
  if (!(radius > 0.0)) throw ConfigError("cluster radius must be positive");
  std::vector<VoteCluster> out;
  for (int c : farthest_point_sample(targets, num_proposals, 0)) {
    out.push_back({c, targets[c], ball_query(targets, c, radius, max_votes)});
  }
  return out;
}

inline std::vector<VoteCluster> cluster_votes(const std::vector<Vote3D>& votes, double radius,
                                              int num_proposals, int max_votes) {
  std::vector<Point3> t;
  t.reserve(votes.size());
  for (const auto& v : votes) t.push_back(v.target);
  return cluster_votes(t, radius, num_proposals, max_votes);
}

// Raw proposal row plus the cluster it was pooled from.
struct Proposal3D {
  Eigen::VectorXd values;
  Point3 cluster_center;
};

struct DecodedBox {
  Box3 box;
  int class_id = 0;
  double objectness = 0.0;  // probability
  double class_prob = 0.0;
  double score = 0.0;       // objectness * class_prob
};

namespace detail {
inline int argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}
inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}
}  // namespace detail

inline DecodedBox decode_proposal(const Proposal3D& p, const NetConfig& cfg) {
  const ProposalLayout L(cfg);
  if (p.values.size() != L.width()) throw DimensionMismatch();
  const auto& v = p.values;
  DecodedBox out;
  out.box.center = p.cluster_center + Vec3{v[L.center()], v[L.center() + 1], v[L.center() + 2]};
  const int hb = detail::argmax(v.segment(L.heading_scores(), L.nh));
  const double w = cfg.heading_bin_width();
  out.box.heading = wrap_angle(hb * w + v[L.heading_residuals() + hb] * 0.5 * w);
  const int sb = detail::argmax(v.segment(L.size_scores(), L.ns));
  const Vec3& a = cfg.anchors[sb];
  for (int k = 0; k < 3; ++k) {
    out.box.size[k] = std::max(0.05 * a[k], a[k] * (1.0 + v[L.size_residuals() + 3 * sb + k]));
  }
  const Eigen::VectorXd cls = detail::softmax(v.segment(L.class_scores(), L.nc));
  out.class_id = detail::argmax(cls);
  out.class_prob = cls[out.class_id];
  out.objectness = detail::softmax(v.segment(L.objectness(), 2))[1];
  out.score = out.objectness * out.class_prob;
  return out;
}

struct GroupCache {
  std::vector<int> offsets;  // rows of cluster p: [offsets[p], offsets[p + 1])
  std::vector<int> member;   // vote index per row
  std::vector<int> center;   // cluster center vote index per row
  nn::Matrix input;
  nn::MlpCache mlp;
  PoolCache pool;
  nn::Matrix pooled;
  nn::MlpCache head;
};

// Set-abstraction proposal layer over clusters of votes.
inline nn::Matrix propose_all(const TowerParams& params, const NetConfig& cfg,
                              const std::vector<VoteCluster>& clusters, const nn::Matrix& targets,
                              const nn::Matrix& features, GroupCache* cache) {
  const int d = static_cast<int>(features.cols());
  if (params.group.in() != 3 + d || params.head.out() != cfg.proposal_width()) throw DimensionMismatch();
  GroupCache local;
  GroupCache& gc = cache ? *cache : local;
  int rows = 0;
  for (const auto& c : clusters) rows += static_cast<int>(c.members.size());
  gc.offsets.clear();
  gc.member.clear();
  gc.center.clear();
  gc.input.resize(rows, 3 + d);
  const double inv_r = 1.0 / cfg.cluster_radius;
  int r = 0;
  for (const auto& c : clusters) {
    gc.offsets.push_back(r);
    for (int m : c.members) {
      gc.input.block(r, 0, 1, 3) = (targets.row(m) - targets.row(c.center)) * inv_r;
      gc.input.block(r, 3, 1, d) = features.row(m);
      gc.member.push_back(m);
      gc.center.push_back(c.center);
      ++r;
    }
  }
  gc.offsets.push_back(r);
  const nn::Matrix h = nn::forward(params.group, gc.input, &gc.mlp);
  gc.pooled = max_pool(h, gc.offsets, &gc.pool);
  return nn::forward(params.head, gc.pooled, &gc.head);
}

// Proposal for one cluster of `votes`.
inline Proposal3D propose(const VoteCluster& cluster, const std::vector<Vote3D>& votes,
                          const TowerParams& params, const NetConfig& cfg) {
  if (cluster.members.empty()) throw ConfigError("empty cluster");
  const int d = static_cast<int>(votes.front().feature.size());
  nn::Matrix t(static_cast<int>(votes.size()), 3);
  nn::Matrix f(static_cast<int>(votes.size()), d);
  for (std::size_t i = 0; i < votes.size(); ++i) {
    t.row(static_cast<int>(i)) << votes[i].target.x, votes[i].target.y, votes[i].target.z;
    if (votes[i].feature.size() != d) throw DimensionMismatch();
    f.row(static_cast<int>(i)) = votes[i].feature.transpose();
  }
  const nn::Matrix out = propose_all(params, cfg, {cluster}, t, f, nullptr);
  return {out.row(0).transpose(), votes[cluster.center].target};
}

// --- per-tower forward/backward ---------------------------------------------

struct GtObject {
  Box3 box;
  int class_id = 0;
};

struct TowerCache {
  nn::Matrix input;     // N x D
  nn::Matrix pos;       // N x 3
  std::vector<int> seed_index;
  nn::MlpCache vote;
  nn::Matrix targets;   // N x 3
  nn::Matrix features;  // N x D
  std::vector<VoteCluster> clusters;
  GroupCache group;
  nn::Matrix proposals;  // P x W
};

inline void tower_forward(const TowerParams& params, const NetConfig& cfg, TowerCache& tc) {
  const int d = static_cast<int>(tc.input.cols());
  if (params.vote.in() != d || params.vote.out() != 3 + d) throw DimensionMismatch();
  const nn::Matrix out = nn::forward(params.vote, tc.input, &tc.vote);
  tc.targets = tc.pos + out.leftCols(3);
  tc.features = tc.input + out.rightCols(d);
  if (!tc.targets.allFinite() || !tc.features.allFinite()) throw DivergedLoss("non-finite votes");
  std::vector<Point3> pts(tc.targets.rows());
  for (int i = 0; i < tc.targets.rows(); ++i) pts[i] = {tc.targets(i, 0), tc.targets(i, 1), tc.targets(i, 2)};
  tc.clusters = cluster_votes(pts, cfg.cluster_radius, cfg.num_proposals, cfg.cluster_max_votes);
  tc.proposals = propose_all(params, cfg, tc.clusters, tc.targets, tc.features, &tc.group);
}

// Back-propagates d(loss)/d(proposals) and d(loss)/d(vote targets); returns
// d(loss)/d(input).
inline nn::Matrix tower_backward(const TowerParams& params, const NetConfig& cfg, const TowerCache& tc,
                                 const nn::Matrix& d_proposals, nn::Matrix d_targets,
                                 TowerParams& grad) {
  const int d = static_cast<int>(tc.input.cols());
  const nn::Matrix d_pooled = nn::backward(params.head, tc.group.head, d_proposals, grad.head);
  const nn::Matrix d_h =
      max_pool_backward(d_pooled, tc.group.pool, static_cast<int>(tc.group.input.rows()));
  const nn::Matrix d_gin = nn::backward(params.group, tc.group.mlp, d_h, grad.group);
  nn::Matrix d_features = nn::Matrix::Zero(tc.features.rows(), d);
  const double inv_r = 1.0 / cfg.cluster_radius;
  for (int r = 0; r < d_gin.rows(); ++r) {
    const auto rel = d_gin.block(r, 0, 1, 3) * inv_r;
    d_targets.row(tc.group.member[r]) += rel;
    d_targets.row(tc.group.center[r]) -= rel;
    d_features.row(tc.group.member[r]) += d_gin.block(r, 3, 1, d);
  }
  nn::Matrix d_out(tc.input.rows(), 3 + d);
  d_out.leftCols(3) = d_targets;
  d_out.rightCols(d) = d_features;
  nn::Matrix d_input = nn::backward(params.vote, tc.vote, d_out, grad.vote);
  d_input += d_features;
  return d_input;
}

// --- detection loss -----------------------------------------------------------

struct LossTerms {
  double vote = 0.0;
  double objectness = 0.0;
  double center = 0.0;
  double cls = 0.0;
  double heading_cls = 0.0;
  double heading_res = 0.0;
  double size_cls = 0.0;
  double size_res = 0.0;
  int positives = 0;
  int negatives = 0;

  double total() const {
    return vote + objectness + center + cls + heading_cls + heading_res + size_cls + size_res;
  }
};

// Heading bin and residual normalized to [-1, 1).
inline std::pair<int, double> heading_to_bin(double heading, const NetConfig& cfg) {
  const double w = cfg.heading_bin_width();
  double a = std::fmod(heading, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  int b = static_cast<int>(std::floor((a + 0.5 * w) / w)) % cfg.num_heading_bins;
  double r = a - b * w;
  if (r >= std::numbers::pi) r -= 2.0 * std::numbers::pi;
  return {b, r / (0.5 * w)};
}

inline int nearest_anchor(const Vec3& size, const NetConfig& cfg) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.num_size_anchors(); ++i) {
    const double d = (size - cfg.anchors[i]).norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace detail {
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Softmax cross-entropy; adds scale * d(loss)/d(logits) into `grad`.
inline double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& logits, int target, double scale,
                            Eigen::Ref<Eigen::VectorXd> grad) {
  const Eigen::VectorXd p = softmax(logits);
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  Eigen::VectorXd g = p;
  g[target] -= 1.0;
  grad += scale * g;
  return lse - logits[target];
}
}  // namespace detail

// Simplified VoteNet-style loss for one tower on one scene. `row_labels` maps
// each vote row to its object index (or -1). Writes gradients w.r.t. the
// proposal rows and vote targets when the output pointers are non-null.
inline LossTerms detection_loss(const TowerCache& tc, const NetConfig& cfg,
                                const std::vector<int>& row_labels, const std::vector<GtObject>& gt,
                                nn::Matrix* d_proposals, nn::Matrix* d_targets) {
  const ProposalLayout L(cfg);
  LossTerms t;
  const int n = static_cast<int>(tc.targets.rows());
  const int np = static_cast<int>(tc.proposals.rows());
  nn::Matrix dp = nn::Matrix::Zero(np, L.width());
  nn::Matrix dt = nn::Matrix::Zero(n, 3);

  int n_vote = 0;
  for (int i = 0; i < n; ++i) n_vote += row_labels[i] >= 0 ? 1 : 0;
  for (int i = 0; i < n && n_vote > 0; ++i) {
    if (row_labels[i] < 0) continue;
    const Vec3& c = gt[row_labels[i]].box.center;
    for (int k = 0; k < 3; ++k) {
      const double diff = tc.targets(i, k) - c[k];
      t.vote += std::abs(diff) / n_vote;
      dt(i, k) += detail::sign(diff) / n_vote;
    }
  }

  std::vector<int> assign(np, -1);
  std::vector<int> label(np, -1);  // 1 positive, 0 negative, -1 ignored
  for (int p = 0; p < np; ++p) {
    const int c = tc.clusters[p].center;
    const Vec3 cc{tc.targets(c, 0), tc.targets(c, 1), tc.targets(c, 2)};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double dist = (cc - gt[g].box.center).norm();
      if (dist < best) {
        best = dist;
        assign[p] = static_cast<int>(g);
      }
    }
    if (best < cfg.r_pos) label[p] = 1;
    else if (best > cfg.r_neg) label[p] = 0;
  }
  int n_lab = 0;
  for (int p = 0; p < np; ++p) {
    if (label[p] == 1) ++t.positives;
    if (label[p] == 0) ++t.negatives;
  }
  n_lab = t.positives + t.negatives;

  for (int p = 0; p < np; ++p) {
    Eigen::VectorXd row = tc.proposals.row(p).transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(L.width());
    if (label[p] >= 0) {
      t.objectness += detail::cross_entropy(row.segment(L.objectness(), 2), label[p], 1.0 / n_lab,
                                            g.segment(L.objectness(), 2)) / n_lab;
    }
    if (label[p] == 1) {
      const double s = 1.0 / t.positives;
      const GtObject& obj = gt[assign[p]];
      const int c = tc.clusters[p].center;
      for (int k = 0; k < 3; ++k) {
        const double diff = tc.targets(c, k) + row[L.center() + k] - obj.box.center[k];
        t.center += s * std::abs(diff);
        g[L.center() + k] += s * detail::sign(diff);
        dt(c, k) += s * detail::sign(diff);
      }
      t.cls += s * detail::cross_entropy(row.segment(L.class_scores(), L.nc), obj.class_id, s,
                                         g.segment(L.class_scores(), L.nc));
      const auto [hb, hr] = heading_to_bin(obj.box.heading, cfg);
      t.heading_cls += s * detail::cross_entropy(row.segment(L.heading_scores(), L.nh), hb, s,
                                                 g.segment(L.heading_scores(), L.nh));
      const double hdiff = row[L.heading_residuals() + hb] - hr;
      t.heading_res += s * std::abs(hdiff);
      g[L.heading_residuals() + hb] += s * detail::sign(hdiff);
      const int sb = nearest_anchor(obj.box.size, cfg);
      t.size_cls += s * detail::cross_entropy(row.segment(L.size_scores(), L.ns), sb, s,
                                              g.segment(L.size_scores(), L.ns));
      for (int k = 0; k < 3; ++k) {
        const double target = obj.box.size[k] / cfg.anchors[sb][k] - 1.0;
        const double sdiff = row[L.size_residuals() + 3 * sb + k] - target;
        t.size_res += s * std::abs(sdiff);
        g[L.size_residuals() + 3 * sb + k] += s * detail::sign(sdiff);
      }
    }
    dp.row(p) = g.transpose();
  }
  if (d_proposals) *d_proposals = std::move(dp);
  if (d_targets) *d_targets = std::move(dt);
  return t;
}

}  // namespace imvote
