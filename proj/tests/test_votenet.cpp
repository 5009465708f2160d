#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "imvote/pipeline.hpp"
#include "imvote/train.hpp"

using namespace imvote;

namespace {

NetConfig small_net() {
  NetConfig c;
  c.num_seeds = 16;
  c.feature_dim = 8;
  c.encoder_hidden = 8;
  c.hidden = 12;
  c.num_proposals = 6;
  c.encoder_max_neighbors = 8;
  c.cluster_max_votes = 8;
  return c;
}

DataSpec two_objects() {
  DataSpec d;
  d.sim.min_objects = d.sim.max_objects = 2;
  d.sim.num_points = 400;
  return d;
}

struct Fixture {
  DataSpec data = two_objects();
  Sample sample;
  NetInput input;
  PreparedScene prepared;
  Fixture(const NetConfig& net, std::uint64_t seed)
      : sample(make_sample(data, seed)), input(make_input(sample, data, seed + 1, net.num_classes)),
        prepared(prepare_scene(input, net)) {}
};

std::vector<double> flatten(const Model& m) {
  std::vector<double> out;
  for (const auto& v : parameter_views(m)) out.insert(out.end(), v.data(), v.data() + v.size());
  return out;
}

FusedSeed seed_with(const Eigen::VectorXd& f, Point3 pos) {
  FusedSeed s;
  s.pos = pos;
  s.point_feat = f.head(f.size() - 18);
  s.image_cue.values = f.tail(18);
  return s;
}

}  // namespace

TEST(NetConfig, Dimensions) {
  NetConfig c;
  EXPECT_EQ(c.proposal_width(), 5 + 24 + 4 + 10);
  EXPECT_EQ(ProposalLayout(c).width(), c.proposal_width());
  EXPECT_EQ(c.fused_dim(), 50);
  c.feature_dim = 256;
  EXPECT_EQ(c.fused_dim(), 274);
  c.r_neg = 0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(BlendedLoss, Examples) {
  EXPECT_EQ(blended_loss(1, 2, 3, {0.3, 0.3, 0.4}), 2.1);
  EXPECT_EQ(blended_loss(1, 2, 3, {0, 0, 1}), 3.0);
  EXPECT_EQ(blended_loss(5, 7, 11, {1, 0, 0}), 5.0);
  EXPECT_THROW((TowerWeights{0, 0, 0}.validate()), ConfigError);
  EXPECT_THROW((TowerWeights{-0.1, 0.5, 0.6}.validate()), ConfigError);
}

TEST(Vote, ZeroParametersAreIdentity) {
  const NetConfig c = small_net();
  Model m = zeros_like(make_model(c, 3));
  Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(c.fused_dim(), -1, 1);
  const FusedSeed s = seed_with(f, {0.5, 2.0, -0.3});
  const Vote3D v = vote(s, m.tower(TowerKind::Joint).vote);
  EXPECT_EQ(v.target, s.pos);
  EXPECT_EQ(v.feature, f);
  FusedSeed bad = s;
  bad.point_feat.resize(3);
  EXPECT_THROW(vote(bad, m.tower(TowerKind::Joint).vote), DimensionMismatch);
}

TEST(Vote, ResidualMatchesForward) {
  const NetConfig c = small_net();
  const Model m = make_model(c, 4);
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(c.fused_dim(), 0, 2);
  const FusedSeed s = seed_with(f, {1, 2, 3});
  const Vote3D v = vote(s, m.tower(TowerKind::Point).vote);
  nn::Matrix x(1, f.size());
  x.row(0) = f.transpose();
  const nn::Matrix y = nn::forward(m.tower(TowerKind::Point).vote, x);
  EXPECT_NEAR(v.target.x, 1 + y(0, 0), 1e-15);
  EXPECT_NEAR(v.target.z, 3 + y(0, 2), 1e-15);
  EXPECT_NEAR((v.feature - f - y.row(0).tail(f.size()).transpose()).norm(), 0.0, 1e-15);
}

TEST(ClusterVotes, CentersAreFarthestPointsAndMembersWithinRadius) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Point3> pts(200);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const auto clusters = cluster_votes(pts, 0.5, 10, 6);
  ASSERT_EQ(clusters.size(), 10u);
  for (const auto& c : clusters) {
    ASSERT_FALSE(c.members.empty());
    EXPECT_EQ(c.members.front(), c.center);
    EXPECT_LE(c.members.size(), 6u);
    for (int m : c.members) EXPECT_LE((pts[m] - c.center_pos).norm(), 0.5);
  }
  // fewer votes than proposals
  EXPECT_EQ(cluster_votes(std::span<const Point3>(pts.data(), 4), 0.5, 10, 6).size(), 4u);
  EXPECT_THROW(cluster_votes(pts, 0.0, 10, 6), ConfigError);
}

TEST(Propose, WidthAndMemberOrderInvariance) {
  const NetConfig c = small_net();
  const Model m = make_model(c, 6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 0.1);
  std::vector<Vote3D> votes(8);
  for (auto& v : votes) {
    v.target = {g(rng), g(rng), g(rng)};
    v.feature = Eigen::VectorXd::NullaryExpr(c.fused_dim(), [&] { return g(rng); });
  }
  VoteCluster cl{0, votes[0].target, {0, 1, 2, 3, 4, 5, 6, 7}};
  const Proposal3D a = propose(cl, votes, m.tower(TowerKind::Joint), c);
  EXPECT_EQ(a.values.size(), c.proposal_width());
  VoteCluster shuffled = cl;
  std::shuffle(shuffled.members.begin(), shuffled.members.end(), rng);
  const Proposal3D b = propose(shuffled, votes, m.tower(TowerKind::Joint), c);
  EXPECT_EQ(a.values, b.values);
}

TEST(DecodeProposal, ZeroRowDecodesToAnchorAtClusterCenter) {
  const NetConfig c;
  const Proposal3D p{Eigen::VectorXd::Zero(c.proposal_width()), {1, 2, 0.5}};
  const DecodedBox b = decode_proposal(p, c);
  EXPECT_EQ(b.box.center, (Point3{1, 2, 0.5}));
  EXPECT_EQ(b.box.heading, 0.0);
  EXPECT_EQ(b.box.size, (Vec3{0.6, 0.6, 0.6}));
  EXPECT_DOUBLE_EQ(b.objectness, 0.5);
  EXPECT_DOUBLE_EQ(b.class_prob, 0.1);
  EXPECT_THROW(decode_proposal({Eigen::VectorXd::Zero(3), {}}, c), DimensionMismatch);
}

TEST(DecodeProposal, HeadingBinAndResidual) {
  const NetConfig c;
  const ProposalLayout L(c);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(c.proposal_width());
  v[L.heading_scores() + 1] = 5;
  v[L.heading_residuals() + 1] = 0.5;
  v[L.class_scores() + 7] = 3;
  v[L.size_residuals() + 2] = 0.5;
  const DecodedBox b = decode_proposal({v, {}}, c);
  const double w = 2 * std::numbers::pi / 12;
  EXPECT_NEAR(b.box.heading, 1.25 * w, 1e-12);
  EXPECT_EQ(b.class_id, 7);
  EXPECT_NEAR(b.box.size.z, 0.9, 1e-12);
  EXPECT_NEAR(b.score, b.objectness * b.class_prob, 1e-15);
}

TEST(HeadingToBin, RoundTripsThroughDecode) {
  const NetConfig c;
  const ProposalLayout L(c);
  for (double h = -3.1; h < 3.1; h += 0.37) {
    const auto [bin, res] = heading_to_bin(h, c);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(c.proposal_width());
    v[L.heading_scores() + bin] = 1;
    v[L.heading_residuals() + bin] = res;
    EXPECT_NEAR(wrap_angle(decode_proposal({v, {}}, c).box.heading - h), 0.0, 1e-12);
  }
}

TEST(SceneLoss, GradientMatchesFiniteDifferencesOnSample) {
  const NetConfig c = small_net();
  const Fixture fx(c, 21);
  Model m = make_model(c, 8);
  const TowerWeights w{0.3, 0.3, 0.4};
  Model grad = zeros_like(m);
  scene_loss(m, fx.prepared, w, &grad);
  auto params = parameter_views(m);
  const auto grads = parameter_views(std::as_const(grad));
  std::mt19937_64 rng(3);
  int checked = 0, bad = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(params[b].size()) - 1);
    for (int k = 0; k < 6; ++k) {
      const int i = pick(rng);
      const double x0 = params[b][i];
      const double h = 1e-6;
      params[b][i] = x0 + h;
      const double lp = scene_loss(m, fx.prepared, w, nullptr).total;
      params[b][i] = x0 - h;
      const double lm = scene_loss(m, fx.prepared, w, nullptr).total;
      params[b][i] = x0;
      const double num = (lp - lm) / (2 * h);
      const double an = grads[b][i];
      const double err = std::abs(num - an);
      ++checked;
      if (err > 1e-7 && err > 1e-4 * std::max(std::abs(num), std::abs(an))) {
        ++bad;
        ADD_FAILURE() << "block " << b << " index " << i << " numeric " << num << " analytic " << an;
      }
    }
  }
  EXPECT_EQ(bad, 0) << "of " << checked;
}

TEST(SceneLoss, ZeroWeightTowersGetNoGradient) {
  const NetConfig c = small_net();
  const Fixture fx(c, 22);
  const Model m = make_model(c, 9);
  Model grad = zeros_like(m);
  scene_loss(m, fx.prepared, {0, 0, 1}, &grad);
  for (TowerKind t : {TowerKind::Image, TowerKind::Point}) {
    const auto& tp = grad.tower(t);
    for (const auto* mlp : {&tp.vote, &tp.group, &tp.head})
      for (const auto& l : mlp->layers) EXPECT_EQ(l.weight.norm() + l.bias.norm(), 0.0);
  }
  // image tower alone never reaches the encoder
  Model g2 = zeros_like(m);
  scene_loss(m, fx.prepared, {1, 0, 0}, &g2);
  for (const auto& l : g2.encoder.layers) EXPECT_EQ(l.weight.norm() + l.bias.norm(), 0.0);
}

TEST(SceneLoss, BlendIsWeightedSumOfTowers) {
  const NetConfig c = small_net();
  const Fixture fx(c, 23);
  const Model m = make_model(c, 10);
  const SceneLoss all = scene_loss(m, fx.prepared, {1, 1, 1}, nullptr);
  const SceneLoss blend = scene_loss(m, fx.prepared, {0.3, 0.3, 0.4}, nullptr);
  EXPECT_NEAR(blend.total, blended_loss(all.tower[0], all.tower[1], all.tower[2], {0.3, 0.3, 0.4}), 1e-12);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(all.tower[t], blend.tower[t]);
    EXPECT_NEAR(all.terms[t].total(), all.tower[t], 0.0);
  }
}

TEST(RunTower, PointTowerSeesOneEntryPerSeed) {
  const NetConfig c = small_net();
  const Fixture fx(c, 24);
  const Model m = make_model(c, 11);
  const TowerOutput p = run_tower(m, fx.prepared, TowerKind::Point);
  const TowerOutput j = run_tower(m, fx.prepared, TowerKind::Joint);
  EXPECT_EQ(p.seed_index.size(), fx.prepared.layout.seeds.size());
  EXPECT_GE(j.seed_index.size(), p.seed_index.size());
  EXPECT_LE(j.seed_index.size(), 3 * p.seed_index.size());
  EXPECT_EQ(p.boxes.size(), static_cast<std::size_t>(c.num_proposals));
}

TEST(Train, ZeroStepsReturnsInitialModel) {
  const NetConfig c = small_net();
  TrainConfig tc;
  tc.steps = 0;
  tc.seed = 5;
  const TrainResult r = train(two_objects(), c, tc);
  EXPECT_EQ(flatten(r.model), flatten(make_model(c, derive_seed(5, 0x1417))));
  EXPECT_TRUE(r.loss_trace.empty());
}

TEST(Train, DeterministicForFixedSeed) {
  const NetConfig c = small_net();
  TrainConfig tc;
  tc.steps = 3;
  tc.batch = 2;
  const TrainResult a = train(two_objects(), c, tc);
  const TrainResult b = train(two_objects(), c, tc);
  EXPECT_EQ(flatten(a.model), flatten(b.model));
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  tc.seed = 2;
  EXPECT_NE(flatten(train(two_objects(), c, tc).model), flatten(a.model));
}

TEST(Train, RejectsBadConfig) {
  TrainConfig tc;
  tc.batch = 0;
  EXPECT_THROW(train(two_objects(), small_net(), tc), ConfigError);
  tc.batch = 1;
  tc.weights = {0, 0, 0};
  EXPECT_THROW(train(two_objects(), small_net(), tc), ConfigError);
}

TEST(Adam, FirstStepMovesBySignedLearningRate) {
  nn::Vector p(3), g(3);
  p << 1.0, -2.0, 0.5;
  g << 4.0, -0.01, 0.0;
  nn::Adam adam(0.1);
  adam.step({Eigen::Map<nn::Vector>(p.data(), 3)}, {Eigen::Map<const nn::Vector>(g.data(), 3)});
  // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], -2.0 + 0.1 * 0.01 / (0.01 + 1e-8), 1e-15);
  EXPECT_EQ(p[2], 0.5);
}

TEST(Nn, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  nn::Mlp m = nn::make_mlp({5, 7, 4}, true, rng);
  nn::Matrix x = nn::Matrix::Random(3, 5);
  nn::Matrix gy = nn::Matrix::Random(3, 4);
  nn::MlpCache cache;
  nn::forward(m, x, &cache);
  nn::Mlp grad = nn::zeros_like(m);
  const nn::Matrix gx = nn::backward(m, cache, gy, grad);
  auto f = [&](const nn::Matrix& in) { return (nn::forward(m, in).array() * gy.array()).sum(); };
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) {
      nn::Matrix a = x, b = x;
      a(r, c) += 1e-6;
      b(r, c) -= 1e-6;
      EXPECT_NEAR((f(a) - f(b)) / 2e-6, gx(r, c), 1e-7);
    }
  for (int i = 0; i < 7; ++i) {
    const double w0 = m.layers[0].weight(i, 2);
    m.layers[0].weight(i, 2) = w0 + 1e-6;
    const double lp = f(x);
    m.layers[0].weight(i, 2) = w0 - 1e-6;
    const double lm = f(x);
    m.layers[0].weight(i, 2) = w0;
    EXPECT_NEAR((lp - lm) / 2e-6, grad.layers[0].weight(i, 2), 1e-7);
  }
}
