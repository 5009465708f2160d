// imvote: simulate scenes, train and evaluate the three-tower detector, run
// experiments and the lifting property check.
//
// Exit codes: 0 ok, 1 other failure, 2 bad config or arguments, 3 diverged loss.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "imvote/config.hpp"
#include "imvote/evalkit/experiment.hpp"
#include "imvote/io.hpp"
#include "imvote/lift_check.hpp"
#include "imvote/train.hpp"

namespace fs = std::filesystem;
using namespace imvote;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "key-value config file (defaults: standard benchmark)");
  cmd->add_option("--seed", c.seed, "RNG seed");
  if (with_out) cmd->add_option("--out", c.out, "output directory");
}

RunConfig load(const Common& c) {
  if (!c.config.empty()) return load_run_config(c.config);
  RunConfig r = standard_benchmark();
  finalize(r);
  return r;
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

int cmd_simulate(const Common& c, int count) {
  const RunConfig cfg = load(c);
  if (count < 1) throw ConfigError("--count must be >= 1");
  const fs::path dir = out_dir(c);
  const std::uint64_t base = c.seed.value_or(1);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed(base, 0x51A, static_cast<std::uint64_t>(i));
    Sample sample = make_sample(cfg.data, seed);
    if (cfg.data.sampling) {
      std::vector<Point3> pts;
      std::vector<int> labels;
      for (int k : sample.point_subset) {
        pts.push_back(sample.scene.dense_points[k]);
        labels.push_back(sample.scene.dense_labels[k]);
      }
      sample.scene.points = std::move(pts);
      sample.scene.labels = std::move(labels);
    }
    const auto dets = oracle_detections(sample.scene, cfg.data.noise, derive_seed(seed, 0xDE7),
                                        std::min(cfg.net.num_classes, cfg.data.sim.num_classes()));
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d.json", i);
    save_json(scene_to_json(sample.scene, &dets), (dir / name).string());
  }
  std::cout << "wrote " << count << " scene(s) to " << dir.string() << "\n";
  return 0;
}

void write_eval(const EvalResult& res, const fs::path& dir, const std::string& label) {
  eval::ExperimentReport rep;
  for (TowerKind t : kAllTowers) {
    eval::VariantResult v;
    v.name = tower_name(t);
    v.seeds.push_back({0, res[static_cast<int>(t)].ap});
    rep.variants.push_back(std::move(v));
  }
  eval::write_report(rep, dir.string());
  for (TowerKind t : kAllTowers) {
    const auto& r = res[static_cast<int>(t)];
    std::printf("%s %-6s mAP@0.25 %.4f  mean vote distance %.4f m\n", label.c_str(), tower_name(t), r.ap.map,
                r.mean_vote_distance);
  }
}

int cmd_train(const Common& c) {
  RunConfig cfg = load(c);
  if (c.seed) cfg.train.seed = *c.seed;
  const fs::path dir = out_dir(c);
  const auto t0 = std::chrono::steady_clock::now();
  std::ofstream trace(dir / "loss.csv");
  trace << "step,loss\n";
  const TrainResult r = train(cfg.data, cfg.net, cfg.train, [&](int step, double loss) {
    trace << step << ',' << loss << '\n';
    if (step % 100 == 0 || step + 1 == cfg.train.steps) {
      std::printf("step %5d  loss %.4f  (%.1fs)\n", step, loss,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      std::fflush(stdout);
    }
  });
  save_checkpoint(r.model, (dir / "model.imvk").string());
  std::cout << "checkpoint: " << (dir / "model.imvk").string() << "\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& model_path) {
  RunConfig cfg = load(c);
  if (c.seed) cfg.eval.seed = *c.seed;
  const Model m = load_checkpoint(model_path, cfg.net);
  const fs::path dir = out_dir(c);
  write_eval(evaluate(m, cfg.data, cfg.eval), dir, "eval");
  return 0;
}

int cmd_experiment(const Common& c) {
  RunConfig cfg = load(c);
  if (c.seed) cfg.seeds = {*c.seed};
  const fs::path dir = out_dir(c);
  const auto rep = eval::run_experiment(cfg, [](const std::string& msg) {
    std::cout << msg << std::endl;
  });
  eval::write_report(rep, dir.string());
  for (const auto& v : rep.variants)
    std::printf("%-22s median mAP %.4f\n", v.name.c_str(), eval::median(v.maps()));
  for (const auto& [name, d] : rep.deltas)
    std::printf("%-22s median joint - point %.4f\n", name.c_str(), eval::median(d));
  std::cout << "wrote " << (dir / "metrics.csv").string() << " and report.svg\n";
  return 0;
}

int cmd_lift_check(const Common& c, int scenes) {
  if (scenes < 1) throw ConfigError("--scenes must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const LiftCheckReport rep = run_lift_check(scenes, c.seed.value_or(7));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& p : rep.properties)
    std::printf("%-4s %-34s worst %.3e (tol %.0e)\n", p.passed() ? "ok" : "FAIL", p.name.c_str(), p.worst, p.tol);
  std::printf("%d scenes in %.2fs\n", rep.scenes, secs);
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-vote lifting and three-tower voting detector"};
  app.require_subcommand(1);

  Common sim_c, train_c, eval_c, exp_c, lift_c;
  int count = 1;
  int scenes = 10000;
  std::string model_path;

  auto* sim = app.add_subcommand("simulate", "write simulated scenes as JSON");
  add_common(sim, sim_c);
  sim->add_option("--count", count, "number of scenes");

  auto* tr = app.add_subcommand("train", "train a model and write model.imvk + loss.csv");
  add_common(tr, train_c);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on held-out scenes");
  add_common(ev, eval_c);
  ev->add_option("--model", model_path, "checkpoint path")->required();

  auto* ex = app.add_subcommand("experiment", "run the configured experiment; writes metrics.csv and report.svg");
  add_common(ex, exp_c);

  auto* lc = app.add_subcommand("lift-check", "randomized vote-lifting identity suite");
  add_common(lc, lift_c, false);
  lc->add_option("--scenes", scenes, "number of random scenes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_c, count);
    if (*tr) return cmd_train(train_c);
    if (*ev) return cmd_eval(eval_c, model_path);
    if (*ex) return cmd_experiment(exp_c);
    if (*lc) return cmd_lift_check(lift_c, scenes);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DivergedLoss& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
