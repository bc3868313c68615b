// Command-line entry point: analyze-region, train, eval, transport, scale, serve.
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pentabot/checkpoint.hpp"
#include "pentabot/config.hpp"
#include "pentabot/errors.hpp"
#include "pentabot/scaling.hpp"
#include "pentabot/server.hpp"
#include "pentabot/simulator.hpp"
#include "pentabot/stability.hpp"
#include "pentabot/training.hpp"

namespace fs = std::filesystem;
using namespace pentabot;

namespace {

constexpr int kUsageExit = 2;

std::atomic<bool> g_interrupt{false};
extern "C" void on_signal(int) { g_interrupt = true; }

template <typename T>
void overlay(T& dst, const std::optional<T>& src) {
  if (src) dst = *src;
}

void print_report(const training::EvalReport& r, int dims) {
  std::printf("episodes            %d\n", r.episodes);
  std::printf("targets             %d\n", r.targets);
  std::printf("relative error      x %.4f  y %.4f", r.relative_error.x(), r.relative_error.y());
  if (dims == 3) std::printf("  z %.4f", r.relative_error.z());
  std::printf("\nmax relative error  %.4f\n", r.max_relative_error);
  std::printf("mean error          %.2f mm\n", r.mean_error_m * 1e3);
  std::printf("mean speed          %.2f mm/s\n", r.mean_speed_mm_s);
  std::printf("mean reward         %.4f\n", r.mean_reward);
  std::printf("success rate        %.3f\n", r.success_rate);
  std::printf("workspace exits     %d\n", r.workspace_exits);
}

nlohmann::ordered_json report_json(const training::EvalReport& r, int dims) {
  std::vector<double> rel(r.relative_error.data(), r.relative_error.data() + dims);
  return {{"episodes", r.episodes},
          {"targets", r.targets},
          {"relative_error", rel},
          {"max_relative_error", r.max_relative_error},
          {"mean_error_m", r.mean_error_m},
          {"mean_speed_mm_s", r.mean_speed_mm_s},
          {"mean_reward", r.mean_reward},
          {"success_rate", r.success_rate},
          {"workspace_exits", r.workspace_exits}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Common {
  std::string config_path;
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_remap = false;
};

config::AppConfig load_app_config(const Common& c) {
  std::optional<fs::path> path;
  if (!c.config_path.empty()) path = c.config_path;
  else path = config::default_config_path();
  config::AppConfig cfg = path ? config::load_config(*path) : config::AppConfig{};
  overlay(cfg.run.scenario, c.scenario);
  overlay(cfg.run.seed, c.seed);
  if (c.no_remap) cfg.run.remap = false;
  if (!c.out.empty()) cfg.run.out_dir = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maglev-Pentabot simulator and control toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON config file (default: $PENTABOT_CONFIG)");

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--scenario", common.scenario, "2d-paper | 3d-paper")
        ->check(CLI::IsMember({"2d-paper", "3d-paper"}));
    if (with_seed) sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--out", common.out, "output directory");
    sub->add_flag("--no-remap", common.no_remap, "disable action remapping");
  };

  // analyze-region
  auto* region_cmd = app.add_subcommand("analyze-region", "scan the controllable region");
  add_common(region_cmd, false);
  std::optional<double> resolution;
  std::optional<int> current_steps;
  std::optional<double> tolerance;
  unsigned threads = 0;
  region_cmd->add_option("--resolution", resolution, "grid resolution in m")->check(CLI::PositiveNumber);
  region_cmd->add_option("--current-steps", current_steps, "current levels per coil")->check(CLI::Range(2, 1000));
  region_cmd->add_option("--tolerance", tolerance, "force-balance tolerance as a fraction of M g")
      ->check(CLI::PositiveNumber);
  region_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a controller");
  add_common(train_cmd, true);
  std::optional<std::string> algo;
  std::optional<long long> steps, eval_interval;
  std::optional<int> eval_episodes;
  train_cmd->add_option("--algo", algo, "ppo | sac")->check(CLI::IsMember({"ppo", "sac"}));
  train_cmd->add_option("--steps", steps, "total environment steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--eval-interval", eval_interval, "steps between evaluations")->check(CLI::PositiveNumber);
  train_cmd->add_option("--eval-episodes", eval_episodes, "episodes per evaluation")->check(CLI::PositiveNumber);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on random targets");
  add_common(eval_cmd, true);
  std::string checkpoint_path;
  int episodes = 20;
  eval_cmd->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes")->check(CLI::PositiveNumber);

  // transport
  auto* transport_cmd = app.add_subcommand("transport", "run the two-stage load transport script");
  add_common(transport_cmd, false);
  transport_cmd->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();

  // scale
  auto* scale_cmd = app.add_subcommand("scale", "dipole scaling calculator");
  double base_m0 = 1.0, base_r0 = 1.0, new_m0 = 1.0, base_payload = 8e-4;
  std::vector<double> ratios;
  std::string scale_csv;
  scale_cmd->add_option("--base-m0", base_m0, "base dipole strength (A m^2)")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--base-r0", base_r0, "base control radius (m)")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--new-m0", new_m0, "new dipole strength (A m^2)")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--base-payload", base_payload, "base payload (kg), reported only")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--ratio", ratios, "extra dipole ratios for the table")->check(CLI::PositiveNumber);
  scale_cmd->add_option("--csv", scale_csv, "also write the table as CSV");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run a live session over WebSocket");
  add_common(serve_cmd, true);
  std::optional<int> port;
  std::optional<double> speed;
  std::optional<std::string> address;
  double duration = 0.0;
  serve_cmd->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 = ephemeral)");
  serve_cmd->add_option("--address", address, "bind address");
  serve_cmd->add_option("--speed", speed, "sim seconds per wall second")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--duration", duration, "stop after this many wall seconds (0 = until SIGINT)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    config::AppConfig cfg = load_app_config(common);
    auto& run = cfg.run;

    if (*region_cmd) {
      overlay(cfg.region.resolution, resolution);
      overlay(cfg.region.current_steps, current_steps);
      overlay(cfg.region.tolerance_fraction, tolerance);
      config::validate(cfg);
      SceneConfig scene = training::run_scene(run);
      int levels = cfg.region.current_steps;
      // 21 levels per coil is 4e6 vectors for five coils; use a coarser default.
      if (scene.coil_count() > 2 && !current_steps && !cfg.region_steps_explicit) levels = 5;
      const auto grid = stability::make_current_grid(scene, levels);
      stability::ScanOptions opts;
      opts.tolerance_fraction = cfg.region.tolerance_fraction;
      opts.threads = threads;
      opts.steps_per_coil = levels;
      const auto map =
          stability::scan_controllable_region(scene, grid, scene.analysis_domain, cfg.region.resolution, opts);
      std::printf("scenario            %s\n", scene.name.c_str());
      std::printf("resolution          %.4g m\n", map.resolution);
      std::printf("current levels      %d per coil (%zu vectors)\n", levels, grid.size());
      std::printf("cells               %zu controllable of %zu\n", map.controllable_count(), map.cells.size());
      std::printf("area                %.6g %s\n", stability::region_area(map), map.dims == 2 ? "m^2" : "m^3");
      if (!run.out_dir.empty()) {
        fs::create_directories(run.out_dir);
        std::ofstream grid_out(run.out_dir / "region.txt");
        stability::write_region(grid_out, map);
        std::ofstream csv_out(run.out_dir / "region.csv");
        stability::write_region_csv(csv_out, map);
        std::printf("wrote               %s\n", (run.out_dir / "region.txt").string().c_str());
      }
      return 0;
    }

    if (*train_cmd) {
      overlay(run.algorithm, algo);
      if (steps) {
        run.total_steps = *steps;
        // Phase lengths scale with the run unless the config pins them.
        if (!cfg.curriculum_explicit) {
          run.curriculum = env::paper_curriculum(std::max<long long>(1, (*steps + 2) / 3));
        }
        if (!eval_interval) run.eval_interval = std::min(run.eval_interval, run.total_steps);
      }
      overlay(run.eval_interval, eval_interval);
      overlay(run.eval_episodes, eval_episodes);
      config::validate(cfg);
      if (run.algorithm == "ppo" && run.scenario == "3d-paper") {
        std::printf("note: PPO was reported not to converge in the 3D scenario (SAC does); proceeding anyway.\n");
      }
      std::printf("training %s on %s for %lld steps (seed %llu)\n", run.algorithm.c_str(), run.scenario.c_str(),
                  run.total_steps, static_cast<unsigned long long>(run.seed));
      const auto result = training::train(run, [](const training::MetricsRow& row) {
        std::printf("step %9lld  sigma_p %.3g  sigma_v %.3g  reward %.4f  rel %.4f  success %.3f  exits %d\n",
                    row.global_step, row.sigma_p, row.sigma_v, row.eval.mean_reward, row.eval.max_relative_error,
                    row.eval.success_rate, row.eval.workspace_exits);
        std::fflush(stdout);
      });
      if (!run.out_dir.empty()) std::printf("wrote %s\n", (run.out_dir / "final.json").string().c_str());
      return 0;
    }

    if (*eval_cmd) {
      const auto ckpt = agents::load_checkpoint(checkpoint_path);
      const std::string scenario = common.scenario ? *common.scenario : ckpt.scenario;
      run.scenario = scenario;
      const SceneConfig scene = training::run_scene(run);
      const auto report = training::evaluate_actor(ckpt.actor(), scene, env::default_episode_config(scene), episodes,
                                                   run.seed);
      print_report(report, scene.spatial_dims());
      if (!run.out_dir.empty()) write_text(run.out_dir / "eval.json", report_json(report, scene.spatial_dims()).dump(1) + "\n");
      return 0;
    }

    if (*transport_cmd) {
      const auto ckpt = agents::load_checkpoint(checkpoint_path);
      run.scenario = common.scenario ? *common.scenario : ckpt.scenario;
      const SceneConfig scene = training::run_scene(run);
      const auto rep = training::transport_eval(ckpt.actor(), scene, training::default_transport_script(scene));
      print_report(rep.tracking, scene.spatial_dims());
      std::printf("attaches            %d\ndetaches            %d\n", rep.attaches, rep.detaches);
      std::printf("completed           %s%s%s\n", rep.completed ? "yes" : "no", rep.failure.empty() ? "" : " - ",
                  rep.failure.c_str());
      if (!run.out_dir.empty()) {
        fs::create_directories(run.out_dir);
        std::ofstream ev(run.out_dir / "transport_events.csv");
        training::write_transport_events(ev, rep);
        auto j = report_json(rep.tracking, 2);
        j["attaches"] = rep.attaches;
        j["detaches"] = rep.detaches;
        j["completed"] = rep.completed;
        j["failure"] = rep.failure;
        write_text(run.out_dir / "transport.json", j.dump(1) + "\n");
      }
      return rep.completed ? 0 : 1;
    }

    if (*scale_cmd) {
      scaling::ScalingQuery q{base_m0, base_r0, base_payload, new_m0};
      const double r = scaling::scaled_radius(q);
      std::printf("m0'/m0 = %.10g  ->  r0' = %.10g m  (r0'/r0 = %.10g)\n", new_m0 / base_m0, r, r / base_r0);
      std::printf("acceleration scale m^2/r^7: base %.6g, new %.6g\n\n", scaling::acceleration_scale(base_m0, base_r0),
                  scaling::acceleration_scale(new_m0, r));
      std::vector<double> all{new_m0 / base_m0};
      all.insert(all.end(), ratios.begin(), ratios.end());
      const auto table = scaling::report_paper_scenarios(all);
      scaling::write_table(std::cout, table);
      if (!scale_csv.empty()) {
        std::ofstream out(scale_csv);
        scaling::write_csv(out, table);
      }
      return 0;
    }

    if (*serve_cmd) {
      overlay(cfg.server.port, port);
      overlay(cfg.server.speed, speed);
      overlay(cfg.server.address, address);
      if (common.seed) cfg.server.seed = *common.seed;
      config::validate(cfg);
      const auto ckpt = agents::load_checkpoint(checkpoint_path);
      run.scenario = common.scenario ? *common.scenario : ckpt.scenario;
      server::SessionConfig sc{training::run_scene(run), ckpt.actor(), fs::path(checkpoint_path).filename().string(),
                               cfg.server.seed, cfg.server.speed};
      server::ServerOptions opts;
      opts.address = cfg.server.address;
      opts.port = cfg.server.port;
      if (!run.out_dir.empty()) {
        fs::create_directories(run.out_dir);
        opts.log_path = run.out_dir / "session_log.jsonl";
      }
      server::Server srv(std::move(sc), opts);
      srv.start();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("serving %s on ws://%s:%d (speed %.3g)\n", run.scenario.c_str(), opts.address.c_str(), srv.port(),
                  cfg.server.speed);
      std::fflush(stdout);
      if (duration > 0.0) {
        const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration);
        while (!g_interrupt && std::chrono::steady_clock::now() < until) {
          std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
      } else {
        srv.wait(g_interrupt);
      }
      srv.stop();
      std::printf("stopped\n");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
