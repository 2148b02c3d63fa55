#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zipfmem/agent/config.hpp"
#include "zipfmem/agent/trainer.hpp"
#include "zipfmem/env/maps.hpp"
#include "zipfmem/env/zipf.hpp"
#include "zipfmem/errors.hpp"
#include "zipfmem/harness/ablation.hpp"
#include "zipfmem/harness/eval.hpp"
#include "zipfmem/harness/run.hpp"

namespace fs = std::filesystem;
using namespace zipfmem;

namespace {

constexpr int kUsageError = 2;

agent::TrainConfig read_config(const std::string& path, const std::vector<std::string>& overrides) {
  auto cfg = agent::load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    agent::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides, std::string run_dir) {
  auto cfg = read_config(config_path, overrides);
  if (run_dir.empty()) run_dir = cfg.run_dir;
  const auto report = harness::train_and_evaluate(cfg, run_dir, &std::cerr);
  std::cout << harness::format_report(report);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path, const std::vector<std::string>& overrides,
             int trials, std::size_t zipfian_trials, std::string run_dir) {
  auto cfg = read_config(config_path, overrides);
  if (trials > 0) cfg.eval_trials_per_cell = trials;
  if (zipfian_trials > 0) cfg.eval_zipfian_trials = zipfian_trials;
  const auto loaded = agent::load_agent(checkpoint, cfg);
  const auto maps = env::generate_maps(cfg.map_seed, cfg.n_maps, cfg.n_objects, cfg.map_config());
  const auto report = harness::evaluate_agent(*loaded.agent, loaded.mem.get(), cfg, maps);
  if (run_dir.empty()) run_dir = fs::path(checkpoint).parent_path().string();
  if (!run_dir.empty()) harness::write_report_files(report, run_dir);
  std::cout << harness::format_report(report);
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& param,
               const std::vector<std::string>& values, const std::vector<std::uint64_t>& seeds, std::string run_dir) {
  auto cfg = read_config(config_path, overrides);
  if (run_dir.empty()) run_dir = cfg.run_dir;
  fs::create_directories(run_dir);
  const harness::AblationGrid grid{param, values, seeds};
  const auto rows = harness::run_ablation(grid, cfg, run_dir, &std::cerr);
  std::ofstream csv(fs::path(run_dir) / "ablation.csv");
  if (!csv) throw std::runtime_error("cannot write ablation.csv under '" + run_dir + "'");
  harness::write_ablation_csv(csv, param, rows);
  const auto table = harness::format_ablation_table(param, harness::ablation_medians(rows));
  std::ofstream(fs::path(run_dir) / "ablation.txt") << table;
  std::cout << table;
  bool any_ok = false;
  for (const auto& r : rows) any_ok = any_ok || r.status == "ok";
  return any_ok ? 0 : 1;
}

int cmd_render_map(const std::string& config_path, const std::vector<std::string>& overrides, int map) {
  const auto cfg = read_config(config_path, overrides);
  if (map < 0 || map >= cfg.n_maps) {
    throw ConfigError("--map must be in [0, " + std::to_string(cfg.n_maps) + ")");
  }
  const auto maps = env::generate_maps(cfg.map_seed, cfg.n_maps, cfg.n_objects, cfg.map_config());
  std::cout << env::dump_map(maps[static_cast<std::size_t>(map)]);
  return 0;
}

int cmd_sample_dist(const std::string& config_path, const std::vector<std::string>& overrides, std::size_t n,
                    std::uint64_t seed) {
  const auto cfg = read_config(config_path, overrides);
  if (n == 0) throw ConfigError("--n must be positive");
  const env::TrialSampler sampler(cfg.map_zipf(), cfg.object_zipf());
  Rng rng(seed);
  std::vector<std::size_t> maps(static_cast<std::size_t>(cfg.n_maps)), objects(static_cast<std::size_t>(cfg.n_objects));
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = sampler.sample(rng);
    ++maps[static_cast<std::size_t>(t.map_id)];
    ++objects[static_cast<std::size_t>(t.object_id)];
  }
  std::printf("kind,index,count,empirical,pmf\n");
  auto table = [&](const char* kind, const std::vector<std::size_t>& counts, const std::vector<double>& pmf) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      std::printf("%s,%zu,%zu,%.6f,%.6f\n", kind, i, counts[i], static_cast<double>(counts[i]) / static_cast<double>(n),
                  pmf[i]);
    }
  };
  table("map", maps, sampler.map_pmf());
  table("object", objects, sampler.object_pmf());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zipfian environments with rare-state episodic memory"};
  app.require_subcommand(1);
  app.fallthrough();
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "Override a config value (key=value), repeatable");

  std::string config_path, checkpoint, run_dir, param;
  int trials = 0, map = 0;
  std::size_t zipfian_trials = 0, n = 10000;
  std::uint64_t seed = 1;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;

  auto* train = app.add_subcommand("train", "Train an agent, then evaluate it");
  train->add_option("config", config_path, "Config file")->required();
  train->add_option("--run-dir", run_dir, "Output directory (default: run_dir from the config)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("config", config_path, "Config file")->required();
  eval->add_option("--trials", trials, "Trials per (map, object) cell")->check(CLI::PositiveNumber);
  eval->add_option("--zipfian-trials", zipfian_trials, "Trials for the Zipfian accuracy")->check(CLI::PositiveNumber);
  eval->add_option("--run-dir", run_dir, "Where to write the report (default: the checkpoint's directory)");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate over a hyperparameter grid");
  ablate->add_option("config", config_path, "Base config file")->required();
  ablate->add_option("--param", param, "K, hp, t_k or t_f")->required()->check(CLI::IsMember({"K", "hp", "t_k", "t_f"}));
  ablate->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  ablate->add_option("--seeds", seeds, "Comma-separated seeds")->required()->delimiter(',');
  ablate->add_option("--run-dir", run_dir, "Output directory (default: run_dir from the config)");

  auto* render = app.add_subcommand("render-map", "Print a generated map as text");
  render->add_option("config", config_path, "Config file")->required();
  render->add_option("--map", map, "Map index")->required();

  auto* dist = app.add_subcommand("sample-dist", "Empirical trial distribution against the Zipf pmf");
  dist->add_option("config", config_path, "Config file")->required();
  dist->add_option("--n", n, "Number of samples")->check(CLI::PositiveNumber);
  dist->add_option("--seed", seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, run_dir);
    if (*eval) return cmd_eval(checkpoint, config_path, overrides, trials, zipfian_trials, run_dir);
    if (*ablate) return cmd_ablate(config_path, overrides, param, values, seeds, run_dir);
    if (*render) return cmd_render_map(config_path, overrides, map);
    if (*dist) return cmd_sample_dist(config_path, overrides, n, seed);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
