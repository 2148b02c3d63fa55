#include "zipfmem/harness/run.hpp"

#include <fstream>
#include <memory>

namespace zipfmem::harness {

EvalReport evaluate_agent(const agent::AgentNet<float>& net, const memory::EpisodicMemory<float>* mem,
                          const agent::TrainConfig& config, const std::vector<env::MapSpec>& maps) {
  const auto* used = config.mode == agent::Mode::impala_only ? nullptr : mem;
  AgentPolicy policy(net, used, config.retrieval(), config.eval_sample_actions);
  EvalReport r;
  r.trials_per_cell = config.eval_trials_per_cell;
  r.zipfian_trials = config.eval_zipfian_trials;
  r.matrix = eval_uniform(policy, maps, config.n_objects, config.env_config(), config.eval_trials_per_cell,
                          config.eval_seed);
  r.uniform_accuracy = matrix_mean(r.matrix);
  r.rare_accuracy = eval_rare(r.matrix, config.n_maps, config.n_objects);
  r.zipfian_accuracy = eval_zipfian(policy, maps, config.map_zipf(), config.object_zipf(), config.env_config(),
                                    config.eval_zipfian_trials, mix_seed(config.eval_seed, 1));
  return r;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  emit_heatmap(report.matrix, run_dir / "heatmap.csv", run_dir / "heatmap.pgm");
  std::ofstream out(run_dir / "report.txt");
  if (!out) throw std::runtime_error("cannot write '" + (run_dir / "report.txt").string() + "'");
  out << format_report(report);
}

EvalReport read_report_files(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "report.txt");
  if (!in) throw std::runtime_error("cannot read '" + (run_dir / "report.txt").string() + "'");
  EvalReport r;
  std::string key;
  while (in >> key) {
    if (key == "zipfian_accuracy") in >> r.zipfian_accuracy;
    else if (key == "uniform_accuracy") in >> r.uniform_accuracy;
    else if (key == "rare_accuracy") in >> r.rare_accuracy;
    else if (key == "trials_per_cell") in >> r.trials_per_cell;
    else if (key == "zipfian_trials") in >> r.zipfian_trials;
    else throw std::runtime_error("report.txt: unknown key '" + key + "'");
  }
  r.matrix = read_heatmap_csv(run_dir / "heatmap.csv");
  return r;
}

EvalReport train_and_evaluate(const agent::TrainConfig& config, const std::filesystem::path& run_dir,
                              std::ostream* log) {
  std::filesystem::create_directories(run_dir);
  auto cfg = config;
  cfg.run_dir = run_dir.string();
  std::ofstream(run_dir / "config.txt") << cfg.to_text();
  agent::Trainer trainer(cfg);
  std::ofstream metrics(run_dir / "metrics.csv");
  if (!metrics) throw std::runtime_error("cannot write '" + (run_dir / "metrics.csv").string() + "'");
  std::unique_ptr<std::ofstream> momentum, mem;
  if (cfg.dump_momentum) {
    momentum = std::make_unique<std::ofstream>(run_dir / "momentum.csv");
    *momentum << "transfer,episode,step,lm,M\n";
    mem = std::make_unique<std::ofstream>(run_dir / "mem.csv");
    *mem << "transfer,episode,step,M\n";
  }
  trainer.train(&metrics, momentum.get(), mem.get(), log);
  metrics.flush();
  trainer.save_checkpoint(run_dir / "checkpoint.bin", false);
  const auto report = evaluate_agent(trainer.agent(), &trainer.mem(), cfg, trainer.maps());
  write_report_files(report, run_dir);
  return report;
}

}  // namespace zipfmem::harness
