#pragma once

#include <filesystem>
#include <ostream>

#include "zipfmem/agent/config.hpp"
#include "zipfmem/agent/trainer.hpp"
#include "zipfmem/harness/eval.hpp"

namespace zipfmem::harness {

// Uniform matrix, rare and Zipfian accuracy for a trained agent under the
// config's evaluation settings.
EvalReport evaluate_agent(const agent::AgentNet<float>& net, const memory::EpisodicMemory<float>* mem,
                          const agent::TrainConfig& config, const std::vector<env::MapSpec>& maps);

// Writes config.txt, metrics.csv, checkpoint.bin, heatmap.csv, heatmap.pgm and report.txt
// (plus momentum.csv if enabled) under run_dir.
EvalReport train_and_evaluate(const agent::TrainConfig& config, const std::filesystem::path& run_dir,
                              std::ostream* log = nullptr);

void write_report_files(const EvalReport& report, const std::filesystem::path& run_dir);
// Reads back report.txt and heatmap.csv.
EvalReport read_report_files(const std::filesystem::path& run_dir);

}  // namespace zipfmem::harness
