#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "zipfmem/agent/config.hpp"
#include "zipfmem/harness/eval.hpp"

namespace zipfmem::harness {

struct AblationGrid {
  std::string param;  // K, hp, t_k or t_f
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
};

struct AblationRow {
  std::string value;
  std::uint64_t seed = 0;
  double zipfian = 0, uniform = 0, rare = 0;
  std::string status;  // "ok" or "failed: <reason>"
};

struct AblationMedian {
  std::string value;
  double zipfian = 0, uniform = 0, rare = 0;
  double zipfian_amd = 0, uniform_amd = 0, rare_amd = 0;
  std::size_t runs = 0;
};

// Config key overridden by an ablation parameter name.
std::string ablation_key(const std::string& param);

double median(std::vector<double> values);
// Median absolute deviation from the median.
double absolute_median_deviation(const std::vector<double>& values);

// Trains and evaluates one run per value x seed under run_dir/<param>_<value>_seed<seed>.
// A failed run becomes a row with status "failed: ..." and the grid continues.
std::vector<AblationRow> run_ablation(const AblationGrid& grid, const agent::TrainConfig& base,
                                      const std::filesystem::path& run_dir, std::ostream* log = nullptr);

std::vector<AblationMedian> ablation_medians(const std::vector<AblationRow>& rows);

// One header, result rows, then one "median" row per value.
void write_ablation_csv(std::ostream& os, const std::string& param, const std::vector<AblationRow>& rows);
// Percent table: one row per value, median +- AMD per metric.
std::string format_ablation_table(const std::string& param, const std::vector<AblationMedian>& medians);

}  // namespace zipfmem::harness
