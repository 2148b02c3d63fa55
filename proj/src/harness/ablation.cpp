#include "zipfmem/harness/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "zipfmem/errors.hpp"
#include "zipfmem/harness/run.hpp"

namespace zipfmem::harness {

std::string ablation_key(const std::string& param) {
  static const std::map<std::string, std::string> keys{{"K", "knn_k"}, {"hp", "hop"}, {"t_k", "t_k"}, {"t_f", "t_f"}};
  auto it = keys.find(param);
  if (it == keys.end()) throw ConfigError("ablation parameter must be one of K, hp, t_k, t_f; got '" + param + "'");
  return it->second;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double absolute_median_deviation(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev;
  for (double v : values) dev.push_back(std::abs(v - m));
  return median(dev);
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const agent::TrainConfig& base,
                                      const std::filesystem::path& run_dir, std::ostream* log) {
  const auto key = ablation_key(grid.param);
  if (grid.values.empty() || grid.seeds.empty()) throw ConfigError("ablation needs at least one value and one seed");
  std::vector<AblationRow> rows;
  for (const auto& value : grid.values) {
    for (auto seed : grid.seeds) {
      AblationRow row;
      row.value = value;
      row.seed = seed;
      const auto dir = run_dir / (grid.param + "_" + value + "_seed" + std::to_string(seed));
      try {
        auto cfg = base;
        agent::set_config_value(cfg, key, value);
        cfg.seed = seed;
        cfg.validate();
        if (log) *log << "ablation " << grid.param << '=' << value << " seed " << seed << '\n';
        const auto report = train_and_evaluate(cfg, dir, log);
        row.zipfian = report.zipfian_accuracy;
        row.uniform = report.uniform_accuracy;
        row.rare = report.rare_accuracy;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
        if (log) *log << "run failed: " << e.what() << '\n';
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<AblationMedian> ablation_medians(const std::vector<AblationRow>& rows) {
  std::vector<AblationMedian> out;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.value) == order.end()) order.push_back(r.value);
  }
  for (const auto& value : order) {
    std::vector<double> z, u, ra;
    for (const auto& r : rows) {
      if (r.value == value && r.status == "ok") {
        z.push_back(r.zipfian);
        u.push_back(r.uniform);
        ra.push_back(r.rare);
      }
    }
    AblationMedian m;
    m.value = value;
    m.runs = z.size();
    if (!z.empty()) {
      m.zipfian = median(z);
      m.uniform = median(u);
      m.rare = median(ra);
      m.zipfian_amd = absolute_median_deviation(z);
      m.uniform_amd = absolute_median_deviation(u);
      m.rare_amd = absolute_median_deviation(ra);
    }
    out.push_back(m);
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + '"';
}

}  // namespace

void write_ablation_csv(std::ostream& os, const std::string& param, const std::vector<AblationRow>& rows) {
  char buf[256];
  os << "param,value,seed,zipfian,uniform,rare,zipfian_amd,uniform_amd,rare_amd,status\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,,,,", r.zipfian, r.uniform, r.rare);
    os << param << ',' << csv_field(r.value) << ',' << r.seed << buf << csv_field(r.status) << '\n';
  }
  for (const auto& m : ablation_medians(rows)) {
    if (m.runs == 0) {
      os << param << ',' << csv_field(m.value) << ",median,,,,,,,no successful runs\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, ",median,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,", m.zipfian, m.uniform, m.rare, m.zipfian_amd,
                  m.uniform_amd, m.rare_amd);
    os << param << ',' << csv_field(m.value) << buf << "median of " << m.runs << '\n';
  }
}

std::string format_ablation_table(const std::string& param, const std::vector<AblationMedian>& medians) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s\n", (param + " value").c_str(), "Zipfian (%)", "Uniform (%)",
                "Rare (%)");
  os << buf;
  for (const auto& m : medians) {
    if (m.runs == 0) {
      std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s\n", m.value.c_str(), "failed", "failed", "failed");
    } else {
      std::snprintf(buf, sizeof buf, "%-10s %8.1f +- %4.1f %8.1f +- %4.1f %8.1f +- %4.1f\n", m.value.c_str(),
                    100 * m.zipfian, 100 * m.zipfian_amd, 100 * m.uniform, 100 * m.uniform_amd, 100 * m.rare,
                    100 * m.rare_amd);
    }
    os << buf;
  }
  return os.str();
}

}  // namespace zipfmem::harness
