#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "scripted_policies.hpp"
#include "zipfmem/agent/trainer.hpp"
#include "zipfmem/env/zipf.hpp"
#include "zipfmem/harness/ablation.hpp"
#include "zipfmem/harness/eval.hpp"
#include "zipfmem/harness/run.hpp"

using namespace zipfmem;
using namespace zipfmem::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("zipfmem_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

agent::TrainConfig tiny_training() {
  agent::TrainConfig c;
  c.n_actors = 2;
  c.unroll_length = 8;
  c.hop = 4;
  c.familiarity_capacity = 4;
  c.contrastive_batch = 4;
  c.t_f = 2;
  c.t_k = 2;
  c.env_steps = 4 * 2 * 8;
  c.conv1_filters = 4;
  c.conv2_filters = 4;
  c.embedding_dim = 16;
  c.lstm_dim = 16;
  c.key_dim = 8;
  c.eval_trials_per_cell = 2;
  c.eval_zipfian_trials = 20;
  return c;
}

}  // namespace

TEST_CASE("scripted oracle is perfect and never-pick scores zero") {
  const auto maps = env::generate_maps(3, 4, 4, {});
  const env::EnvConfig ec;
  auto oracle = testing::oracle_policy();
  auto m = eval_uniform(oracle, maps, 4, ec, 3, 1);
  for (const auto& row : m) {
    for (double v : row) CHECK(v == 1.0);
  }
  CHECK(matrix_mean(m) == 1.0);
  CHECK(eval_rare(m, 4, 4) == 1.0);
  CHECK(eval_zipfian(oracle, maps, {4, 2}, {4, 2}, ec, 200, 5) == 1.0);
  auto never = testing::never_pick_policy();
  m = eval_uniform(never, maps, 4, ec, 2, 1);
  for (const auto& row : m) {
    for (double v : row) CHECK(v == 0.0);
  }
}

TEST_CASE("zipfian accuracy of a single-cell agent") {
  // correct only on the most frequent map and object
  const auto maps = env::generate_maps(11, 7, 7, {});
  auto policy = testing::ScriptedPolicy([](const EvalSlot& s) {
    const bool head = s.env->map().map_id == 0 && s.env->target() == 0;
    return head ? testing::oracle_action(s.env) : testing::avoid_action(s.env);
  });
  const std::size_t n = 4000;
  const double acc = eval_zipfian(policy, maps, {7, 2}, {7, 2}, {}, n, 21);
  const double p0 = env::zipf_pmf({7, 2})[0];
  const double expect = p0 * p0;
  CHECK(expect == doctest::Approx(0.4375).epsilon(1e-3));
  CHECK(std::abs(acc - expect) < 4 * std::sqrt(expect * (1 - expect) / n));
  auto m = eval_uniform(policy, maps, 7, {}, 1, 0);
  CHECK(pmf_weighted(m, {7, 2}, {7, 2}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("zipfian accuracy with e = 0 matches uniform accuracy") {
  const auto maps = env::generate_maps(4, 3, 3, {});
  auto policy = testing::ScriptedPolicy([](const EvalSlot& s) {
    return s.env->target() == 1 ? testing::oracle_action(s.env) : testing::avoid_action(s.env);
  });
  const auto m = eval_uniform(policy, maps, 3, {}, 1, 0);
  CHECK(matrix_mean(m) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  const std::size_t n = 3000;
  const double acc = eval_zipfian(policy, maps, {3, 0}, {3, 0}, {}, n, 8);
  CHECK(std::abs(acc - 1.0 / 3) < 4 * std::sqrt((1.0 / 3) * (2.0 / 3) / n));
}

TEST_CASE("matrix statistics") {
  CHECK(matrix_mean({{1, 0}, {0, 1}}) == 0.5);
  CHECK(rare_count(10) == 2);
  CHECK(rare_count(7) == 2);
  CHECK(rare_count(5) == 1);
  CHECK(rare_count(1) == 1);
  Matrix m(10, std::vector<double>(10, 0.0));
  m[8][8] = m[8][9] = m[9][8] = 1;
  m[9][9] = 0.5;
  CHECK(eval_rare(m, 10, 10) == doctest::Approx(3.5 / 4).epsilon(1e-15));
  CHECK(eval_rare(Matrix(7, std::vector<double>(5, 1.0)), 7, 5) == 1.0);
  Matrix m75(7, std::vector<double>(5, 0.0));
  m75[5][4] = m75[6][4] = 1;
  CHECK(eval_rare(m75, 7, 5) == 1.0);
  m75[4][4] = 1;
  m75[6][3] = 0;
  CHECK(eval_rare(m75, 7, 5) == 1.0);
  CHECK_THROWS_AS(eval_rare(m75, 6, 5), std::invalid_argument);
}

TEST_CASE("heatmap files") {
  const auto dir = temp_dir("heatmap");
  const Matrix m{{1.0, 0.5, 0.0}, {0.123456, 0.99995, 0.25}};
  emit_heatmap(m, dir / "h.csv", dir / "h.pgm");
  const auto back = read_heatmap_csv(dir / "h.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(back[i].size() == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(back[i][j] - m[i][j]) <= 5e-5);
  }
  std::ifstream pgm(dir / "h.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  pgm >> magic >> w >> h >> maxv;
  pgm.get();
  CHECK(magic == "P5");
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxv == 255);
  std::vector<unsigned char> px(6);
  pgm.read(reinterpret_cast<char*>(px.data()), 6);
  CHECK(px[0] == 255);
  CHECK(px[1] == 128);
  CHECK(px[2] == 0);
  CHECK(px[3] == 31);
  CHECK(px[5] == 64);
  std::ifstream csv(dir / "h.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "map,object_0,object_1,object_2");
  CHECK_THROWS(emit_heatmap(m, dir / "missing" / "x.csv", dir / "x.pgm"));
}

TEST_CASE("median and deviation") {
  CHECK(median({0.2, 0.5, 0.9}) == 0.5);
  CHECK(median({0.9, 0.2, 0.5, 0.4}) == doctest::Approx(0.45));
  CHECK(absolute_median_deviation({0.2, 0.5, 0.9}) == doctest::Approx(0.3));
  CHECK(absolute_median_deviation({1, 1, 1}) == 0.0);
}

TEST_CASE("ablation csv bookkeeping") {
  std::vector<AblationRow> rows{{"2", 1, 0.9, 0.5, 0.0, "ok"},
                                {"16", 1, 0.95, 0.6, 0.25, "ok"},
                                {"16", 2, 0.8, 0.4, 0.0, "failed: boom, badly"}};
  std::ostringstream os;
  write_ablation_csv(os, "K", rows);
  std::istringstream in(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "param,value,seed,zipfian,uniform,rare,zipfian_amd,uniform_amd,rare_amd,status");
  CHECK(lines[1] == "K,2,1,0.9000,0.5000,0.0000,,,,ok");
  CHECK(lines[3] == "K,16,2,0.8000,0.4000,0.0000,,,,\"failed: boom, badly\"");
  CHECK(lines[4] == "K,2,median,0.9000,0.5000,0.0000,0.0000,0.0000,0.0000,median of 1");
  CHECK(lines[5] == "K,16,median,0.9500,0.6000,0.2500,0.0000,0.0000,0.0000,median of 1");
  const auto table = format_ablation_table("K", ablation_medians(rows));
  CHECK(table.find("95.0") != std::string::npos);
  CHECK(ablation_key("K") == "knn_k");
  CHECK(ablation_key("hp") == "hop");
  CHECK_THROWS(ablation_key("lr"));
}

TEST_CASE("ablation grid runs every value and records failures") {
  const auto dir = temp_dir("ablation");
  auto base = tiny_training();
  AblationGrid grid{"K", {"2", "0"}, {3}};
  const auto rows = run_ablation(grid, base, dir);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "ok");
  CHECK(rows[0].value == "2");
  CHECK(rows[1].status.rfind("failed", 0) == 0);
  CHECK(fs::exists(dir / "K_2_seed3" / "metrics.csv"));
  CHECK(fs::exists(dir / "K_2_seed3" / "heatmap.pgm"));
}

TEST_CASE("train then eval through the checkpoint reproduces the report") {
  const auto dir = temp_dir("roundtrip");
  auto cfg = tiny_training();
  const auto report = train_and_evaluate(cfg, dir);
  for (const char* f : {"metrics.csv", "checkpoint.bin", "heatmap.csv", "heatmap.pgm", "report.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto loaded = agent::load_agent(dir / "checkpoint.bin", cfg);
  const auto maps = env::generate_maps(cfg.map_seed, cfg.n_maps, cfg.n_objects, cfg.map_config());
  const auto again = evaluate_agent(*loaded.agent, loaded.mem.get(), cfg, maps);
  CHECK(format_report(again) == format_report(report));
  CHECK(again.matrix == report.matrix);
  CHECK(again.uniform_accuracy == doctest::Approx(matrix_mean(again.matrix)).epsilon(1e-9));
  CHECK(again.rare_accuracy == doctest::Approx(eval_rare(read_heatmap_csv(dir / "heatmap.csv"), 5, 5)).epsilon(1e-9));
}

TEST_CASE("evaluation is reproducible and batch-independent") {
  auto cfg = tiny_training();
  agent::AgentNet<float> net(cfg.arch(), 4);
  const auto maps = env::generate_maps(0, 5, 5, {});
  AgentPolicy a(net, nullptr, cfg.retrieval(), true, 16), b(net, nullptr, cfg.retrieval(), true, 16),
      c(net, nullptr, cfg.retrieval(), true, 3);
  const auto ma = eval_uniform(a, maps, 5, {}, 2, 9), mb = eval_uniform(b, maps, 5, {}, 2, 9),
             mc = eval_uniform(c, maps, 5, {}, 2, 9);
  CHECK(ma == mb);
  CHECK(ma == mc);
}

TEST_CASE("a fresh agent that samples performs like a uniform-random policy") {
  auto cfg = agent::TrainConfig{};
  agent::AgentNet<float> net(cfg.arch(), 12);
  const auto maps = env::generate_maps(cfg.map_seed, 5, 5, cfg.map_config());
  AgentPolicy fresh(net, nullptr, cfg.retrieval(), true, 64);
  auto random = testing::uniform_random_policy();
  const std::size_t n = 1500;
  const double a = eval_zipfian(fresh, maps, {5, 2}, {5, 2}, {}, n, 3);
  const double r = eval_zipfian(random, maps, {5, 2}, {5, 2}, {}, n, 4);
  const double se = std::sqrt(r * (1 - r) / n * 2);
  CHECK(std::abs(a - r) < 4 * se + 0.02);
}
