#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include "doctest.h"
#include "stats.hpp"
#include "zipfmem/env/environment.hpp"
#include "zipfmem/env/zipf.hpp"
#include "zipfmem/errors.hpp"

using namespace zipfmem;
using namespace zipfmem::env;

namespace {

// Independent reachability oracle: plain BFS over floor cells from the start,
// refusing to walk through any object other than the goal.
bool bfs_reaches(const MapSpec& map, Cell goal) {
  std::vector<char> seen(map.rows * map.cols, 0);
  std::deque<Cell> q{map.start};
  seen[map.start.row * map.cols + map.start.col] = 1;
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    if (c == goal) return true;
    const int dr[4] = {1, -1, 0, 0}, dc[4] = {0, 0, 1, -1};
    for (int a = 0; a < 4; ++a) {
      Cell n{c.row + dr[a], c.col + dc[a]};
      if (n.row < 0 || n.col < 0 || n.row >= map.rows || n.col >= map.cols) continue;
      if (map.walls[n.row * map.cols + n.col] || seen[n.row * map.cols + n.col]) continue;
      bool other = false;
      for (const auto& o : map.objects) other |= (o.cell == n && !(n == goal));
      if (other) continue;
      seen[n.row * map.cols + n.col] = 1;
      q.push_back(n);
    }
  }
  return false;
}

MapSpec open_map() {
  return parse_map_dump(
      "#######\n"
      "#.....#\n"
      "#.0.1.#\n"
      "#..S..#\n"
      "#.....#\n"
      "#######\n"
      "facing north\n"
      "object 0 255 0 0 at 2 2\n"
      "object 1 0 0 255 at 2 4\n",
      0, 3);
}

}  // namespace

TEST_CASE("zipf pmf examples") {
  CHECK(zipf_pmf({1, 3.0}) == std::vector<double>{1.0});
  auto two = zipf_pmf({2, 1.0});
  CHECK(std::abs(two[0] - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(two[1] - 1.0 / 3.0) < 1e-15);
  double h = 0;
  for (int i = 1; i <= 7; ++i) h += 1.0 / (i * i);
  CHECK(std::abs(zipf_pmf({7, 2.0})[0] - 1.0 / h) < 1e-12);
  CHECK(std::abs(zipf_pmf({7, 2.0})[0] - 0.66146) < 1e-5);
  CHECK_THROWS_AS(zipf_pmf({0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(zipf_pmf({3, -1.0}), std::invalid_argument);
}

TEST_CASE("zipf pmf is normalized, decreasing, uniform at zero exponent") {
  for (int n = 1; n <= 64; ++n) {
    for (double e : {0.0, 0.5, 1.0, 2.0}) {
      auto pmf = zipf_pmf({n, e});
      double total = 0;
      for (double p : pmf) total += p;
      CHECK(std::abs(total - 1.0) < 1e-12);
      for (int k = 1; k < n; ++k) {
        if (e > 0) CHECK(pmf[k] < pmf[k - 1]);
        else CHECK(pmf[k] == pmf[0]);
      }
    }
  }
}

TEST_CASE("trial sampler matches the pmf") {
  Rng rng(123);
  TrialSampler sampler({7, 2.0}, {7, 2.0});
  std::vector<long> maps(7, 0), objects(7, 0);
  for (int i = 0; i < 10000; ++i) {
    auto t = sampler.sample(rng);
    ++maps[t.map_id];
    ++objects[t.object_id];
  }
  CHECK(std::abs(maps[0] / 10000.0 - 0.66146) < 0.02);
  CHECK(testing::chi_square_p(maps, sampler.map_pmf()) > 0.01);
  CHECK(testing::chi_square_p(objects, sampler.object_pmf()) > 0.01);

  TrialSampler uniform({5, 0.0}, {4, 0.0});
  std::vector<long> cells(20, 0);
  for (int i = 0; i < 10000; ++i) {
    auto t = uniform.sample(rng);
    ++cells[t.map_id * 4 + t.object_id];
  }
  CHECK(testing::chi_square_p(cells, std::vector<double>(20, 0.05)) > 0.01);
}

TEST_CASE("trial sampling is seed-deterministic") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(sample_trial(a, {5, 2.0}, {5, 2.0}) == sample_trial(b, {5, 2.0}, {5, 2.0}));
}

TEST_CASE("map generation") {
  SUBCASE("deterministic in seed") {
    auto a = generate_maps(5, 4, 5);
    auto b = generate_maps(5, 4, 5);
    for (int m = 0; m < 4; ++m) CHECK(dump_map(a[m]) == dump_map(b[m]));
    auto c = generate_maps(6, 4, 5);
    bool differs = false;
    for (int m = 0; m < 4; ++m) differs |= dump_map(a[m]) != dump_map(c[m]);
    CHECK(differs);
  }
  SUBCASE("ten objects on an open 11x11 grid are distinct and reachable") {
    MapGenConfig open;
    open.wall_density = 0.0;
    for (const auto& map : generate_maps(1, 20, 10, open)) {
      std::set<std::pair<int, int>> cells;
      std::set<std::tuple<int, int, int>> colors;
      for (const auto& o : map.objects) {
        cells.insert({o.cell.row, o.cell.col});
        colors.insert({o.color.r, o.color.g, o.color.b});
        CHECK_FALSE(map.is_wall(o.cell.row, o.cell.col));
        CHECK(bfs_reaches(map, o.cell));
      }
      CHECK(cells.size() == 10);
      CHECK(colors.size() == 10);
      CHECK(map.object_at(map.start.row, map.start.col) < 0);
    }
  }
  SUBCASE("walled maps stay reachable") {
    MapGenConfig walled;
    walled.wall_density = 0.25;
    for (const auto& map : generate_maps(2, 30, 5, walled)) {
      for (const auto& o : map.objects) CHECK(bfs_reaches(map, o.cell));
    }
  }
  SUBCASE("pigeonhole") {
    MapGenConfig tiny;
    tiny.rows = tiny.cols = 5;
    tiny.wall_density = 0.0;
    CHECK_THROWS_AS(generate_maps(1, 1, 9, tiny), GenerationError);
    CHECK_NOTHROW(generate_maps(1, 1, 3, tiny));
  }
  SUBCASE("dump round-trips") {
    for (const auto& map : generate_maps(3, 3, 5)) {
      auto parsed = parse_map_dump(dump_map(map), map.map_id, map.n_maps);
      CHECK(parsed.walls == map.walls);
      CHECK(parsed.start == map.start);
      CHECK(parsed.start_facing == map.start_facing);
      REQUIRE(parsed.objects.size() == map.objects.size());
      for (std::size_t i = 0; i < map.objects.size(); ++i) {
        CHECK(parsed.objects[i].cell == map.objects[i].cell);
        CHECK(parsed.objects[i].color == map.objects[i].color);
      }
    }
  }
}

TEST_CASE("gridworld protocol") {
  const auto map = open_map();
  Gridworld env(100);
  CHECK_THROWS_AS(env.step(0), ProtocolError);
  CHECK_THROWS_AS(env.reset(map, 7), std::invalid_argument);

  SUBCASE("stepping onto the target succeeds") {
    env.reset(map, 0);
    CHECK_FALSE(env.step(2).done);  // (3,2)
    auto r = env.step(0);            // (2,2) holds object 0
    CHECK(r.done);
    CHECK(r.reward == 1.0);
    CHECK(env.status() == TrialStatus::success);
    CHECK_THROWS_AS(env.step(0), ProtocolError);
  }
  SUBCASE("wrong object fails without reward") {
    env.reset(map, 0);
    env.step(3);
    auto r = env.step(0);
    CHECK(r.done);
    CHECK(r.reward == 0.0);
    CHECK(env.status() == TrialStatus::failure);
  }
  SUBCASE("step limit") {
    env.reset(map, 0);
    env.step(1);  // (4,3), against the bottom wall
    StepResult r;
    int steps = 1;
    while (!r.done) {
      r = env.step(1);
      ++steps;
    }
    CHECK(steps == 100);
    CHECK(env.step_count() == 100);
    CHECK(r.reward == 0.0);
  }
  SUBCASE("termination for any action sequence") {
    Rng rng(4);
    for (const auto& m : generate_maps(8, 5, 5)) {
      env.reset(m, 4);
      int steps = 0;
      for (bool done = false; !done; ++steps) done = env.step(static_cast<int>(uniform_index(rng, 4))).done;
      CHECK(steps <= 100);
    }
  }
}

TEST_CASE("gridworld rendering") {
  const auto map = open_map();
  Gridworld env;
  auto obs = env.reset(map, 1);
  CHECK(obs == env.render());
  const auto gray = map_id_gray(0, 3);
  CHECK(gray == 63);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(obs.rgb(y, x) == Rgb{gray, gray, gray});
      CHECK(obs.rgb(y, x + 8) == Rgb{0, 0, 255});
    }
  }
  // centre tile is the agent; object 0 sits one up and one left of the start
  CHECK(obs.rgb(42, 42) == Rgb{255, 255, 255});
  CHECK(obs.rgb(25, 25) == Rgb{255, 0, 0});
  CHECK(obs.rgb(25, 60) == Rgb{0, 0, 255});
  // bottom tile row is the border wall, the one above it floor
  CHECK(obs.rgb(83, 42) == Rgb{128, 128, 128});
  CHECK(obs.rgb(55, 42) == Rgb{0, 0, 0});
}

TEST_CASE("map id gray ramp") {
  CHECK(map_id_gray(0, 4) == 51);
  CHECK(map_id_gray(3, 4) == 204);
  CHECK_THROWS(map_id_gray(4, 4));
}

TEST_CASE("threedworld protocol") {
  auto map = open_map();
  ThreeDWorld env(200, 3);
  env.reset(map, 0);
  SUBCASE("pick facing target at distance one") {
    env.set_pose(2.5, 3.5, -std::numbers::pi / 2);  // below object 0, facing north
    auto r = env.step(ThreeDWorld::pick);
    CHECK(r.done);
    CHECK(r.reward == 1.0);
  }
  SUBCASE("pick facing the wrong object") {
    env.set_pose(4.5, 3.5, -std::numbers::pi / 2);
    auto r = env.step(ThreeDWorld::pick);
    CHECK(r.done);
    CHECK(r.reward == 0.0);
  }
  SUBCASE("pick with nothing in the cone is a step") {
    env.set_pose(3.5, 4.5, std::numbers::pi / 2);  // facing south, away from objects
    auto r = env.step(ThreeDWorld::pick);
    CHECK_FALSE(r.done);
    CHECK(env.step_count() == 1);
  }
  SUBCASE("200 steps without a pick") {
    StepResult r;
    int steps = 0;
    while (!r.done) {
      r = env.step(ThreeDWorld::turn_left);
      ++steps;
    }
    CHECK(steps == 200);
    CHECK(r.reward == 0.0);
  }
  SUBCASE("turns stay on the compass and movement respects walls") {
    env.set_pose(3.5, 3.5, 0.0);
    env.step(ThreeDWorld::turn_right);
    CHECK(std::abs(env.heading() - std::numbers::pi / 2) < 1e-12);
    env.step(ThreeDWorld::forward);
    CHECK(std::abs(env.y() - 4.0) < 1e-12);
    for (int i = 0; i < 5; ++i) env.step(ThreeDWorld::forward);
    CHECK(env.y() <= 5.0 - ThreeDWorld::kAgentRadius + 1e-9);
    CHECK(env.y() >= 4.5);
  }
}

TEST_CASE("threedworld raycast oracle") {
  const auto map = open_map();
  ThreeDWorld env;
  env.reset(map, 0);
  for (double gap : {0.5, 1.0, 1.5}) {
    // facing east towards the wall at x = 6; agent at distance gap
    env.set_pose(6.0 - gap, 4.5, 0.0);
    auto obs = env.render();
    int wall = 0, total = 0;
    for (int y = 0; y < kImageSize; ++y) {
      for (int x = 0; x < kImageSize; ++x) {
        if (y < kPatchSize && x < 2 * kPatchSize) continue;
        ++total;
        auto c = obs.rgb(y, x);
        wall += (c.r == c.g && c.g == c.b && c.r > 0);
      }
    }
    CAPTURE(gap);
    CHECK(wall >= 0.6 * total);
  }
  // object billboard appears in the centre when facing it
  env.set_pose(2.5, 4.2, -std::numbers::pi / 2);
  CHECK(env.render().rgb(42, 42) == Rgb{255, 0, 0});
  CHECK(env.render() == env.render());
}
