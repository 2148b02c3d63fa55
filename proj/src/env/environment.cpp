#include "zipfmem/env/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "zipfmem/errors.hpp"

namespace zipfmem::env {

namespace {

constexpr Rgb kWallGray{128, 128, 128};
constexpr Rgb kFloor{0, 0, 0};
constexpr Rgb kAgent{255, 255, 255};
constexpr Rgb kCeiling{25, 25, 70};
constexpr Rgb kGround{70, 55, 35};

constexpr int kGridDr[4] = {-1, 1, 0, 0};
constexpr int kGridDc[4] = {0, 0, -1, 1};

}  // namespace

std::uint8_t map_id_gray(int map_id, int n_maps) {
  if (map_id < 0 || map_id >= n_maps) throw std::invalid_argument("map_id_gray: map id out of range");
  return static_cast<std::uint8_t>((map_id + 1) * 255 / (n_maps + 1));
}

void draw_overlay(Observation& obs, int map_id, int n_maps, Rgb target) {
  const std::uint8_t g = map_id_gray(map_id, n_maps);
  for (int y = 0; y < kPatchSize; ++y) {
    for (int x = 0; x < kPatchSize; ++x) {
      obs.set(y, x, {g, g, g});
      obs.set(y, x + kPatchSize, target);
    }
  }
}

std::string to_string(EnvKind kind) { return kind == EnvKind::gridworld ? "gridworld" : "threedworld"; }

EnvKind parse_env_kind(const std::string& name) {
  if (name == "gridworld") return EnvKind::gridworld;
  if (name == "threedworld") return EnvKind::threedworld;
  throw std::invalid_argument("unknown environment '" + name + "' (expected gridworld or threedworld)");
}

Environment::Environment(int step_limit) : step_limit_(step_limit) {
  if (step_limit < 1) throw std::invalid_argument("environment: step_limit must be >= 1");
}

void Environment::begin(const MapSpec& map, int target_object_id) {
  map.object(target_object_id);  // throws on unknown target
  map_ = map;
  target_ = target_object_id;
  step_count_ = 0;
  status_ = TrialStatus::running;
  has_map_ = true;
}

void Environment::require_running() const {
  if (!has_map_) throw ProtocolError("step() called before reset()");
  if (status_ != TrialStatus::running) throw ProtocolError("step() called after the trial ended");
}

StepResult Environment::finish_step(int selected_object) {
  ++step_count_;
  StepResult result;
  if (selected_object >= 0) {
    const bool correct = map_.objects[selected_object].object_id == target_;
    status_ = correct ? TrialStatus::success : TrialStatus::failure;
    result.reward = correct ? 1.0 : 0.0;
    result.done = true;
  } else if (step_count_ >= step_limit_) {
    status_ = TrialStatus::failure;
    result.done = true;
  }
  result.observation = render();
  return result;
}

// ---------------------------------------------------------------- Gridworld

Gridworld::Gridworld(int step_limit) : Environment(step_limit) {}

Observation Gridworld::reset(const MapSpec& map, int target_object_id) {
  begin(map, target_object_id);
  agent_ = map.start;
  return render();
}

StepResult Gridworld::step(int action) {
  require_running();
  if (action < 0 || action >= 4) throw std::invalid_argument("gridworld: action must be in [0, 4)");
  const int r = agent_.row + kGridDr[action], c = agent_.col + kGridDc[action];
  int selected = -1;
  if (!map_.is_wall(r, c)) {
    agent_ = {r, c};
    selected = map_.object_at(r, c);
  }
  return finish_step(selected);
}

Observation Gridworld::render() const {
  constexpr int half = kView / 2;
  std::array<Rgb, kView * kView> tiles;
  for (int wr = 0; wr < kView; ++wr) {
    for (int wc = 0; wc < kView; ++wc) {
      const int r = agent_.row + wr - half, c = agent_.col + wc - half;
      Rgb color = kFloor;
      if (map_.is_wall(r, c)) {
        color = kWallGray;
      } else if (const int obj = map_.object_at(r, c); obj >= 0) {
        color = map_.objects[obj].color;
      }
      if (wr == half && wc == half) color = kAgent;
      tiles[wr * kView + wc] = color;
    }
  }
  Observation obs;
  for (int y = 0; y < kImageSize; ++y) {
    const int wr = y * kView / kImageSize;
    for (int x = 0; x < kImageSize; ++x) obs.set(y, x, tiles[wr * kView + x * kView / kImageSize]);
  }
  draw_overlay(obs, map_.map_id, map_.n_maps, map_.object(target_).color);
  return obs;
}

// -------------------------------------------------------------- ThreeDWorld

ThreeDWorld::ThreeDWorld(int step_limit, int action_repeats) : Environment(step_limit), action_repeats_(action_repeats) {
  if (action_repeats < 1) throw std::invalid_argument("threedworld: action_repeats must be >= 1");
}

Observation ThreeDWorld::reset(const MapSpec& map, int target_object_id) {
  begin(map, target_object_id);
  x_ = map.start.col + 0.5;
  y_ = map.start.row + 0.5;
  heading_ = (static_cast<int>(map.start_facing) - 1) * std::numbers::pi / 2;
  return render();
}

void ThreeDWorld::set_pose(double x, double y, double heading) {
  x_ = x;
  y_ = y;
  heading_ = heading;
}

bool ThreeDWorld::blocked(double x, double y) const {
  for (double dx : {-kAgentRadius, kAgentRadius}) {
    for (double dy : {-kAgentRadius, kAgentRadius}) {
      if (map_.is_wall(static_cast<int>(std::floor(y + dy)), static_cast<int>(std::floor(x + dx)))) return true;
    }
  }
  for (const auto& o : map_.objects) {
    if (std::hypot(x - (o.cell.col + 0.5), y - (o.cell.row + 0.5)) < kAgentRadius + kObjectRadius) return true;
  }
  return false;
}

int ThreeDWorld::pick_candidate() const {
  const double cos_half_cone = std::cos(std::numbers::pi / 4);
  int best = -1;
  double best_dist = kPickRange;
  for (std::size_t i = 0; i < map_.objects.size(); ++i) {
    const double dx = map_.objects[i].cell.col + 0.5 - x_, dy = map_.objects[i].cell.row + 0.5 - y_;
    const double dist = std::hypot(dx, dy);
    if (dist > kPickRange || dist <= 0) continue;
    const double cos_angle = (dx * std::cos(heading_) + dy * std::sin(heading_)) / dist;
    if (cos_angle + 1e-12 < cos_half_cone) continue;
    if (dist < best_dist || best < 0) {
      best = static_cast<int>(i);
      best_dist = dist;
    }
  }
  return best;
}

StepResult ThreeDWorld::step(int action) {
  require_running();
  if (action < 0 || action >= 5) throw std::invalid_argument("threedworld: action must be in [0, 5)");
  int selected = -1;
  if (action == pick) {
    selected = pick_candidate();
  } else if (action == forward || action == backward) {
    const double d = (action == forward ? 1.0 : -1.0) * kMoveDistance / action_repeats_;
    for (int t = 0; t < action_repeats_; ++t) {
      const double nx = x_ + d * std::cos(heading_), ny = y_ + d * std::sin(heading_);
      if (!blocked(nx, ny)) {
        x_ = nx;
        y_ = ny;
      }
    }
  } else {
    const double d = (action == turn_right ? 1.0 : -1.0) * (std::numbers::pi / 2) / action_repeats_;
    for (int t = 0; t < action_repeats_; ++t) heading_ += d;
    // snap to the compass so repeated turns never drift
    const double quarter = std::numbers::pi / 2;
    heading_ = std::remainder(std::round(heading_ / quarter) * quarter, 2 * std::numbers::pi);
  }
  return finish_step(selected);
}

Observation ThreeDWorld::render() const {
  Observation obs;
  constexpr double horizon = kImageSize / 2.0;
  const double dir_x = std::cos(heading_), dir_y = std::sin(heading_);
  // camera plane of unit half-width: 90 degree field of view
  const double plane_x = -dir_y, plane_y = dir_x;
  std::array<double, kImageSize> zbuf{};
  for (int col = 0; col < kImageSize; ++col) {
    const double camera = 2.0 * (col + 0.5) / kImageSize - 1.0;
    const double ray_x = dir_x + plane_x * camera, ray_y = dir_y + plane_y * camera;
    int map_x = static_cast<int>(std::floor(x_)), map_y = static_cast<int>(std::floor(y_));
    const double delta_x = ray_x == 0 ? 1e30 : std::abs(1.0 / ray_x);
    const double delta_y = ray_y == 0 ? 1e30 : std::abs(1.0 / ray_y);
    const int step_x = ray_x < 0 ? -1 : 1, step_y = ray_y < 0 ? -1 : 1;
    double side_x = ray_x < 0 ? (x_ - map_x) * delta_x : (map_x + 1.0 - x_) * delta_x;
    double side_y = ray_y < 0 ? (y_ - map_y) * delta_y : (map_y + 1.0 - y_) * delta_y;
    int side = 0;
    for (int guard = 0; guard < 4 * (map_.rows + map_.cols); ++guard) {
      if (side_x < side_y) {
        side_x += delta_x;
        map_x += step_x;
        side = 0;
      } else {
        side_y += delta_y;
        map_y += step_y;
        side = 1;
      }
      if (map_.is_wall(map_y, map_x)) break;
    }
    const double perp = std::max(1e-6, side == 0 ? side_x - delta_x : side_y - delta_y);
    zbuf[col] = perp;
    const double height = kImageSize / perp;
    const int top = std::max(0, static_cast<int>(std::ceil(horizon - height / 2)));
    const int bottom = std::min(kImageSize, static_cast<int>(std::floor(horizon + height / 2)));
    double shade = 40.0 + 180.0 / (1.0 + 0.5 * perp);
    if (side == 1) shade *= 0.75;
    const auto g = static_cast<std::uint8_t>(std::lround(shade));
    for (int y = 0; y < kImageSize; ++y) {
      if (y >= top && y < bottom) {
        obs.set(y, col, {g, g, g});
      } else {
        obs.set(y, col, y < horizon ? kCeiling : kGround);
      }
    }
  }

  // billboards, far to near
  struct Sprite {
    double depth, screen_x;
    Rgb color;
  };
  std::vector<Sprite> sprites;
  for (const auto& o : map_.objects) {
    const double rx = o.cell.col + 0.5 - x_, ry = o.cell.row + 0.5 - y_;
    const double depth = rx * dir_x + ry * dir_y;
    if (depth <= 0.05) continue;
    const double lateral = rx * plane_x + ry * plane_y;
    sprites.push_back({depth, horizon * (1.0 + lateral / depth), o.color});
  }
  std::sort(sprites.begin(), sprites.end(), [](const Sprite& a, const Sprite& b) { return a.depth > b.depth; });
  for (const auto& s : sprites) {
    const double size = kImageSize * 2 * kObjectRadius / s.depth;
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.screen_x - size / 2)));
    const int x1 = std::min(kImageSize, static_cast<int>(std::floor(s.screen_x + size / 2)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(horizon - size / 2)));
    const int y1 = std::min(kImageSize, static_cast<int>(std::floor(horizon + size / 2)));
    for (int x = x0; x < x1; ++x) {
      if (s.depth >= zbuf[x]) continue;
      for (int y = y0; y < y1; ++y) obs.set(y, x, s.color);
    }
  }
  draw_overlay(obs, map_.map_id, map_.n_maps, map_.object(target_).color);
  return obs;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  if (config.kind == EnvKind::gridworld) return std::make_unique<Gridworld>(config.step_limit);
  return std::make_unique<ThreeDWorld>(config.step_limit, config.action_repeats);
}

}  // namespace zipfmem::env
