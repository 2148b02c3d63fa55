#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zipfmem/env/maps.hpp"

namespace zipfmem::env {

inline constexpr int kImageSize = 84;
inline constexpr int kPatchSize = 8;

// 84x84 RGB, row-major, channel-interleaved bytes.
struct Observation {
  std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(kImageSize * kImageSize * 3, 0);

  std::uint8_t at(int y, int x, int channel) const { return pixels[(y * kImageSize + x) * 3 + channel]; }
  Rgb rgb(int y, int x) const { return {at(y, x, 0), at(y, x, 1), at(y, x, 2)}; }
  void set(int y, int x, Rgb c) {
    auto* p = &pixels[(y * kImageSize + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  bool operator==(const Observation&) const = default;
};

// Gray level of the map-ID patch: floor((map_id + 1) * 255 / (n_maps + 1)).
std::uint8_t map_id_gray(int map_id, int n_maps);

// Rows 0-7: cols 0-7 hold the map-ID gray, cols 8-15 the target color.
void draw_overlay(Observation& obs, int map_id, int n_maps, Rgb target);

enum class TrialStatus { running, success, failure };

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

enum class EnvKind { gridworld, threedworld };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

// Reset/step protocol shared by both worlds. The map passed to reset() is
// copied, so callers need not keep it alive.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation reset(const MapSpec& map, int target_object_id) = 0;
  virtual StepResult step(int action) = 0;
  virtual Observation render() const = 0;
  virtual int num_actions() const = 0;

  TrialStatus status() const { return status_; }
  int step_count() const { return step_count_; }
  int step_limit() const { return step_limit_; }
  const MapSpec& map() const { return map_; }
  int target() const { return target_; }

 protected:
  explicit Environment(int step_limit);
  void begin(const MapSpec& map, int target_object_id);
  void require_running() const;
  // Counts the step and settles the trial; selected_object is the index of
  // the object chosen by this step, or -1.
  StepResult finish_step(int selected_object);

  MapSpec map_;
  int target_ = 0;
  int step_limit_;
  int step_count_ = 0;
  TrialStatus status_ = TrialStatus::failure;
  bool has_map_ = false;
};

// Four absolute moves: 0 up, 1 down, 2 left, 3 right. Walking into a wall is a
// no-op that still costs a step; entering an object's cell selects it.
class Gridworld final : public Environment {
 public:
  static constexpr int kView = 5;

  explicit Gridworld(int step_limit = 100);
  Observation reset(const MapSpec& map, int target_object_id) override;
  StepResult step(int action) override;
  Observation render() const override;
  int num_actions() const override { return 4; }
  Cell agent() const { return agent_; }

 private:
  Cell agent_;
};

// Continuous position in cell units (cell (r, c) spans [c, c+1) x [r, r+1)),
// heading restricted to the four compass directions between macro actions.
// Actions: 0 forward, 1 backward, 2 turn left, 3 turn right, 4 pick. A macro
// action moves half a cell or turns 90 degrees in action_repeats equal ticks.
class ThreeDWorld final : public Environment {
 public:
  enum Action { forward = 0, backward = 1, turn_left = 2, turn_right = 3, pick = 4 };
  static constexpr double kMoveDistance = 0.5;
  static constexpr double kPickRange = 1.5;
  static constexpr double kAgentRadius = 0.2;
  static constexpr double kObjectRadius = 0.3;

  explicit ThreeDWorld(int step_limit = 200, int action_repeats = 3);
  Observation reset(const MapSpec& map, int target_object_id) override;
  StepResult step(int action) override;
  Observation render() const override;
  int num_actions() const override { return 5; }

  double x() const { return x_; }
  double y() const { return y_; }
  double heading() const { return heading_; }
  // Test hook: places the agent at an arbitrary pose.
  void set_pose(double x, double y, double heading);
  // Object index that pick would select from the current pose, or -1.
  int pick_candidate() const;

 private:
  bool blocked(double x, double y) const;

  int action_repeats_;
  double x_ = 0, y_ = 0, heading_ = 0;
};

struct EnvConfig {
  EnvKind kind = EnvKind::gridworld;
  int step_limit = 100;
  int action_repeats = 1;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

}  // namespace zipfmem::env
