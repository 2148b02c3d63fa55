#pragma once

// Hand-written gridworld policies with known accuracy, used to check the evaluators.

#include <functional>
#include <stdexcept>

#include "zipfmem/env/environment.hpp"
#include "zipfmem/env/maps.hpp"
#include "zipfmem/harness/eval.hpp"

namespace zipfmem::testing {

inline const env::Gridworld& as_grid(const env::Environment* e) {
  const auto* g = dynamic_cast<const env::Gridworld*>(e);
  if (g == nullptr) throw std::logic_error("scripted policies only drive the gridworld");
  return *g;
}

// Walks the BFS shortest path to the target.
inline int oracle_action(const env::Environment* e) {
  const auto& g = as_grid(e);
  return env::shortest_path_action(g.map(), g.agent(), g.target());
}

// Bumps into a wall or steps onto floor, never onto an object.
inline int avoid_action(const env::Environment* e) {
  const auto& g = as_grid(e);
  const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
  const auto at = g.agent();
  for (int a = 0; a < 4; ++a) {
    if (g.map().is_wall(at.row + dr[a], at.col + dc[a])) return a;
  }
  for (int a = 0; a < 4; ++a) {
    if (g.map().object_at(at.row + dr[a], at.col + dc[a]) < 0) return a;
  }
  return 0;
}

class ScriptedPolicy : public harness::EvalPolicy {
 public:
  explicit ScriptedPolicy(std::function<int(const harness::EvalSlot&)> rule, std::size_t batch = 8)
      : rule_(std::move(rule)), batch_(batch) {}
  std::size_t batch_size() const override { return batch_; }
  void reset(std::size_t) override {}
  std::vector<int> act(std::span<const harness::EvalSlot> slots) override {
    std::vector<int> out;
    for (const auto& s : slots) out.push_back(rule_(s));
    return out;
  }

 private:
  std::function<int(const harness::EvalSlot&)> rule_;
  std::size_t batch_;
};

inline ScriptedPolicy oracle_policy() {
  return ScriptedPolicy([](const harness::EvalSlot& s) { return oracle_action(s.env); });
}

inline ScriptedPolicy never_pick_policy() {
  return ScriptedPolicy([](const harness::EvalSlot& s) { return avoid_action(s.env); });
}

inline ScriptedPolicy uniform_random_policy() {
  return ScriptedPolicy([](const harness::EvalSlot& s) { return static_cast<int>(uniform_index(*s.rng, 4)); });
}

}  // namespace zipfmem::testing
