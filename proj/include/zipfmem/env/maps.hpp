#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zipfmem/rng.hpp"

namespace zipfmem::env {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Cell {
  int row = 0, col = 0;
  bool operator==(const Cell&) const = default;
};

// Facing in 90 degree steps, clockwise on the map (rows grow downward).
enum class Facing : int { north = 0, east = 1, south = 2, west = 3 };

struct ObjectSpec {
  int object_id = 0;
  Rgb color;
  Cell cell;
};

// Immutable layout of one map. Object ids equal their rarity rank: object 0 is
// the most frequent target. n_maps is the size of the map set, which fixes the
// map-ID encoding in observations.
struct MapSpec {
  int map_id = 0;
  int n_maps = 1;
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  std::vector<ObjectSpec> objects;
  Cell start;
  Facing start_facing = Facing::north;

  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < rows && c < cols; }
  bool is_wall(int r, int c) const { return !in_bounds(r, c) || walls[r * cols + c] != 0; }
  // Index into objects, or -1.
  int object_at(int r, int c) const;
  const ObjectSpec& object(int object_id) const;
};

struct MapGenConfig {
  int rows = 11, cols = 11;
  // Fraction of interior cells turned into walls.
  double wall_density = 0.1;
  int max_attempts = 1000;
};

// Border walls plus random interior walls; objects and the start on distinct
// floor cells. Every object is reachable from the start along a path that
// touches no other object, so each one can be selected on purpose.
std::vector<MapSpec> generate_maps(std::uint64_t seed, int n_maps, int n_objects, const MapGenConfig& config = {});

// True if every object can be reached from the start without crossing walls
// or other objects.
bool all_objects_reachable(const MapSpec& map);

// Shortest first action (0 up, 1 down, 2 left, 3 right) toward the object, or
// -1 when unreachable. Other objects are treated as obstacles.
int shortest_path_action(const MapSpec& map, Cell from, int object_id);
int shortest_path_length(const MapSpec& map, Cell from, int object_id);

// Text dump: '#' wall, '.' floor, object id digit (base 36 above 9), 'S'
// start, then one "object <id> <r> <g> <b> at <row> <col>" line per object.
std::string dump_map(const MapSpec& map);
MapSpec parse_map_dump(const std::string& text, int map_id, int n_maps);

}  // namespace zipfmem::env
