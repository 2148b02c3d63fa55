#include "zipfmem/env/maps.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "zipfmem/errors.hpp"

namespace zipfmem::env {

namespace {

constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

// Fully saturated hue wheel; never gray, so objects stay distinct from walls,
// floor and the agent marker.
Rgb hue_color(int i, int n) {
  const double h = 6.0 * i / n;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const auto up = static_cast<std::uint8_t>(std::lround(255 * f));
  const auto down = static_cast<std::uint8_t>(255 - up);
  switch (sector) {
    case 0: return {255, up, 0};
    case 1: return {down, 255, 0};
    case 2: return {0, 255, up};
    case 3: return {0, down, 255};
    case 4: return {up, 0, 255};
    default: return {255, 0, down};
  }
}

char id_char(int id) { return id < 10 ? static_cast<char>('0' + id) : static_cast<char>('a' + id - 10); }

int char_id(char ch) {
  if (ch >= '0' && ch <= '9') return ch - '0';
  if (ch >= 'a' && ch <= 'z') return ch - 'a' + 10;
  return -1;
}

// BFS distances from the target object's cell, walking through floor only.
std::vector<int> distances_to(const MapSpec& map, int object_id) {
  const auto& target = map.object(object_id);
  std::vector<int> dist(static_cast<std::size_t>(map.rows * map.cols), -1);
  std::deque<Cell> queue{target.cell};
  dist[target.cell.row * map.cols + target.cell.col] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int a = 0; a < 4; ++a) {
      const int r = c.row + kDr[a], q = c.col + kDc[a];
      if (map.is_wall(r, q) || dist[r * map.cols + q] >= 0) continue;
      dist[r * map.cols + q] = dist[c.row * map.cols + c.col] + 1;
      // other objects end the trial when entered, so paths may not pass through them
      if (map.object_at(r, q) >= 0) continue;
      queue.push_back({r, q});
    }
  }
  return dist;
}

}  // namespace

int MapSpec::object_at(int r, int c) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].cell.row == r && objects[i].cell.col == c) return static_cast<int>(i);
  }
  return -1;
}

const ObjectSpec& MapSpec::object(int object_id) const {
  for (const auto& o : objects) {
    if (o.object_id == object_id) return o;
  }
  throw std::invalid_argument("map " + std::to_string(map_id) + " has no object " + std::to_string(object_id));
}

int shortest_path_length(const MapSpec& map, Cell from, int object_id) {
  return distances_to(map, object_id)[from.row * map.cols + from.col];
}

int shortest_path_action(const MapSpec& map, Cell from, int object_id) {
  const auto dist = distances_to(map, object_id);
  const int here = dist[from.row * map.cols + from.col];
  if (here <= 0) return -1;
  for (int a = 0; a < 4; ++a) {
    const int r = from.row + kDr[a], c = from.col + kDc[a];
    if (map.is_wall(r, c) || dist[r * map.cols + c] != here - 1) continue;
    const int there = map.object_at(r, c);
    if (there < 0 || map.objects[static_cast<std::size_t>(there)].object_id == object_id) return a;
  }
  return -1;
}

bool all_objects_reachable(const MapSpec& map) {
  for (const auto& o : map.objects) {
    if (shortest_path_length(map, map.start, o.object_id) <= 0) return false;
  }
  return true;
}

std::vector<MapSpec> generate_maps(std::uint64_t seed, int n_maps, int n_objects, const MapGenConfig& config) {
  if (n_maps < 1 || n_objects < 1) throw std::invalid_argument("generate_maps: need at least one map and one object");
  if (config.rows < 3 || config.cols < 3) throw std::invalid_argument("generate_maps: grid must be at least 3x3");
  if (config.wall_density < 0 || config.wall_density >= 1) {
    throw std::invalid_argument("generate_maps: wall_density must be in [0, 1)");
  }
  const int interior = (config.rows - 2) * (config.cols - 2);
  const int n_walls = static_cast<int>(std::floor(config.wall_density * interior));
  if (n_objects + 1 > interior - n_walls) {
    throw GenerationError("generate_maps: " + std::to_string(n_objects) + " objects and a start do not fit in " +
                          std::to_string(interior - n_walls) + " floor cells");
  }
  const int palette_size = std::max(n_objects, 12);

  std::vector<MapSpec> maps;
  for (int m = 0; m < n_maps; ++m) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    bool placed = false;
    for (int attempt = 0; attempt < config.max_attempts && !placed; ++attempt) {
      MapSpec map;
      map.map_id = m;
      map.n_maps = n_maps;
      map.rows = config.rows;
      map.cols = config.cols;
      map.walls.assign(static_cast<std::size_t>(config.rows * config.cols), 0);
      std::vector<int> cells;
      for (int r = 0; r < config.rows; ++r) {
        for (int c = 0; c < config.cols; ++c) {
          if (r == 0 || c == 0 || r == config.rows - 1 || c == config.cols - 1) {
            map.walls[r * config.cols + c] = 1;
          } else {
            cells.push_back(r * config.cols + c);
          }
        }
      }
      // partial Fisher-Yates: first n_walls become walls, then objects, then start
      for (int i = 0; i < n_walls + n_objects + 1; ++i) {
        const auto j = i + static_cast<int>(uniform_index(rng, cells.size() - i));
        std::swap(cells[i], cells[j]);
      }
      for (int i = 0; i < n_walls; ++i) map.walls[cells[i]] = 1;
      std::vector<int> colors(palette_size);
      std::iota(colors.begin(), colors.end(), 0);
      for (int i = 0; i < n_objects; ++i) {
        const auto j = i + static_cast<int>(uniform_index(rng, colors.size() - i));
        std::swap(colors[i], colors[j]);
      }
      for (int i = 0; i < n_objects; ++i) {
        const int cell = cells[n_walls + i];
        map.objects.push_back({i, hue_color(colors[i], palette_size), {cell / config.cols, cell % config.cols}});
      }
      const int start = cells[n_walls + n_objects];
      map.start = {start / config.cols, start % config.cols};
      map.start_facing = static_cast<Facing>(uniform_index(rng, 4));
      if (all_objects_reachable(map)) {
        maps.push_back(std::move(map));
        placed = true;
      }
    }
    if (!placed) {
      throw GenerationError("generate_maps: no feasible layout for map " + std::to_string(m) + " after " +
                            std::to_string(config.max_attempts) + " attempts");
    }
  }
  return maps;
}

std::string dump_map(const MapSpec& map) {
  std::ostringstream os;
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      const int obj = map.object_at(r, c);
      if (map.walls[r * map.cols + c]) {
        os << '#';
      } else if (obj >= 0) {
        os << id_char(map.objects[obj].object_id);
      } else if (map.start == Cell{r, c}) {
        os << 'S';
      } else {
        os << '.';
      }
    }
    os << '\n';
  }
  static constexpr const char* kFacing[4] = {"north", "east", "south", "west"};
  os << "facing " << kFacing[static_cast<int>(map.start_facing)] << '\n';
  for (const auto& o : map.objects) {
    os << "object " << o.object_id << ' ' << int(o.color.r) << ' ' << int(o.color.g) << ' ' << int(o.color.b) << " at "
       << o.cell.row << ' ' << o.cell.col << '\n';
  }
  return os.str();
}

MapSpec parse_map_dump(const std::string& text, int map_id, int n_maps) {
  MapSpec map;
  map.map_id = map_id;
  map.n_maps = n_maps;
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> grid;
  while (std::getline(is, line)) {
    if (line.rfind("facing ", 0) == 0) {
      const std::string f = line.substr(7);
      const std::string names[4] = {"north", "east", "south", "west"};
      auto it = std::find(std::begin(names), std::end(names), f);
      if (it == std::end(names)) throw std::invalid_argument("map dump: bad facing '" + f + "'");
      map.start_facing = static_cast<Facing>(it - std::begin(names));
    } else if (line.rfind("object ", 0) == 0) {
      std::istringstream ls(line.substr(7));
      int id, r, g, b, row, col;
      std::string at;
      if (!(ls >> id >> r >> g >> b >> at >> row >> col) || at != "at") {
        throw std::invalid_argument("map dump: bad object line '" + line + "'");
      }
      map.objects.push_back({id, {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)}, {row, col}});
    } else if (!line.empty()) {
      grid.push_back(line);
    }
  }
  if (grid.empty()) throw std::invalid_argument("map dump: no grid");
  map.rows = static_cast<int>(grid.size());
  map.cols = static_cast<int>(grid[0].size());
  map.walls.assign(static_cast<std::size_t>(map.rows * map.cols), 0);
  for (int r = 0; r < map.rows; ++r) {
    if (static_cast<int>(grid[r].size()) != map.cols) throw std::invalid_argument("map dump: ragged grid");
    for (int c = 0; c < map.cols; ++c) {
      const char ch = grid[r][c];
      if (ch == '#') {
        map.walls[r * map.cols + c] = 1;
      } else if (ch == 'S') {
        map.start = {r, c};
      } else if (ch != '.' && char_id(ch) < 0) {
        throw std::invalid_argument(std::string("map dump: unexpected cell '") + ch + "'");
      }
    }
  }
  std::sort(map.objects.begin(), map.objects.end(),
            [](const ObjectSpec& a, const ObjectSpec& b) { return a.object_id < b.object_id; });
  return map;
}

}  // namespace zipfmem::env
