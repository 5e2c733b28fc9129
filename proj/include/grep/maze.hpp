#pragma once

// Grid mazes. Text format: one row per line, characters
//   '#' wall, '.' free, 'S' start (free), 'G' goal (free);
// the first line is y = 0 and x grows to the right.

#include "grep/mdp.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grep {

struct Cell {
  int x = 0;
  int y = 0;

  auto operator<=>(const Cell&) const = default;
};

class MazeGrid {
 public:
  MazeGrid(int width, int height, std::vector<bool> walls);

  int width() const { return width_; }
  int height() const { return height_; }
  bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool is_wall(Cell c) const { return walls_[index(c)]; }
  bool is_free(Cell c) const { return inside(c) && !is_wall(c); }
  int free_count() const;

 private:
  int index(Cell c) const { return c.y * width_ + c.x; }

  int width_;
  int height_;
  std::vector<bool> walls_;
};

class MazeSpec {
 public:
  /// Throws std::invalid_argument if start/goal are not free or the goal is
  /// unreachable.
  MazeSpec(MazeGrid grid, Cell start, Cell goal);

  const MazeGrid& grid() const { return grid_; }
  int width() const { return grid_.width(); }
  int height() const { return grid_.height(); }
  Cell start() const { return start_; }
  Cell goal() const { return goal_; }

 private:
  MazeGrid grid_;
  Cell start_;
  Cell goal_;
};

MazeSpec parse_maze(std::string_view text);
std::string serialize_maze(const MazeSpec& maze);

/// Actions in index order.
enum class Move { North = 0, East = 1, South = 2, West = 3 };
inline constexpr int kMoveCount = 4;
inline constexpr std::array<Cell, kMoveCount> kMoveDelta{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

/// Moves counted on the 4-connected free cells; nullopt if unreachable.
std::optional<int> dijkstra_shortest_path(const MazeGrid& grid, Cell from, Cell to);
std::optional<int> dijkstra_shortest_path(const MazeSpec& maze);

struct MazeEnvironment {
  Environment env;
  StateDistribution s0;
  RewardVector r;
  int start_state = 0;
  int goal_state = 0;
  std::vector<Cell> cells;          // state -> cell
  std::vector<int> state_of_cell;   // row-major cell index -> state, -1 for walls

  int state_at(Cell c) const;
};

/// States are the free cells in row-major order; four deterministic moves,
/// blocked moves stay in place, the goal is absorbing and pays reward 1.
MazeEnvironment build_maze_env(const MazeSpec& maze);

/// Per free cell, sum_k w(k, i) * delta_k for a K=4 weight matrix.
std::vector<Eigen::Vector2d> direction_field(const Matrix& weights, const MazeSpec& maze);
std::vector<Eigen::Vector2d> policy_quiver(const Policy& policy, const MazeSpec& maze);

struct MazeFixture {
  MazeSpec maze;
  int shortest_path = 0;
  int free_cells = 0;
};

/// Reads `path` and, when present, its sidecar `<stem>.meta.json` (keys
/// shortest_path and free_cells), which must agree with the values computed
/// from the maze; std::runtime_error otherwise.
MazeFixture load_maze_fixture(const std::filesystem::path& path);

}  // namespace grep
