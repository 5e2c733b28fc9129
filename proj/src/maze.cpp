#include "grep/maze.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace grep {

MazeGrid::MazeGrid(int width, int height, std::vector<bool> walls)
    : width_(width), height_(height), walls_(std::move(walls)) {
  if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("maze must be non-empty");
  if (static_cast<int>(walls_.size()) != width_ * height_)
    throw std::invalid_argument("maze: wall flags do not match width * height");
}

int MazeGrid::free_count() const {
  return static_cast<int>(std::count(walls_.begin(), walls_.end(), false));
}

MazeSpec::MazeSpec(MazeGrid grid, Cell start, Cell goal)
    : grid_(std::move(grid)), start_(start), goal_(goal) {
  if (!grid_.is_free(start_)) throw std::invalid_argument("maze: start is not a free cell");
  if (!grid_.is_free(goal_)) throw std::invalid_argument("maze: goal is not a free cell");
  if (!dijkstra_shortest_path(grid_, start_, goal_))
    throw std::invalid_argument("maze: goal is unreachable from start");
}

MazeSpec parse_maze(std::string_view text) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rows.push_back(std::move(line));
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) throw std::invalid_argument("maze: empty text");

  const int width = static_cast<int>(rows.front().size());
  const int height = static_cast<int>(rows.size());
  std::vector<bool> walls;
  walls.reserve(static_cast<std::size_t>(width) * height);
  std::optional<Cell> start, goal;
  for (int y = 0; y < height; ++y) {
    if (static_cast<int>(rows[y].size()) != width)
      throw std::invalid_argument("maze: ragged row " + std::to_string(y));
    for (int x = 0; x < width; ++x) {
      const char c = rows[y][x];
      switch (c) {
        case '#':
          walls.push_back(true);
          break;
        case '.':
          walls.push_back(false);
          break;
        case 'S':
        case 'G': {
          auto& slot = c == 'S' ? start : goal;
          if (slot) throw std::invalid_argument(std::string("maze: duplicate ") + c);
          slot = Cell{x, y};
          walls.push_back(false);
          break;
        }
        default:
          throw std::invalid_argument(std::string("maze: unexpected character '") + c + "'");
      }
    }
  }
  if (!start) throw std::invalid_argument("maze: missing S");
  if (!goal) throw std::invalid_argument("maze: missing G");
  return MazeSpec(MazeGrid(width, height, std::move(walls)), *start, *goal);
}

std::string serialize_maze(const MazeSpec& maze) {
  std::string out;
  for (int y = 0; y < maze.height(); ++y) {
    for (int x = 0; x < maze.width(); ++x) {
      const Cell c{x, y};
      if (c == maze.start()) {
        out += 'S';
      } else if (c == maze.goal()) {
        out += 'G';
      } else {
        out += maze.grid().is_wall(c) ? '#' : '.';
      }
    }
    out += '\n';
  }
  return out;
}

std::optional<int> dijkstra_shortest_path(const MazeGrid& grid, Cell from, Cell to) {
  if (!grid.is_free(from) || !grid.is_free(to)) return std::nullopt;
  const int w = grid.width();
  std::vector<int> dist(static_cast<std::size_t>(w) * grid.height(), -1);
  using Item = std::pair<int, int>;  // (distance, cell index)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  dist[from.y * w + from.x] = 0;
  frontier.emplace(0, from.y * w + from.x);
  while (!frontier.empty()) {
    const auto [d, idx] = frontier.top();
    frontier.pop();
    if (d > dist[idx]) continue;
    const Cell c{idx % w, idx / w};
    if (c == to) return d;
    for (const Cell& delta : kMoveDelta) {
      const Cell n{c.x + delta.x, c.y + delta.y};
      if (!grid.is_free(n)) continue;
      const int nidx = n.y * w + n.x;
      if (dist[nidx] < 0 || d + 1 < dist[nidx]) {
        dist[nidx] = d + 1;
        frontier.emplace(d + 1, nidx);
      }
    }
  }
  return std::nullopt;
}

std::optional<int> dijkstra_shortest_path(const MazeSpec& maze) {
  return dijkstra_shortest_path(maze.grid(), maze.start(), maze.goal());
}

int MazeEnvironment::state_at(Cell c) const {
  const auto it = std::find(cells.begin(), cells.end(), c);
  if (it == cells.end()) throw std::out_of_range("maze: cell is not a free state");
  return static_cast<int>(it - cells.begin());
}

MazeEnvironment build_maze_env(const MazeSpec& maze) {
  const MazeGrid& grid = maze.grid();
  std::vector<Cell> cells;
  std::vector<int> state_of_cell(static_cast<std::size_t>(grid.width()) * grid.height(), -1);
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.is_wall({x, y})) continue;
      state_of_cell[y * grid.width() + x] = static_cast<int>(cells.size());
      cells.push_back({x, y});
    }
  }
  const int n = static_cast<int>(cells.size());
  const int start = state_of_cell[maze.start().y * grid.width() + maze.start().x];
  const int goal = state_of_cell[maze.goal().y * grid.width() + maze.goal().x];

  std::vector<Matrix> transitions(kMoveCount, Matrix::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kMoveCount; ++k) {
      int j = i;
      if (i != goal) {
        const Cell next{cells[i].x + kMoveDelta[k].x, cells[i].y + kMoveDelta[k].y};
        if (grid.is_free(next)) j = state_of_cell[next.y * grid.width() + next.x];
      }
      transitions[k](j, i) = 1.0;
    }
  }
  return MazeEnvironment{Environment(std::move(transitions)),
                         StateDistribution::one_hot(n, start),
                         RewardVector::one_hot(n, goal),
                         start,
                         goal,
                         std::move(cells),
                         std::move(state_of_cell)};
}

std::vector<Eigen::Vector2d> direction_field(const Matrix& weights, const MazeSpec& maze) {
  const int n = maze.grid().free_count();
  if (weights.rows() != kMoveCount || weights.cols() != n)
    throw std::invalid_argument("direction_field: expected a 4 x N weight matrix");
  std::vector<Eigen::Vector2d> field(n, Eigen::Vector2d::Zero());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kMoveCount; ++k) {
      field[i] += weights(k, i) * Eigen::Vector2d(kMoveDelta[k].x, kMoveDelta[k].y);
    }
  }
  return field;
}

std::vector<Eigen::Vector2d> policy_quiver(const Policy& policy, const MazeSpec& maze) {
  return direction_field(policy.probs(), maze);
}

MazeFixture load_maze_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open maze file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  MazeSpec maze = parse_maze(buffer.str());

  MazeFixture fixture{maze, *dijkstra_shortest_path(maze), maze.grid().free_count()};
  const auto sidecar = path.parent_path() / (path.stem().string() + ".meta.json");
  if (std::ifstream meta(sidecar); meta) {
    const auto j = nlohmann::json::parse(meta);
    const int recorded_path = j.at("shortest_path").get<int>();
    const int recorded_free = j.at("free_cells").get<int>();
    if (recorded_path != fixture.shortest_path || recorded_free != fixture.free_cells) {
      throw std::runtime_error(sidecar.string() + " disagrees with the maze: recorded (" +
                               std::to_string(recorded_path) + ", " +
                               std::to_string(recorded_free) + "), computed (" +
                               std::to_string(fixture.shortest_path) + ", " +
                               std::to_string(fixture.free_cells) + ")");
    }
  }
  return fixture;
}

}  // namespace grep
