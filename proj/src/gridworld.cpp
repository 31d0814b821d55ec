#include "ddlab/gridworld.hpp"

#include <utility>

#include "ddlab/errors.hpp"

namespace ddlab {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Left: return "Left";
    case Action::Down: return "Down";
    case Action::Right: return "Right";
    case Action::Up: return "Up";
  }
  return "?";
}

GridMap GridMap::from_rows(const std::vector<std::string>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw UsageError("map must have at least one non-empty row");
  }
  GridMap map;
  map.rows_ = static_cast<int>(rows.size());
  map.cols_ = static_cast<int>(rows.front().size());
  map.cells_.reserve(static_cast<std::size_t>(map.rows_ * map.cols_));
  int starts = 0;
  int goals = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != map.cols_) {
      throw UsageError("map rows must all have the same length");
    }
    for (char c : row) {
      const int index = static_cast<int>(map.cells_.size());
      switch (c) {
        case 'S':
          map.cells_.push_back(Cell::Start);
          map.start_ = index;
          ++starts;
          break;
        case 'F': map.cells_.push_back(Cell::Frozen); break;
        case 'H': map.cells_.push_back(Cell::Hole); break;
        case 'G':
          map.cells_.push_back(Cell::Goal);
          map.goal_ = index;
          ++goals;
          break;
        default:
          throw UsageError(std::string("invalid map character '") + c + "'");
      }
    }
  }
  if (starts != 1 || goals != 1) {
    throw UsageError("map needs exactly one S and exactly one G");
  }
  return map;
}

GridMap GridMap::default_4x4() {
  static const GridMap kDefault = from_rows({"SFFF", "FHFH", "FFFH", "HFFG"});
  return kDefault;
}

Cell GridMap::at(int index) const {
  if (index < 0 || index >= size()) {
    throw UsageError("cell index " + std::to_string(index) + " out of range");
  }
  return cells_[static_cast<std::size_t>(index)];
}

bool GridMap::is_terminal(int index) const {
  const Cell c = at(index);
  return c == Cell::Hole || c == Cell::Goal;
}

std::vector<std::string> GridMap::to_rows() const {
  std::vector<std::string> out;
  for (int r = 0; r < rows_; ++r) {
    std::string row;
    for (int c = 0; c < cols_; ++c) {
      switch (cells_[static_cast<std::size_t>(r * cols_ + c)]) {
        case Cell::Start: row += 'S'; break;
        case Cell::Frozen: row += 'F'; break;
        case Cell::Hole: row += 'H'; break;
        case Cell::Goal: row += 'G'; break;
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

void EnvConfig::validate() const {
  if (max_steps < 1) {
    throw UsageError("max_steps must be >= 1");
  }
}

int clamped_move(const GridMap& map, int state, Action a) {
  int row = state / map.cols();
  int col = state % map.cols();
  switch (a) {
    case Action::Left: col = col > 0 ? col - 1 : col; break;
    case Action::Down: row = row + 1 < map.rows() ? row + 1 : row; break;
    case Action::Right: col = col + 1 < map.cols() ? col + 1 : col; break;
    case Action::Up: row = row > 0 ? row - 1 : row; break;
  }
  return row * map.cols() + col;
}

int reset(const EnvConfig& config) { return config.map.start_index(); }

Transition step(int state, Action action, Rng& rng, const EnvConfig& config) {
  const GridMap& map = config.map;
  if (map.is_terminal(state)) {
    throw UsageError("cannot step from terminal cell " + std::to_string(state));
  }
  Action realized = action;
  if (config.slippery) {
    // Perpendicular-left, intended, perpendicular-right with probability 1/3 each.
    const int offset = static_cast<int>(rng.below(3)) - 1;
    realized = static_cast<Action>((static_cast<int>(action) + offset + kNumActions) % kNumActions);
  }
  Transition t;
  t.state = state;
  t.action = action;
  t.next_state = clamped_move(map, state, realized);
  t.reward = t.next_state == map.goal_index() ? 1.0 : 0.0;
  t.terminal = map.is_terminal(t.next_state);
  return t;
}

Eigen::VectorXd encode_state(int state, const GridMap& map) {
  if (state < 0 || state >= map.size()) {
    throw UsageError("state " + std::to_string(state) + " out of range for encoding");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(map.size());
  x[state] = 1.0;
  return x;
}

FrozenLake::FrozenLake(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  reset();
}

int FrozenLake::reset() {
  state_ = ddlab::reset(config_);
  steps_ = 0;
  done_ = false;
  return state_;
}

Transition FrozenLake::step(Action action, Rng& rng) {
  if (done_) {
    throw UsageError("episode already finished; call reset()");
  }
  Transition t = ddlab::step(state_, action, rng, config_);
  ++steps_;
  state_ = t.next_state;
  if (!t.terminal && steps_ >= config_.max_steps) {
    t.truncated = true;
  }
  done_ = t.terminal || t.truncated;
  return t;
}

}  // namespace ddlab
