#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ddlab/rng.hpp"

namespace ddlab {

enum class Cell : std::uint8_t { Start, Frozen, Hole, Goal };

/// Action indices follow the usual FrozenLake convention.
enum class Action : int { Left = 0, Down = 1, Right = 2, Up = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {Action::Left, Action::Down,
                                                                Action::Right, Action::Up};

std::string_view action_name(Action a);

/// Rectangular lake layout. Cells are addressed by flat index row * cols + col.
class GridMap {
 public:
  /// Parses rows over the alphabet {S, F, H, G}. Exactly one S and one G are required.
  static GridMap from_rows(const std::vector<std::string>& rows);

  /// "SFFF", "FHFH", "FFFH", "HFFG".
  static GridMap default_4x4();

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  int start_index() const { return start_; }
  int goal_index() const { return goal_; }

  Cell at(int index) const;
  bool is_terminal(int index) const;
  std::vector<std::string> to_rows() const;

  bool operator==(const GridMap&) const = default;

 private:
  GridMap() = default;

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Cell> cells_;
  int start_ = 0;
  int goal_ = 0;
};

struct EnvConfig {
  bool slippery = true;
  int max_steps = 100;
  GridMap map = GridMap::default_4x4();

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

struct Transition {
  int state = 0;
  Action action = Action::Left;
  double reward = 0.0;
  int next_state = 0;
  bool terminal = false;   // next_state is a hole or the goal
  bool truncated = false;  // horizon reached on a non-terminal cell
};

/// Neighbor of `state` in direction `a`, clamped to the grid.
int clamped_move(const GridMap& map, int state, Action a);

/// Start cell of the map. Pure: calling it repeatedly returns the same value.
int reset(const EnvConfig& config);

/// One environment transition with no horizon bookkeeping (`truncated` is never set).
/// Throws UsageError when `state` is terminal or out of range.
Transition step(int state, Action action, Rng& rng, const EnvConfig& config);

/// One-hot feature vector of length rows * cols.
Eigen::VectorXd encode_state(int state, const GridMap& map);

/// Episode-scoped environment: tracks the current cell and the step counter and
/// flags truncation once max_steps is reached.
class FrozenLake {
 public:
  explicit FrozenLake(EnvConfig config);

  int reset();
  Transition step(Action action, Rng& rng);

  int state() const { return state_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  int state_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace ddlab
