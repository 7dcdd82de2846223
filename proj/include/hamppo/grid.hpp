#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamppo {

// Per-cell health. Infected cells carry one of three severity levels; Empty
// marks the vegetation-free headland where the robot enters the field and
// changes crop rows.
enum class Health : std::uint8_t { Healthy = 0, I1 = 1, I2 = 2, I3 = 3, Empty = 4 };

inline bool is_infected(Health h) {
  return h == Health::I1 || h == Health::I2 || h == Health::I3;
}

// 1..3 for infected cells, 0 otherwise.
inline int infection_level(Health h) { return is_infected(h) ? static_cast<int>(h) : 0; }

inline Health infection_from_level(int level) {
  if (level < 1 || level > 3) throw std::invalid_argument("infection level must be 1..3");
  return static_cast<Health>(level);
}

inline char health_to_char(Health h) {
  switch (h) {
    case Health::Healthy: return '.';
    case Health::I1: return '1';
    case Health::I2: return '2';
    case Health::I3: return '3';
    case Health::Empty: return 'e';
  }
  throw std::logic_error("unreachable health value");
}

inline Health health_from_char(char c) {
  switch (c) {
    case '.': return Health::Healthy;
    case '1': return Health::I1;
    case '2': return Health::I2;
    case '3': return Health::I3;
    case 'e': return Health::Empty;
    default: break;
  }
  throw std::invalid_argument(std::string("unknown map cell character '") + c + "'");
}

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("grid dimensions must be positive");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  bool contains(Cell c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }

  T& at(int row, int col) { return data_[static_cast<std::size_t>(row) * cols_ + col]; }
  const T& at(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * cols_ + col];
  }
  T& at(Cell c) { return at(c.row, c.col); }
  const T& at(Cell c) const { return at(c.row, c.col); }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// Interior crop block of interior_rows x cols framed by `headland` empty rows
// at both row ends. Crop rows run vertically: up/down moves traverse a row,
// lateral moves are only possible on the headland.
struct FieldGeometry {
  int interior_rows = 10;
  int cols = 10;
  int headland = 1;

  int rows() const { return interior_rows + 2 * headland; }
  int interior_cells() const { return interior_rows * cols; }

  bool is_headland_row(int row) const {
    return row < headland || row >= headland + interior_rows;
  }
  bool is_interior(Cell c) const {
    return c.row >= headland && c.row < headland + interior_rows && c.col >= 0 && c.col < cols;
  }
  bool contains(Cell c) const {
    return c.row >= 0 && c.row < rows() && c.col >= 0 && c.col < cols;
  }
  Cell interior_to_grid(Cell interior) const { return {interior.row + headland, interior.col}; }
  Cell grid_to_interior(Cell grid) const { return {grid.row - headland, grid.col}; }

  void validate() const {
    if (interior_rows <= 0 || cols <= 0) throw std::invalid_argument("field dimensions must be positive");
    if (headland <= 0) throw std::invalid_argument("headland must be positive");
  }

  bool operator==(const FieldGeometry&) const = default;
};

// Observation noise on unvisited cells: additive clipped Gaussian on the
// binary infection indicator, or a label flip with fixed probability.
struct NoiseModel {
  enum class Kind { None, Gaussian, Flip };

  Kind kind = Kind::None;
  double param = 0.0;

  static NoiseModel none() { return {Kind::None, 0.0}; }
  static NoiseModel gaussian(double sigma) { return {Kind::Gaussian, sigma}; }
  static NoiseModel flip(double p) { return {Kind::Flip, p}; }

  void validate() const {
    if (kind == Kind::Gaussian && param < 0.0)
      throw std::invalid_argument("gaussian noise sigma must be >= 0");
    if (kind == Kind::Flip && (param < 0.0 || param > 1.0))
      throw std::invalid_argument("flip noise probability must be in [0, 1]");
  }

  bool operator==(const NoiseModel&) const = default;
};

}  // namespace hamppo
