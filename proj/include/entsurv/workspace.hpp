#pragma once

// The five-region robot workspace: a deterministic grid MDP with one-way corridors.
//
// Layout on a 17 x 25 global grid (row 0 at the top):
//   Region 1  rows  5..11, cols  0..6   (7 x 7)
//   Region 2  rows  0..7,  cols  8..15
//   Region 3  rows  9..16, cols  8..15
//   Region 4  rows  0..7,  cols 17..24
//   Region 5  rows  9..16, cols 17..24
// Corridors are single cells with one action, passable only in their direction:
//   1 (5,7)   R1 -> R2      2 (11,7)  R1 -> R3      3 (11,16) R5 -> R3
//   4 (14,16) R3 -> R5      5 (5,16)  R2 -> R4      6 (8,20)  R5 -> R4
// Five corridors give 310 states and 1379 edges, so one of the six is left out.

#include <algorithm>
#include <array>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "entsurv/mdp.hpp"

namespace entsurv {

struct Region {
  int id;
  int row0, col0, rows, cols;
  bool contains(int r, int c) const { return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols; }
};

struct Corridor {
  int id;
  int row, col;
  int from_row, from_col;  // entry cell
  int to_row, to_col;      // exit cell
};

inline const std::array<Region, 5>& workspace_regions() {
  static const std::array<Region, 5> regions{{
      {1, 5, 0, 7, 7},
      {2, 0, 8, 8, 8},
      {3, 9, 8, 8, 8},
      {4, 0, 17, 8, 8},
      {5, 9, 17, 8, 8},
  }};
  return regions;
}

inline const std::array<Corridor, 6>& workspace_corridors() {
  static const std::array<Corridor, 6> corridors{{
      {1, 5, 7, 5, 6, 5, 8},
      {2, 11, 7, 11, 6, 11, 8},
      {3, 11, 16, 11, 17, 11, 15},
      {4, 14, 16, 14, 15, 14, 17},
      {5, 5, 16, 5, 15, 5, 17},
      {6, 8, 20, 9, 20, 7, 20},
  }};
  return corridors;
}

struct WorkspaceOptions {
  int omit_corridor = 6;  // corridor id left out of the model
};

struct Cell {
  int region = 0;  // 0 for a corridor
  int row = 0, col = 0;
  int corridor = 0;
};

struct Workspace {
  Mdp mdp;
  std::vector<Cell> cells;  // per state
  std::vector<StateIndex> blue;
  std::vector<StateIndex> green;

  std::optional<StateIndex> state_at(int row, int col) const {
    for (StateIndex s = 0; s < cells.size(); ++s)
      if (cells[s].row == row && cells[s].col == col) return s;
    return std::nullopt;
  }
  std::vector<StateIndex> region_states(int region) const {
    std::vector<StateIndex> out;
    for (StateIndex s = 0; s < cells.size(); ++s)
      if (cells[s].region == region) out.push_back(s);
    return out;
  }
};

// Target cells (global row, col) and the start cell.
inline constexpr std::array<std::array<int, 2>, 3> kBlueCells{{{6, 18}, {1, 21}, {11, 10}}};
inline constexpr std::array<int, 2> kGreenCell{5, 23};
inline constexpr std::array<int, 2> kStartCell{8, 0};

inline Workspace build_workspace(const WorkspaceOptions& opt = {}) {
  if (opt.omit_corridor < 1 || opt.omit_corridor > 6) throw std::invalid_argument("omit_corridor must be 1..6");
  Workspace ws;
  std::vector<std::vector<long>> grid(17, std::vector<long>(25, -1));
  RawMdp raw;
  auto add = [&](Cell cell, std::string name) {
    grid[cell.row][cell.col] = static_cast<long>(ws.cells.size());
    ws.cells.push_back(cell);
    raw.state_names.push_back(std::move(name));
  };
  for (const auto& reg : workspace_regions())
    for (int r = 0; r < reg.rows; ++r)
      for (int c = 0; c < reg.cols; ++c)
        add({reg.id, reg.row0 + r, reg.col0 + c, 0},
            "R" + std::to_string(reg.id) + "_" + std::to_string(r) + "_" + std::to_string(c));
  std::vector<Corridor> active;
  for (const auto& cor : workspace_corridors()) {
    if (cor.id == opt.omit_corridor) continue;
    active.push_back(cor);
    add({0, cor.row, cor.col, cor.id}, "C" + std::to_string(cor.id));
  }

  static constexpr std::array<const char*, 5> kNames{"stay", "left", "right", "up", "down"};
  static constexpr std::array<int, 5> kDr{0, 0, 0, -1, 1};
  static constexpr std::array<int, 5> kDc{0, -1, 1, 0, 0};
  for (StateIndex s = 0; s < ws.cells.size(); ++s) {
    const Cell& cell = ws.cells[s];
    if (cell.region == 0) {
      for (const auto& cor : active)
        if (cor.id == cell.corridor)
          raw.rows.push_back({s, "go", {{static_cast<StateIndex>(grid[cor.to_row][cor.to_col]), 1.0}}, 0});
      continue;
    }
    const Region& reg = workspace_regions()[static_cast<std::size_t>(cell.region - 1)];
    for (std::size_t a = 0; a < kNames.size(); ++a) {
      int r = cell.row + kDr[a], c = cell.col + kDc[a];
      StateIndex target = s;
      if (reg.contains(r, c)) {
        target = static_cast<StateIndex>(grid[r][c]);
      } else {
        for (const auto& cor : active)
          if (cor.row == r && cor.col == c && cor.from_row == cell.row && cor.from_col == cell.col)
            target = static_cast<StateIndex>(grid[r][c]);
      }
      raw.rows.push_back({s, kNames[a], {{target, 1.0}}, 0});
    }
  }
  raw.initial.assign(ws.cells.size(), 0.0);
  raw.initial[static_cast<std::size_t>(grid[kStartCell[0]][kStartCell[1]])] = 1.0;
  ws.mdp = validate_mdp(raw);
  for (const auto& rc : kBlueCells) ws.blue.push_back(static_cast<StateIndex>(grid[rc[0]][rc[1]]));
  std::sort(ws.blue.begin(), ws.blue.end());
  ws.green.push_back(static_cast<StateIndex>(grid[kGreenCell[0]][kGreenCell[1]]));

  if (ws.mdp.num_states() != 310 || ws.mdp.num_edges() != 1379)
    throw std::logic_error("workspace generator: expected 310 states and 1379 edges, got " +
                           std::to_string(ws.mdp.num_states()) + " and " + std::to_string(ws.mdp.num_edges()));
  return ws;
}

/// Global grid CSV of scale * values[s]; blank for non-cells and for zero/absent entries.
inline void write_grid_csv(std::ostream& os, const Workspace& ws, const std::vector<double>& values, double scale,
                           bool blank_zero = true) {
  std::vector<std::vector<std::string>> grid(17, std::vector<std::string>(25));
  for (StateIndex s = 0; s < ws.cells.size(); ++s) {
    if (blank_zero && values[s] <= 0.0) continue;
    grid[ws.cells[s].row][ws.cells[s].col] = format_number(scale * values[s]);
  }
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
}

/// Per-region CSV grid (local rows/cols) of scale * values[s], blanks where zero.
inline void write_region_csv(std::ostream& os, const Workspace& ws, int region, const std::vector<double>& values,
                             double scale, bool blank_zero = true) {
  const Region& reg = workspace_regions().at(static_cast<std::size_t>(region - 1));
  for (int r = 0; r < reg.rows; ++r) {
    for (int c = 0; c < reg.cols; ++c) {
      auto s = ws.state_at(reg.row0 + r, reg.col0 + c);
      if (c) os << ',';
      if (s && !(blank_zero && values[*s] <= 0.0)) os << format_number(scale * values[*s]);
    }
    os << '\n';
  }
}

}  // namespace entsurv
