#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace mapcsim {

// Grid coordinate, east-positive x and south-positive y. Doubles as a
// relative offset, in which case it is unbounded.
struct Coord {
  int x = 0;
  int y = 0;

  friend bool operator==(const Coord& a, const Coord& b) = default;
  friend bool operator<(const Coord& a, const Coord& b) {
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  }
  friend Coord operator+(const Coord& a, const Coord& b) { return {a.x + b.x, a.y + b.y}; }
  friend Coord operator-(const Coord& a, const Coord& b) { return {a.x - b.x, a.y - b.y}; }
  Coord operator-() const { return {-x, -y}; }
  Coord& operator+=(const Coord& o) { x += o.x; y += o.y; return *this; }
};

inline int manhattan(const Coord& a, const Coord& b = {0, 0}) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

enum class Dir : std::uint8_t { North, South, East, West };

inline constexpr std::array<Dir, 4> kAllDirs = {Dir::North, Dir::South, Dir::East, Dir::West};

inline Coord offset(Dir d) {
  switch (d) {
    case Dir::North: return {0, -1};
    case Dir::South: return {0, 1};
    case Dir::East: return {1, 0};
    case Dir::West: return {-1, 0};
  }
  return {0, 0};
}

inline char dir_char(Dir d) {
  switch (d) {
    case Dir::North: return 'n';
    case Dir::South: return 's';
    case Dir::East: return 'e';
    case Dir::West: return 'w';
  }
  return '?';
}

// Direction whose unit offset equals `o`, if any.
inline bool dir_from_offset(const Coord& o, Dir& out) {
  for (Dir d : kAllDirs) {
    if (offset(d) == o) {
      out = d;
      return true;
    }
  }
  return false;
}

enum class Rot : std::uint8_t { Cw, Ccw };

// Quarter-turn around the origin: cw maps (x,y) to (-y,x), ccw to (y,-x).
inline Coord rotate(const Coord& c, Rot r) {
  return r == Rot::Cw ? Coord{-c.y, c.x} : Coord{c.y, -c.x};
}

// `turns` clockwise quarter-turns, turns in [0,3].
inline Coord rotate_cw(const Coord& c, int turns) {
  Coord out = c;
  for (int i = 0; i < (turns & 3); ++i) out = rotate(out, Rot::Cw);
  return out;
}

inline std::string coord_str(const Coord& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

inline const std::array<Coord, 4>& neighbor_offsets() {
  static const std::array<Coord, 4> k = {Coord{0, -1}, Coord{0, 1}, Coord{1, 0}, Coord{-1, 0}};
  return k;
}

}  // namespace mapcsim
