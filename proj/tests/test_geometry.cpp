#include "doctest.h"

#include "mapcsim/geometry.hpp"

using namespace mapcsim;

TEST_SUITE("geometry") {

TEST_CASE("rotation quarter turns") {
  CHECK(rotate({1, 0}, Rot::Cw) == Coord{0, 1});
  CHECK(rotate({0, 1}, Rot::Cw) == Coord{-1, 0});
  CHECK(rotate({1, 0}, Rot::Ccw) == Coord{0, -1});
  // Four turns are the identity.
  Coord c{3, -2};
  CHECK(rotate_cw(c, 4) == c);
  CHECK(rotate(rotate(c, Rot::Cw), Rot::Ccw) == c);
}

TEST_CASE("direction offsets") {
  CHECK(offset(Dir::North) == Coord{0, -1});
  CHECK(offset(Dir::South) == Coord{0, 1});
  CHECK(offset(Dir::East) == Coord{1, 0});
  CHECK(offset(Dir::West) == Coord{-1, 0});
  Dir d;
  CHECK(dir_from_offset({0, 1}, d));
  CHECK(d == Dir::South);
  CHECK_FALSE(dir_from_offset({1, 1}, d));
}

TEST_CASE("manhattan distance") {
  CHECK(manhattan({0, 0}, {7, 3}) == 10);
  CHECK(manhattan({-2, 5}) == 7);
}

}
