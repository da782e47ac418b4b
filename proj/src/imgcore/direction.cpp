// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/direction.hpp"

namespace imagine {

char direction_token(Direction d) {
  switch (d) {
    case Direction::Up: return 'a';
    case Direction::Down: return 'b';
    case Direction::Left: return 'c';
    case Direction::Right: return 'd';
  }
  return '?';
}

std::optional<Direction> direction_from_token(char c) {
  switch (c) {
    case 'a': case 'A': return Direction::Up;
    case 'b': case 'B': return Direction::Down;
    case 'c': case 'C': return Direction::Left;
    case 'd': case 'D': return Direction::Right;
    default: return std::nullopt;
  }
}

Direction opposite(Direction d) {
  switch (d) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
  }
  return d;
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

PixelPoint direction_delta(Direction d) {
  switch (d) {
    case Direction::Up: return {0, -1};
    case Direction::Down: return {0, 1};
    case Direction::Left: return {-1, 0};
    case Direction::Right: return {1, 0};
  }
  return {0, 0};
}

}  // namespace imagine
