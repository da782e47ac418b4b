// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

#include "imagine/image.hpp"

namespace imagine {

/// Screen-space directions; the policy refers to them as a, b, c, d.
enum class Direction { Up, Down, Left, Right };

char direction_token(Direction d);
std::optional<Direction> direction_from_token(char c);
Direction opposite(Direction d);
std::string_view direction_name(Direction d);
PixelPoint direction_delta(Direction d);

}  // namespace imagine
