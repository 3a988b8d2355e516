#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clickmask/imaging.hpp"

namespace clickmask {

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Accepts padded standard-alphabet input; throws std::invalid_argument otherwise.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Foreground runs per row as (start column, length).
using RowRuns = std::vector<std::pair<int, int>>;

std::vector<RowRuns> rle_encode(const BinaryMask& mask);

/// Throws std::invalid_argument for runs outside the row or overlapping runs.
BinaryMask rle_decode(const std::vector<RowRuns>& rows, int width, int height);

}  // namespace clickmask
