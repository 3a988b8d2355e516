#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clickmask {

struct ArchiveMember {
    std::string name;
    std::vector<std::uint8_t> data;
};

/// Uncompressed zip with a fixed timestamp, members in the given order, so
/// equal inputs give equal bytes.
std::vector<std::uint8_t> write_zip(const std::vector<ArchiveMember>& members);

/// Reads archives produced by `write_zip` (stored members only).
std::vector<ArchiveMember> read_zip(const std::vector<std::uint8_t>& bytes);

}  // namespace clickmask
