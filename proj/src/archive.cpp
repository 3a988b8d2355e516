#include "clickmask/archive.hpp"

#include <zlib.h>

#include <stdexcept>

namespace clickmask {

namespace {

// 1980-01-01 00:00:00 in DOS format.
constexpr std::uint16_t dos_time = 0;
constexpr std::uint16_t dos_date = (0 << 9) | (1 << 5) | 1;

void put16(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    put16(out, v & 0xffff);
    put16(out, v >> 16);
}

std::uint32_t get16(const std::vector<std::uint8_t>& in, std::size_t at)
{
    if (at + 2 > in.size())
        throw std::runtime_error("truncated zip archive");
    return in[at] | (in[at + 1] << 8);
}

std::uint32_t get32(const std::vector<std::uint8_t>& in, std::size_t at)
{
    return get16(in, at) | (get16(in, at + 2) << 16);
}

}  // namespace

std::vector<std::uint8_t> write_zip(const std::vector<ArchiveMember>& members)
{
    std::vector<std::uint8_t> out, central;
    for (const auto& m : members) {
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, m.data.data(), static_cast<uInt>(m.data.size())));
        const auto size = static_cast<std::uint32_t>(m.data.size());
        const auto name_len = static_cast<std::uint32_t>(m.name.size());
        const auto offset = static_cast<std::uint32_t>(out.size());

        put32(out, 0x04034b50);
        put16(out, 20);  // version needed
        put16(out, 0);   // flags
        put16(out, 0);   // stored
        put16(out, dos_time);
        put16(out, dos_date);
        put32(out, crc);
        put32(out, size);
        put32(out, size);
        put16(out, name_len);
        put16(out, 0);
        out.insert(out.end(), m.name.begin(), m.name.end());
        out.insert(out.end(), m.data.begin(), m.data.end());

        put32(central, 0x02014b50);
        put16(central, 20);  // made by
        put16(central, 20);
        put16(central, 0);
        put16(central, 0);
        put16(central, dos_time);
        put16(central, dos_date);
        put32(central, crc);
        put32(central, size);
        put32(central, size);
        put16(central, name_len);
        put16(central, 0);  // extra
        put16(central, 0);  // comment
        put16(central, 0);  // disk
        put16(central, 0);  // internal attrs
        put32(central, 0);  // external attrs
        put32(central, offset);
        central.insert(central.end(), m.name.begin(), m.name.end());
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    const auto cd_size = static_cast<std::uint32_t>(central.size());
    out.insert(out.end(), central.begin(), central.end());
    put32(out, 0x06054b50);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint32_t>(members.size()));
    put16(out, static_cast<std::uint32_t>(members.size()));
    put32(out, cd_size);
    put32(out, cd_offset);
    put16(out, 0);
    return out;
}

std::vector<ArchiveMember> read_zip(const std::vector<std::uint8_t>& in)
{
    std::vector<ArchiveMember> out;
    std::size_t at = 0;
    while (at + 4 <= in.size() && get32(in, at) == 0x04034b50) {
        if (get16(in, at + 8) != 0)
            throw std::runtime_error("compressed zip members are not supported");
        const std::uint32_t crc = get32(in, at + 14);
        const std::uint32_t size = get32(in, at + 18);
        const std::uint32_t name_len = get16(in, at + 26);
        const std::uint32_t extra_len = get16(in, at + 28);
        const std::size_t body = at + 30 + name_len + extra_len;
        if (body + size > in.size())
            throw std::runtime_error("truncated zip archive");
        ArchiveMember m;
        m.name.assign(in.begin() + static_cast<std::ptrdiff_t>(at + 30),
                      in.begin() + static_cast<std::ptrdiff_t>(at + 30 + name_len));
        m.data.assign(in.begin() + static_cast<std::ptrdiff_t>(body),
                      in.begin() + static_cast<std::ptrdiff_t>(body + size));
        if (crc32(0L, m.data.data(), static_cast<uInt>(m.data.size())) != crc)
            throw std::runtime_error("zip member " + m.name + " fails its checksum");
        out.push_back(std::move(m));
        at = body + size;
    }
    return out;
}

}  // namespace clickmask
