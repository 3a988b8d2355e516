#include "clickmask/codec.hpp"

#include <stdexcept>

namespace clickmask {

namespace {

constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int sextet(char c)
{
    if (c >= 'A' && c <= 'Z')
        return c - 'A';
    if (c >= 'a' && c <= 'z')
        return c - 'a' + 26;
    if (c >= '0' && c <= '9')
        return c - '0' + 52;
    if (c == '+')
        return 62;
    if (c == '/')
        return 63;
    return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t k = 0;
    for (; k + 2 < bytes.size(); k += 3) {
        const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8) | bytes[k + 2];
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
    }
    if (k + 1 == bytes.size()) {
        const std::uint32_t v = bytes[k] << 16;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += "==";
    } else if (k + 2 == bytes.size()) {
        const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0)
        throw std::invalid_argument("base64 length must be a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t k = 0; k < text.size(); k += 4) {
        const bool last = k + 4 == text.size();
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            const char c = text[k + j];
            int s;
            if (c == '=' && last && j >= 2) {
                s = 0;
                ++pad;
            } else {
                s = pad ? -1 : sextet(c);
            }
            if (s < 0)
                throw std::invalid_argument("invalid base64 input");
            v = (v << 6) | static_cast<std::uint32_t>(s);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2)
            out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1)
            out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::vector<RowRuns> rle_encode(const BinaryMask& mask)
{
    std::vector<RowRuns> rows(static_cast<std::size_t>(mask.height()));
    for (int r = 0; r < mask.height(); ++r) {
        int c = 0;
        while (c < mask.width()) {
            if (!mask.test(r, c)) {
                ++c;
                continue;
            }
            const int start = c;
            while (c < mask.width() && mask.test(r, c))
                ++c;
            rows[static_cast<std::size_t>(r)].emplace_back(start, c - start);
        }
    }
    return rows;
}

BinaryMask rle_decode(const std::vector<RowRuns>& rows, int width, int height)
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("mask dimensions must be positive");
    if (rows.size() != static_cast<std::size_t>(height))
        throw std::invalid_argument("run-length mask has " + std::to_string(rows.size()) + " rows, expected " +
                                    std::to_string(height));
    BinaryMask m(width, height);
    for (int r = 0; r < height; ++r) {
        int end = 0;
        for (const auto& [start, len] : rows[static_cast<std::size_t>(r)]) {
            if (start < end || len < 1 || start > width - len)
                throw std::invalid_argument("invalid run in row " + std::to_string(r));
            for (int c = start; c < start + len; ++c)
                m.set(r, c);
            end = start + len;
        }
    }
    return m;
}

}  // namespace clickmask
