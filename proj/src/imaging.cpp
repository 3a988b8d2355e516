#include "clickmask/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "clickmask/kernels.hpp"

namespace clickmask {

// --- GrayImage / BinaryMask -----------------------------------------------

namespace {

void check_dims(int width, int height)
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("image must be at least 1x1, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : ScalarField(width, height, fill)
{
    check_dims(width, height);
    if (!(fill >= 0.0 && fill <= 1.0))
        throw std::invalid_argument("intensity outside [0,1]");
}

GrayImage::GrayImage(int width, int height, std::vector<double> intensities)
    : ScalarField(width, height, std::move(intensities))
{
    check_dims(width, height);
    for (double v : values())
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("intensity outside [0,1]: " + std::to_string(v));
}

GrayImage GrayImage::from_bytes(int width, int height, std::span<const std::uint8_t> bytes)
{
    std::vector<double> v(bytes.size());
    std::transform(bytes.begin(), bytes.end(), v.begin(),
                   [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
    return GrayImage(width, height, std::move(v));
}

GrayImage GrayImage::crop(int left, int top, int w, int h) const
{
    if (left < 0 || top < 0 || w < 1 || h < 1 || left + w > width() || top + h > height())
        throw std::out_of_range("crop window outside image");
    GrayImage out(w, h);
    for (int r = 0; r < h; ++r) {
        auto src = row(top + r).subspan(static_cast<std::size_t>(left), static_cast<std::size_t>(w));
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::size_t BinaryMask::count() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(values().begin(), values().end(), [](std::uint8_t b) { return b != 0; }));
}

bool BinaryMask::any() const noexcept
{
    return std::any_of(values().begin(), values().end(), [](std::uint8_t b) { return b != 0; });
}

BinaryMask BinaryMask::complement() const
{
    BinaryMask out(width(), height());
    for (std::size_t i = 0; i < size(); ++i)
        out[i] = (*this)[i] ? 0 : 1;
    return out;
}

// --- file helpers ---------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("unreadable file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("cannot write file: " + path.string());
}

// --- PGM ------------------------------------------------------------------

namespace {

GrayImage decode_pgm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 2;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        long v = 0;
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000)
                throw IoError("unreadable file: PGM header value too large");
            ++pos;
        }
        if (pos == start)
            throw IoError("unreadable file: malformed PGM header");
        return v;
    };
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw IoError("unreadable file: malformed PGM header");
    ++pos;
    if (maxval > 255 || maxval < 1)
        throw IoError("unsupported bit depth: PGM maxval " + std::to_string(maxval));
    if (w < 1 || h < 1)
        throw IoError("unreadable file: empty PGM");
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < n)
        throw IoError("unreadable file: truncated PGM data");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
    return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(v));
}

// --- PNG ------------------------------------------------------------------

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t len)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->bytes.size() - cur->pos < len)
        png_error(png, "truncated");
    std::memcpy(out, cur->bytes.data() + cur->pos, len);
    cur->pos += len;
}

[[noreturn]] void png_throw(png_structp, png_const_charp msg)
{
    throw IoError(std::string("unreadable file: ") + msg);
}

void png_quiet(png_structp, png_const_charp) {}

GrayImage decode_png(std::span<const std::uint8_t> bytes)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_quiet);
    if (!png)
        throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    ReadCursor cursor{bytes, 0};
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (bit_depth == 16)
        throw IoError("unsupported bit depth: 16-bit PNG");
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> raw(rowbytes * static_cast<std::size_t>(h));
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r)
        rows[static_cast<std::size_t>(r)] = raw.data() + rowbytes * static_cast<std::size_t>(r);
    png_read_image(png, rows.data());

    std::vector<double> v(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) {
        const std::uint8_t* src = rows[static_cast<std::size_t>(r)];
        for (int c = 0; c < w; ++c) {
            double value;
            if (channels == 1) {
                value = src[c];
            } else {
                const std::uint8_t* px = src + static_cast<std::ptrdiff_t>(c) * channels;
                value = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            }
            v[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] =
                std::clamp(value / 255.0, 0.0, 1.0);
        }
    }
    return GrayImage(w, h, std::move(v));
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

std::vector<std::uint8_t> encode_png8(int width, int height, std::span<const std::uint8_t> pixels)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_quiet);
    if (!png)
        throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
        png_write_row(png, pixels.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(width));
    png_write_end(png, nullptr);
    return out;
}

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

}  // namespace

GrayImage decode_image(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin()))
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
        return decode_pgm(bytes);
    throw IoError("unreadable file: not a PNG or binary PGM");
}

GrayImage load_image(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const IoError& e) {
        throw IoError(std::string(e.what()) + " (" + path.string() + ")");
    }
}

BinaryMask load_mask(const std::filesystem::path& path)
{
    const GrayImage img = load_image(path);
    BinaryMask m(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        m[i] = img[i] >= 0.5 ? 1 : 0;
    return m;
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask)
{
    std::vector<std::uint8_t> px(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        px[i] = mask[i] ? 255 : 0;
    return encode_png8(mask.width(), mask.height(), px);
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_mask_png(mask));
}

std::vector<std::uint8_t> encode_gray_png(const GrayImage& image)
{
    std::vector<std::uint8_t> px(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
    return encode_png8(image.width(), image.height(), px);
}

void save_image(const GrayImage& image, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_gray_png(image));
}

// --- grid utilities -------------------------------------------------------

Gradient gradient(const ScalarField& field)
{
    if (field.width() < 2 || field.height() < 2)
        throw std::invalid_argument("gradient needs a field of at least 2x2");
    Gradient g{ScalarField(field.width(), field.height()), ScalarField(field.width(), field.height())};
    kernels::parallel::gradient(field, g.gx, g.gy);
    return g;
}

ScalarField gaussian_blur(const ScalarField& field, double sigma)
{
    if (!(sigma > 0.0))
        return field;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k)
        total += kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    for (double& k : kernel)
        k /= total;

    const int w = field.width();
    const int h = field.height();
    ScalarField tmp(w, h), out(w, h);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] * field(r, std::clamp(c + k, 0, w - 1));
            tmp(r, c) = acc;
        }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(std::clamp(r + k, 0, h - 1), c);
            out(r, c) = acc;
        }
    return out;
}

ComponentSet connected_components(const BinaryMask& mask, Connectivity connectivity)
{
    const int w = mask.width();
    const int h = mask.height();
    ComponentSet out{Grid<int>(w, h, 0), {}};
    std::vector<std::pair<int, int>> stack;
    const bool eight = connectivity == Connectivity::eight;

    for (int r0 = 0; r0 < h; ++r0) {
        for (int c0 = 0; c0 < w; ++c0) {
            if (!mask.test(r0, c0) || out.labels(r0, c0) != 0)
                continue;
            Component comp;
            comp.id = static_cast<int>(out.components.size()) + 1;
            comp.bbox = {r0, c0, r0, c0};
            double sum_r = 0.0;
            double sum_c = 0.0;
            out.labels(r0, c0) = comp.id;
            stack.assign(1, {r0, c0});
            while (!stack.empty()) {
                const auto [r, c] = stack.back();
                stack.pop_back();
                ++comp.area;
                sum_r += r;
                sum_c += c;
                comp.bbox.top = std::min(comp.bbox.top, r);
                comp.bbox.bottom = std::max(comp.bbox.bottom, r);
                comp.bbox.left = std::min(comp.bbox.left, c);
                comp.bbox.right = std::max(comp.bbox.right, c);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if ((dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0))
                            continue;
                        const int rr = r + dr;
                        const int cc = c + dc;
                        if (mask.contains(rr, cc) && mask.test(rr, cc) && out.labels(rr, cc) == 0) {
                            out.labels(rr, cc) = comp.id;
                            stack.emplace_back(rr, cc);
                        }
                    }
                }
            }
            comp.centroid_row = sum_r / comp.area;
            comp.centroid_col = sum_c / comp.area;
            out.components.push_back(comp);
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius)
{
    if (radius < 0)
        throw std::invalid_argument("dilation radius must be >= 0");
    if (radius == 0)
        return mask;
    // dist < r + 0.5  <=>  dr^2 + dc^2 <= r^2 + r for integer offsets
    const int limit = radius * radius + radius;
    std::vector<std::pair<int, int>> offsets;
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            if (dr * dr + dc * dc <= limit)
                offsets.emplace_back(dr, dc);

    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            bool hit = false;
            for (const auto& [dr, dc] : offsets) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr >= 0 && rr < h && cc >= 0 && cc < w && mask.test(rr, cc)) {
                    hit = true;
                    break;
                }
            }
            out(r, c) = hit ? 1 : 0;
        }
    }
    return out;
}

}  // namespace clickmask
