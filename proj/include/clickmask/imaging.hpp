#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickmask/grid.hpp"

namespace clickmask {

/// Raised for unreadable, truncated or unsupported raster files and failed writes.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grayscale intensities normalized to [0,1] (8-bit value / 255).
class GrayImage : public ScalarField {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> intensities);

    static GrayImage from_bytes(int width, int height, std::span<const std::uint8_t> bytes);

    /// Sub-image with top-left corner (left, top). Must lie inside the image.
    GrayImage crop(int left, int top, int width, int height) const;
};

/// Foreground where the byte is nonzero. Bytes instead of `vector<bool>` so rows are spans.
class BinaryMask : public Grid<std::uint8_t> {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : Grid<std::uint8_t>(width, height, fill ? 1 : 0)
    {
    }

    bool test(int row, int col) const noexcept { return (*this)(row, col) != 0; }
    void set(int row, int col, bool on = true) noexcept { (*this)(row, col) = on ? 1 : 0; }

    std::size_t count() const noexcept;
    bool any() const noexcept;

    BinaryMask complement() const;
};

struct BoundingBox {
    int top = 0;
    int left = 0;
    int bottom = 0;  // inclusive
    int right = 0;   // inclusive
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Axis-aligned window in image pixels.
struct RoiSpec {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;
    friend bool operator==(const RoiSpec&, const RoiSpec&) = default;
};

struct Component {
    int id = 0;
    int area = 0;
    double centroid_row = 0.0;
    double centroid_col = 0.0;
    BoundingBox bbox;
    friend bool operator==(const Component&, const Component&) = default;
};

struct ComponentSet {
    Grid<int> labels;  // 0 = background, otherwise component id
    std::vector<Component> components;
};

enum class Connectivity { four = 4, eight = 8 };

struct Gradient {
    ScalarField gx;  // d/dcol
    ScalarField gy;  // d/drow
};

// --- IO -------------------------------------------------------------------

/// PNG (8-bit gray, gray+alpha, RGB, RGBA, palette) or binary PGM (P5, maxval <= 255).
/// Colour input is reduced with Rec.601 luma weights.
GrayImage load_image(const std::filesystem::path& path);
GrayImage decode_image(std::span<const std::uint8_t> bytes);

/// Mask loaded from any supported raster; foreground is intensity >= 0.5.
BinaryMask load_mask(const std::filesystem::path& path);

/// 8-bit single-channel PNG, 255 = foreground.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

/// Quantizes to 8 bits (round to nearest) and writes a grayscale PNG.
void save_image(const GrayImage& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_gray_png(const GrayImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// --- grid utilities -------------------------------------------------------

/// Central differences with replicated edges. Field must be at least 2x2.
Gradient gradient(const ScalarField& field);

/// Separable Gaussian with replicated edges, kernel truncated at 3 sigma.
/// sigma <= 0 returns the input.
ScalarField gaussian_blur(const ScalarField& field, double sigma);

/// Raster-order labeling; ids are 1..N in order of first pixel encountered.
ComponentSet connected_components(const BinaryMask& mask,
                                  Connectivity connectivity = Connectivity::eight);

/// Disk dilation: true where the Euclidean distance to the nearest foreground
/// pixel is < radius + 0.5. radius 0 is the identity.
BinaryMask dilate(const BinaryMask& mask, int radius);

}  // namespace clickmask
