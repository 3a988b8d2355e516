#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clickmask {

/// Row-major 2-D array. `(row, col)` indexing, `width` columns by `height` rows.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw std::invalid_argument("grid dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> values)
        : width_(width), height_(height), data_(std::move(values))
    {
        if (width < 0 || height < 0 ||
            data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw std::invalid_argument("grid value count does not match " +
                                        std::to_string(width) + "x" + std::to_string(height));
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<T> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int r) const noexcept
    {
        return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)};
    }

    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ScalarField = Grid<double>;

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what)
{
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                    " vs " + std::to_string(b.width()) + "x" +
                                    std::to_string(b.height()) + ")");
}

}  // namespace clickmask
