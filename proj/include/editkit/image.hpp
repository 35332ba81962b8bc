#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace editkit {

// Decoded raster image: 8-bit samples, row-major, channel-interleaved.
// Only 1-channel (grayscale) and 3-channel (RGB) layouts exist.
// Instances are treated as immutable once built and are safe to share
// across threads.
class ImageBuffer {
public:
    ImageBuffer() = default;

    ImageBuffer(int width, int height, int channels)
        : ImageBuffer(width, height, channels,
                      std::vector<std::uint8_t>(
                          static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                          static_cast<std::size_t>(channels))) {}

    ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        if (width_ < 1 || height_ < 1) {
            throw std::invalid_argument("ImageBuffer: width and height must be >= 1");
        }
        if (channels_ != 1 && channels_ != 3) {
            throw std::invalid_argument("ImageBuffer: channels must be 1 or 3");
        }
        const auto expected = static_cast<std::size_t>(width_) *
                              static_cast<std::size_t>(height_) *
                              static_cast<std::size_t>(channels_);
        if (data_.size() != expected) {
            throw std::invalid_argument("ImageBuffer: data length does not match dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::uint64_t pixel_count() const noexcept {
        return static_cast<std::uint64_t>(width_) * static_cast<std::uint64_t>(height_);
    }

    std::uint8_t at(int x, int y, int c) const noexcept {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[index(x, y, c)];
    }
    std::uint8_t& at(int x, int y, int c) noexcept {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[index(x, y, c)];
    }

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }
    std::vector<std::uint8_t>& data() noexcept { return data_; }

    bool same_shape(const ImageBuffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

// Per-cell edited/unedited labels. At cell_scale 1 a cell is one pixel;
// after pooling with kernel k each cell covers a k-by-k pixel window
// (clipped at the image edge) and cell_scale records k.
class BinaryMask {
public:
    BinaryMask() = default;

    BinaryMask(int width, int height, int cell_scale = 1)
        : width_(width), height_(height), cell_scale_(cell_scale),
          values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
        if (width_ < 1 || height_ < 1) {
            throw std::invalid_argument("BinaryMask: width and height must be >= 1");
        }
        if (cell_scale_ < 1) {
            throw std::invalid_argument("BinaryMask: cell_scale must be >= 1");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int cell_scale() const noexcept { return cell_scale_; }
    std::size_t cell_count() const noexcept { return values_.size(); }

    bool get(int x, int y) const noexcept {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return values_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool edited) noexcept {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        values_[static_cast<std::size_t>(y) * width_ + x] = edited ? 1 : 0;
    }

    // Raw cell storage, one byte per cell, 0 or 1.
    const std::vector<std::uint8_t>& values() const noexcept { return values_; }
    std::vector<std::uint8_t>& values() noexcept { return values_; }

    std::size_t true_count() const noexcept {
        std::size_t n = 0;
        for (std::uint8_t v : values_) {
            n += v != 0;
        }
        return n;
    }

    bool all() const noexcept { return true_count() == values_.size(); }
    bool none() const noexcept { return true_count() == 0; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int cell_scale_ = 1;
    std::vector<std::uint8_t> values_;
};

} // namespace editkit
