// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "topbac/geometry.hpp"

namespace topbac {

/// Error type for all library failures.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grayscale image with intensities in [0,1], row-major, pixel centers at
/// integer coordinates (x = column, y = row, origin top-left).
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          values_(static_cast<std::size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw error("GrayImage: dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    /// Bilinear interpolation; coordinates clamped to the valid pixel range.
    double sample(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
        int x0 = static_cast<int>(x);
        int y0 = static_cast<int>(y);
        int x1 = std::min(x0 + 1, width_ - 1);
        int y1 = std::min(y0 + 1, height_ - 1);
        double fx = x - x0, fy = y - y0;
        double top = at(x0, y0) * (1 - fx) + at(x1, y0) * fx;
        double bot = at(x0, y1) * (1 - fx) + at(x1, y1) * fx;
        return top * (1 - fy) + bot * fy;
    }

    /// Clip all values into [0,1]; returns the number of clipped pixels.
    int clip() {
        int n = 0;
        for (double& v : values_) {
            double c = std::clamp(v, 0.0, 1.0);
            if (c != v) { v = c; ++n; }
        }
        return n;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Boolean pixel membership mask with the same layout as GrayImage.
class PixelRegion {
public:
    PixelRegion() = default;

    PixelRegion(int width, int height, bool fill = false)
        : width_(width), height_(height),
          mask_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {
        if (width <= 0 || height <= 0)
            throw error("PixelRegion: dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return mask_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { mask_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    const std::vector<unsigned char>& mask() const { return mask_; }

    std::size_t count() const {
        std::size_t n = 0;
        for (unsigned char m : mask_) n += m;
        return n;
    }

    bool operator==(const PixelRegion& o) const {
        return width_ == o.width_ && height_ == o.height_ && mask_ == o.mask_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<unsigned char> mask_;
};

}  // namespace topbac
