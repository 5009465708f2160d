#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "imvote/errors.hpp"

namespace imvote {

// Row-major 8-bit RGB buffer. Pixel (u, v) sits at column u, row v; integer
// coordinates are pixel centers.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3, 0) {
    if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
  }
  RgbImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
      throw FormatError("RGB buffer size does not match width * height * 3");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  std::uint8_t at(int u, int v, int channel) const {
    return data_[(static_cast<std::size_t>(v) * width_ + u) * 3 + channel];
  }
  void set(int u, int v, std::array<std::uint8_t, 3> rgb) {
    const std::size_t base = (static_cast<std::size_t>(v) * width_ + u) * 3;
    data_[base] = rgb[0];
    data_[base + 1] = rgb[1];
    data_[base + 2] = rgb[2];
  }
  bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u <= width_ - 1 && v <= height_ - 1;
  }

  // Luma in [0, 255].
  std::vector<double> grayscale() const {
    std::vector<double> out(static_cast<std::size_t>(width_) * height_);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = 0.299 * data_[3 * i] + 0.587 * data_[3 * i + 1] + 0.114 * data_[3 * i + 2];
    }
    return out;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace imvote
