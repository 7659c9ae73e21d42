// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace affc {

/// Row-major 8-bit RGB raster.
class ImageBuffer {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageBuffer(std::size_t width, std::size_t height);
  /// Fills every pixel with (r, g, b).
  ImageBuffer(std::size_t width, std::size_t height, std::uint8_t r,
              std::uint8_t g, std::uint8_t b);
  /// Adopts `data`; throws StructuralError unless its length is w*h*3.
  ImageBuffer(std::size_t width, std::size_t height,
              std::vector<std::uint8_t> data);

  static ImageBuffer uniform(std::size_t width, std::size_t height,
                             std::uint8_t value) {
    return ImageBuffer(width, height, value, value, value);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t* pixel(std::size_t x, std::size_t y) noexcept {
    return data_.data() + (y * width_ + x) * kChannels;
  }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const noexcept {
    return data_.data() + (y * width_ + x) * kChannels;
  }

  /// Mean Rec.601 luma over all pixels, in [0, 255].
  double mean_luminance() const noexcept;
  /// Mean of all samples, in [0, 255].
  double mean_sample() const noexcept;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> data_;
};

/// Rec.601 luma of one pixel.
inline double luminance(const std::uint8_t* rgb) noexcept {
  return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

/// Encodes losslessly as PNG. Output bytes depend only on the pixels.
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes);

/// Sniffs the signature and decodes PNG or JPEG.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

ImageBuffer read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace affc
