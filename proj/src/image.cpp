// SPDX-License-Identifier: Apache-2.0
#include "affc/image.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "affc/errors.hpp"

namespace affc {

namespace {

std::size_t checked_size(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) {
    throw StructuralError("image dimensions must be at least 1x1, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  return width * height * ImageBuffer::kChannels;
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height)
    : width_(width), height_(height), data_(checked_size(width, height), 0) {}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::uint8_t r,
                         std::uint8_t g, std::uint8_t b)
    : ImageBuffer(width, height) {
  for (std::size_t i = 0; i < data_.size(); i += kChannels) {
    data_[i] = r;
    data_[i + 1] = g;
    data_[i + 2] = b;
  }
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height,
                         std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != checked_size(width, height)) {
    throw StructuralError("image buffer holds " + std::to_string(data_.size()) +
                          " samples, expected " +
                          std::to_string(checked_size(width, height)));
  }
}

double ImageBuffer::mean_luminance() const noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < data_.size(); i += kChannels) {
    sum += luminance(data_.data() + i);
  }
  return sum / static_cast<double>(pixel_count());
}

double ImageBuffer::mean_sample() const noexcept {
  std::uint64_t sum = 0;
  for (auto v : data_) sum += v;
  return static_cast<double>(sum) / static_cast<double>(data_.size());
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width());
  desc.height = static_cast<png_uint_32>(image.height());
  desc.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  const auto* pixels = image.data().data();
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw ImageIoError(std::string("png encode: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, pixels, 0,
                                 nullptr)) {
    throw ImageIoError(std::string("png encode: ") + desc.message);
  }
  out.resize(size);
  return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("png decode: ") + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(desc));
  // Alpha is composited over black.
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&desc, &background, data.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw ImageIoError(std::string("png decode: ") + desc.message);
  }
  return ImageBuffer(desc.width, desc.height, std::move(data));
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.message[0] = '\0';

  // Everything that owns memory lives outside the setjmp scope.
  std::vector<std::uint8_t> data;
  std::size_t width = 0;
  std::size_t height = 0;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageIoError(std::string("jpeg decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  data.resize(width * height * ImageBuffer::kChannels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = data.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                     width * ImageBuffer::kChannels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return ImageBuffer(width, height, std::move(data));
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngSig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngSig, 4) == 0) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 &&
      bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw ImageIoError("unrecognized image format");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageBuffer read_image(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("cannot write " + path.string());
}

}  // namespace affc
