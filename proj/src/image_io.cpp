/*
 * Copyright 2026 The bcond Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bcond/error.hpp"
#include "bcond/image.hpp"

namespace bcond {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("imaging", "cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Exact for 8-bit input: white maps to 1 and pure red to 0.299.
double luminance(unsigned r, unsigned g, unsigned b) {
  return static_cast<double>(299 * r + 587 * g + 114 * b) / 255000.0;
}

GrayImage from_rgb(int width, int height, std::span<const unsigned char> rgb) {
  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = luminance(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return GrayImage(width, height, std::move(pixels));
}

GrayImage decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError("imaging", "cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("imaging", "cannot decode PNG " + path.string() + ": " + message);
  }
  return from_rgb(static_cast<int>(image.width), static_cast<int>(image.height), rgb);
}

struct JpegFailure {
  std::string message;
};

[[noreturn]] void jpeg_fail(j_common_ptr info) {
  char buffer[JMSG_LENGTH_MAX];
  (*info->err->format_message)(info, buffer);
  throw JpegFailure{buffer};
}

// libjpeg reports truncated data as a warning and pads with gray; treat
// warnings as fatal so a damaged file never yields a partial image.
void jpeg_message(j_common_ptr info, int level) {
  if (level < 0) jpeg_fail(info);
}

GrayImage decode_jpeg(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  jpeg_decompress_struct info;
  jpeg_error_mgr errors;
  info.err = jpeg_std_error(&errors);
  errors.error_exit = [](j_common_ptr p) { jpeg_fail(p); };
  errors.emit_message = jpeg_message;
  jpeg_create_decompress(&info);
  try {
    jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&info, TRUE);
    info.out_color_space = info.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&info);
    const int width = static_cast<int>(info.output_width);
    const int height = static_cast<int>(info.output_height);
    const int channels = info.output_components;
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    std::vector<unsigned char> rgb(static_cast<std::size_t>(width) * height * 3);
    while (info.output_scanline < info.output_height) {
      const auto y = info.output_scanline;
      JSAMPROW rows[] = {row.data()};
      jpeg_read_scanlines(&info, rows, 1);
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < 3; ++c) {
          rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
              row[static_cast<std::size_t>(x) * channels + (channels == 1 ? 0 : c)];
        }
      }
    }
    jpeg_finish_decompress(&info);
    jpeg_destroy_decompress(&info);
    return from_rgb(width, height, rgb);
  } catch (const JpegFailure& failure) {
    jpeg_destroy_decompress(&info);
    throw IoError("imaging", "cannot decode JPEG " + path.string() + ": " + failure.message);
  }
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const std::filesystem::path& path, int width, int height, png_uint_32 format,
               const void* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw IoError("imaging", "cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace

GrayImage load_gray(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  static constexpr unsigned char kPng[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes, path);
  }
  throw IoError("imaging", "unsupported or undecodable image " + path.string());
}

void save_png(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> gray(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), gray.begin(), quantize);
  write_png(path, image.width(), image.height(), PNG_FORMAT_GRAY, gray.data());
}

void save_png_rgb(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument("imaging", "RGB buffer size does not match dimensions");
  }
  write_png(path, width, height, PNG_FORMAT_RGB, rgb.data());
}

}  // namespace bcond
