/*
 * Copyright 2026 The typeforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TYPEFORGE_IMAGE_IO_HPP_
#define TYPEFORGE_IMAGE_IO_HPP_

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"

namespace typeforge {

namespace detail {

// libjpeg's default error handler calls exit(); route it through longjmp so
// decode failures surface as exceptions instead.
struct JpegErrorGuard {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};
};

inline void jpeg_error_exit_fn(j_common_ptr cinfo) {
  auto* guard = reinterpret_cast<JpegErrorGuard*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, guard->message);
  std::longjmp(guard->jump, 1);
}

inline void jpeg_silent_output_fn(j_common_ptr) {}

enum class FileKind { Png, Jpeg, Unknown };

inline FileKind sniff_file_kind(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(magic), 4);
  if (in.gcount() >= 4 && magic[0] == 0x89 && magic[1] == 'P' &&
      magic[2] == 'N' && magic[3] == 'G') {
    return FileKind::Png;
  }
  if (in.gcount() >= 2 && magic[0] == 0xff && magic[1] == 0xd8) {
    return FileKind::Jpeg;
  }
  return FileKind::Unknown;
}

inline void check_exists(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFileError("missing image file: " + path.string());
  }
}

// gray == true reads a single channel, otherwise interleaved RGB.
inline std::vector<std::uint8_t> read_png_pixels(
    const std::filesystem::path& path, bool gray, int& width, int& height) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("png read failed: " + path.string() + ": " + image.message);
  }
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("png decode failed: " + path.string() + ": " +
                  image.message);
  }
  return buffer;
}

inline bool png_is_gray(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("png read failed: " + path.string() + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png_image_free(&image);
  return gray;
}

// gray == true decodes to one channel, otherwise RGB.
inline std::vector<std::uint8_t> read_jpeg_pixels(const std::uint8_t* bytes,
                                                  std::size_t size, bool gray,
                                                  int& width, int& height) {
  jpeg_decompress_struct cinfo;
  JpegErrorGuard guard;
  cinfo.err = jpeg_std_error(&guard.pub);
  guard.pub.error_exit = jpeg_error_exit_fn;
  guard.pub.output_message = jpeg_silent_output_fn;
  std::vector<std::uint8_t> out;
  if (setjmp(guard.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(std::string("jpeg decode failed: ") + guard.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(bytes),
               static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  const int channels = gray ? 1 : 3;
  out.resize(static_cast<std::size_t>(width) * height * channels);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

// Baseline JPEG encode into memory. channels is 1 or 3.
inline std::vector<std::uint8_t> encode_jpeg(const std::uint8_t* pixels,
                                             int width, int height,
                                             int channels, int quality) {
  jpeg_compress_struct cinfo;
  JpegErrorGuard guard;
  cinfo.err = jpeg_std_error(&guard.pub);
  guard.pub.error_exit = jpeg_error_exit_fn;
  guard.pub.output_message = jpeg_silent_output_fn;
  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  if (setjmp(guard.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (mem) free(mem);
    throw IoError(std::string("jpeg encode failed: ") + guard.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = channels;
  cinfo.in_color_space = channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row =
        const_cast<std::uint8_t*>(pixels) + cinfo.next_scanline * stride;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(mem, mem + mem_size);
  free(mem);
  return out;
}

}  // namespace detail

inline RgbImage load_rgb(const std::filesystem::path& path) {
  detail::check_exists(path);
  const detail::FileKind kind = detail::sniff_file_kind(path);
  RgbImage img;
  if (kind == detail::FileKind::Png) {
    img.data = detail::read_png_pixels(path, false, img.width, img.height);
  } else if (kind == detail::FileKind::Jpeg) {
    const auto bytes = detail::read_file_bytes(path);
    img.data = detail::read_jpeg_pixels(bytes.data(), bytes.size(), false,
                                        img.width, img.height);
  } else {
    throw IoError("unsupported image format: " + path.string());
  }
  return img;
}

// A file that is already single-channel loads untouched; color files go
// through to_grayscale so the BT.601 rule is the only conversion in play.
inline GrayImage load_gray(const std::filesystem::path& path) {
  detail::check_exists(path);
  const detail::FileKind kind = detail::sniff_file_kind(path);
  if (kind == detail::FileKind::Png) {
    if (detail::png_is_gray(path)) {
      GrayImage img;
      img.data = detail::read_png_pixels(path, true, img.width, img.height);
      return img;
    }
    return to_grayscale(load_rgb(path));
  }
  if (kind == detail::FileKind::Jpeg) {
    const auto bytes = detail::read_file_bytes(path);
    jpeg_decompress_struct probe;
    detail::JpegErrorGuard guard;
    probe.err = jpeg_std_error(&guard.pub);
    guard.pub.error_exit = detail::jpeg_error_exit_fn;
    guard.pub.output_message = detail::jpeg_silent_output_fn;
    bool is_gray = false;
    if (setjmp(guard.jump)) {
      jpeg_destroy_decompress(&probe);
      throw IoError(std::string("jpeg header failed: ") + guard.message);
    }
    jpeg_create_decompress(&probe);
    jpeg_mem_src(&probe, const_cast<unsigned char*>(bytes.data()),
                 static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&probe, TRUE);
    is_gray = probe.jpeg_color_space == JCS_GRAYSCALE;
    jpeg_destroy_decompress(&probe);
    if (is_gray) {
      GrayImage img;
      img.data = detail::read_jpeg_pixels(bytes.data(), bytes.size(), true,
                                          img.width, img.height);
      return img;
    }
    RgbImage rgb;
    rgb.data = detail::read_jpeg_pixels(bytes.data(), bytes.size(), false,
                                        rgb.width, rgb.height);
    return to_grayscale(rgb);
  }
  throw IoError("unsupported image format: " + path.string());
}

inline void save_png(const std::filesystem::path& path, const GrayImage& img) {
  if (img.empty()) throw ValidationError("save_png: empty image");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0,
                               img.data.data(), 0, nullptr)) {
    throw IoError("png write failed: " + path.string() + ": " + image.message);
  }
}

inline void save_png(const std::filesystem::path& path, const RgbImage& img) {
  if (img.empty()) throw ValidationError("save_png: empty image");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0,
                               img.data.data(), 0, nullptr)) {
    throw IoError("png write failed: " + path.string() + ": " + image.message);
  }
}

// Baseline JPEG compress/decompress cycle in memory. quality in [1, 100].
inline RgbImage jpeg_roundtrip(const RgbImage& img, int quality) {
  if (img.empty()) throw ValidationError("jpeg_roundtrip: empty image");
  if (quality < 1 || quality > 100) {
    throw ValidationError("jpeg_roundtrip: quality out of range");
  }
  const auto bytes =
      detail::encode_jpeg(img.data.data(), img.width, img.height, 3, quality);
  RgbImage out;
  out.data = detail::read_jpeg_pixels(bytes.data(), bytes.size(), false,
                                      out.width, out.height);
  return out;
}

inline GrayImage jpeg_roundtrip(const GrayImage& img, int quality) {
  if (img.empty()) throw ValidationError("jpeg_roundtrip: empty image");
  if (quality < 1 || quality > 100) {
    throw ValidationError("jpeg_roundtrip: quality out of range");
  }
  const auto bytes =
      detail::encode_jpeg(img.data.data(), img.width, img.height, 1, quality);
  GrayImage out;
  out.data = detail::read_jpeg_pixels(bytes.data(), bytes.size(), true,
                                      out.width, out.height);
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_IMAGE_IO_HPP_
