#include "dca/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dca {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

void write_png(const std::string& path, const Tensor<std::uint8_t>& img, bool rgb) {
  const int h = rgb ? img.dim(1) : img.dim(0);
  const int w = rgb ? img.dim(2) : img.dim(1);
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failure: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * (rgb ? 3 : 1));
  for (int i = 0; i < h; ++i) {
    if (rgb) {
      for (int j = 0; j < w; ++j)
        for (int c = 0; c < 3; ++c)
          row[static_cast<std::size_t>(j) * 3 + c] = img.v[(static_cast<std::size_t>(c) * h + i) * w + j];
    } else {
      for (int j = 0; j < w; ++j) row[j] = img.v[static_cast<std::size_t>(i) * w + j];
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<std::uint8_t> read_png(const std::string& path, bool rgb) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open for reading: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failure: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (rgb && (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)) png_set_gray_to_rgb(png);
  if (!rgb && (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE))
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  Tensor<std::uint8_t> out(rgb ? std::vector<int>{3, h, w} : std::vector<int>{h, w});
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * (rgb ? 3 : 1));
  for (int i = 0; i < h; ++i) {
    png_read_row(png, row.data(), nullptr);
    if (rgb) {
      for (int j = 0; j < w; ++j)
        for (int c = 0; c < 3; ++c)
          out.v[(static_cast<std::size_t>(c) * h + i) * w + j] = row[static_cast<std::size_t>(j) * 3 + c];
    } else {
      for (int j = 0; j < w; ++j) out.v[static_cast<std::size_t>(i) * w + j] = row[j];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_gray_png(const std::string& path, const Tensor<std::uint8_t>& img) {
  if (img.rank() != 2) throw std::invalid_argument("write_gray_png: rank-2 image required");
  write_png(path, img, false);
}

void write_rgb_png(const std::string& path, const Tensor<std::uint8_t>& img) {
  if (img.rank() != 3 || img.dim(0) != 3) throw std::invalid_argument("write_rgb_png: [3, h, w] image required");
  write_png(path, img, true);
}

Tensor<std::uint8_t> read_gray_png(const std::string& path) { return read_png(path, false); }
Tensor<std::uint8_t> read_rgb_png(const std::string& path) { return read_png(path, true); }

Tensor<std::uint8_t> mask_to_gray(const Tensor<float>& plane) {
  if (plane.rank() != 2) throw std::invalid_argument("mask_to_gray: rank-2 plane required");
  Tensor<std::uint8_t> out(plane.shape);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    float x = plane.v[i];
    if (x < 0.f) x = 0.f;
    if (x > 1.f) x = 1.f;
    out.v[i] = static_cast<std::uint8_t>(x * 255.f + 0.5f);
  }
  return out;
}

}  // namespace dca
