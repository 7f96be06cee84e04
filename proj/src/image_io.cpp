#include "freqdisc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "freqdisc/binary_io.hpp"

namespace freqdisc {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

}  // namespace

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  const int color_type = image.channels() == 1   ? PNG_COLOR_TYPE_GRAY
                         : image.channels() == 3 ? PNG_COLOR_TYPE_RGB
                         : image.channels() == 4 ? PNG_COLOR_TYPE_RGBA
                                                 : -1;
  if (color_type < 0) throw Error("write_png: unsupported channel count");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("write_png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("write_png: libpng init failed");
  }
  const int C = image.channels();
  const int H = image.height();
  const int W = image.width();
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(H) * W * C);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c)
        rows[(static_cast<std::size_t>(y) * W + x) * C + c] = to_byte(image.at(c, y, x));
  std::vector<png_bytep> row_ptrs(H);
  for (int y = 0; y < H; ++y) row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * W * C;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, W, H, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("read_png: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("read_png: libpng init failed");
  }
  std::vector<std::uint8_t> rows;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: libpng error reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  // Normalize to 8-bit gray / RGB / RGBA.
  png_set_strip_16(png);
  png_set_packing(png);
  png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  const int W = static_cast<int>(png_get_image_width(png, info));
  const int H = static_cast<int>(png_get_image_height(png, info));
  const int C = png_get_channels(png, info);
  rows.resize(static_cast<std::size_t>(H) * W * C);
  row_ptrs.resize(H);
  for (int y = 0; y < H; ++y) row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * W * C;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor image(C, H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c)
        image.at(c, y, x) = rows[(static_cast<std::size_t>(y) * W + x) * C + c] / 255.0;
  return image;
}

void write_tensor(const std::filesystem::path& path, const ImageTensor& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_tensor: cannot open " + path.string());
  os.write("FQD1", 4);
  binary::put_u32(os, static_cast<std::uint32_t>(image.channels()));
  binary::put_u32(os, static_cast<std::uint32_t>(image.height()));
  binary::put_u32(os, static_cast<std::uint32_t>(image.width()));
  for (double v : image.data()) binary::put_f32(os, static_cast<float>(v));
  if (!os) throw Error("write_tensor: write failed for " + path.string());
}

ImageTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_tensor: cannot open " + path.string());
  binary::expect_magic(is, "FQD1");
  const auto C = binary::get_u32(is);
  const auto H = binary::get_u32(is);
  const auto W = binary::get_u32(is);
  if (C == 0 || H == 0 || W == 0 || C > 4096 || H > 65536 || W > 65536) {
    throw Error("read_tensor: implausible header in " + path.string());
  }
  std::vector<double> data(static_cast<std::size_t>(C) * H * W);
  for (double& v : data) v = binary::get_f32(is);
  return ImageTensor(static_cast<int>(C), static_cast<int>(H), static_cast<int>(W),
                     std::move(data));
}

}  // namespace freqdisc
