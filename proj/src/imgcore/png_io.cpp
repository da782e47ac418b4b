// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "imagine/error.hpp"

namespace imagine {

namespace {

enum class Layout { Rgba8, Gray8, Gray16 };

thread_local char g_png_message[256];

// Exceptions must not cross libpng's C frames; record and longjmp instead.
void on_png_error(png_structp png, png_const_charp msg) {
  std::snprintf(g_png_message, sizeof g_png_message, "%s", msg);
  png_longjmp(png, 1);
}

[[noreturn]] void raise_png() { throw Error(ErrorCode::Io, std::string("png: ") + g_png_message); }

void on_png_warning(png_structp, png_const_charp) {}

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes.size()) png_error(png, "truncated stream");
  std::memcpy(data, cur->bytes.data() + cur->pos, len);
  cur->pos += len;
}

Bytes encode(int width, int height, Layout layout, const std::vector<const std::uint8_t*>& rows) {
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!png) throw Error(ErrorCode::Io, "png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise_png();
  }
  png_set_write_fn(png, &out, write_cb, flush_cb);
  const int color = layout == Layout::Rgba8 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_GRAY;
  const int depth = layout == Layout::Gray16 ? 16 : 8;
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Fast settings: traces encode every rendered frame.
  png_set_compression_level(png, 1);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_write_info(png, info);
  for (const auto* row : rows) png_write_row(png, const_cast<png_bytep>(row));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int depth = 0;
  std::vector<std::uint8_t> data;
};

Decoded decode(std::span<const std::uint8_t> bytes, bool want_rgba) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::Io, "png: bad signature");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!png) throw Error(ErrorCode::Io, "png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes};
  Decoded d;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise_png();
  }
  png_set_read_fn(png, &cursor, read_cb);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (want_rgba) {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
  } else {
    if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian rows
  }
  png_read_update_info(png, info);
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.channels = png_get_channels(png, info);
  d.depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  d.data.resize(stride * static_cast<std::size_t>(d.height));
  rows.resize(static_cast<std::size_t>(d.height));
  for (int y = 0; y < d.height; ++y) rows[static_cast<std::size_t>(y)] = d.data.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

Bytes encode_png(const Image& img) {
  std::vector<const std::uint8_t*> rows;
  rows.reserve(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) rows.push_back(img.pixel(0, y));
  return encode(img.width(), img.height(), Layout::Rgba8, rows);
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, true);
  if (d.channels != 4 || d.depth != 8) throw Error(ErrorCode::Io, "png: unsupported layout");
  Image img(d.width, d.height);
  std::memcpy(img.bytes().data(), d.data.data(), img.bytes().size());
  return img;
}

Bytes encode_mask_png(const Mask& mask) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(mask.width()) * mask.height());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.bytes()[i] ? 255 : 0;
  std::vector<const std::uint8_t*> rows;
  for (int y = 0; y < mask.height(); ++y) rows.push_back(buf.data() + static_cast<std::size_t>(y) * mask.width());
  return encode(mask.width(), mask.height(), Layout::Gray8, rows);
}

Mask decode_mask_png(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, false);
  if (d.channels != 1) throw Error(ErrorCode::Io, "png: mask must be single channel");
  Mask m(d.width, d.height);
  const std::size_t bpp = d.depth == 16 ? 2 : 1;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * d.width + x) * bpp;
      const bool on = d.data[i] != 0 || (bpp == 2 && d.data[i + 1] != 0);
      m.set(x, y, on);
    }
  }
  return m;
}

Bytes encode_label_png(const LabelMap& labels) {
  // PNG stores 16-bit samples big-endian.
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(labels.width()) * labels.height() * 2);
  for (std::size_t i = 0; i < labels.values().size(); ++i) {
    const std::uint32_t v = labels.values()[i];
    if (v > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "label id exceeds 16 bits");
    buf[2 * i] = static_cast<std::uint8_t>(v >> 8);
    buf[2 * i + 1] = static_cast<std::uint8_t>(v & 0xFF);
  }
  std::vector<const std::uint8_t*> rows;
  for (int y = 0; y < labels.height(); ++y) {
    rows.push_back(buf.data() + static_cast<std::size_t>(y) * labels.width() * 2);
  }
  return encode(labels.width(), labels.height(), Layout::Gray16, rows);
}

LabelMap decode_label_png(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, false);
  if (d.channels != 1) throw Error(ErrorCode::Io, "png: label map must be single channel");
  LabelMap labels(d.width, d.height);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * d.width + x;
      const std::uint32_t v = d.depth == 16 ? (d.data[2 * i] | (d.data[2 * i + 1] << 8)) : d.data[i];
      labels.set(x, y, v);
    }
  }
  return labels;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace imagine
