#include "uivnav/image.hpp"

#include <png.h>

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "uivnav/common.hpp"

namespace uivnav
{

namespace
{

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
  auto * out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_throw(png_structp, png_const_charp msg)
{
  throw ParseError(std::string("png: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

struct ReadCursor
{
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length)
{
  auto * cur = static_cast<ReadCursor *>(png_get_io_ptr(png));
  if (cur->pos + length > cur->bytes.size()) {
    png_error(png, "truncated data");
  }
  std::memcpy(out, cur->bytes.data() + cur->pos, length);
  cur->pos += length;
}

std::vector<std::uint8_t> encode(const Image & img, int bit_depth)
{
  if (img.width <= 0 || img.height <= 0) {
    throw DimensionError("png: empty image");
  }
  int color_type;
  switch (img.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw DimensionError("png: unsupported channel count");
  }

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(
    PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(
      png, info, img.width, img.height, bit_depth, color_type,
      PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> packed;
    for (int y = 0; y < img.height; ++y) {
      const std::uint8_t * row = img.data.data() + y * row_bytes;
      if (bit_depth == 1) {
        packed.assign((img.width + 7) / 8, 0);
        for (int x = 0; x < img.width; ++x) {
          if (row[x]) {
            packed[x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
          }
        }
        png_write_row(png, packed.data());
      } else {
        png_write_row(png, const_cast<png_bytep>(row));
      }
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image & img)
{
  return encode(img, 8);
}

std::vector<std::uint8_t> encode_png_mask(const Image & mask)
{
  if (mask.channels != 1) {
    throw DimensionError("png: mask must have one channel");
  }
  return encode(mask, 1);
}

Image decode_png(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ParseError("png: bad signature");
  }
  png_structp png = png_create_read_struct(
    PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  Image img;
  try {
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    const bool one_bit_gray = color_type == PNG_COLOR_TYPE_GRAY && bit_depth == 1;
    if (bit_depth == 16) {
      png_set_strip_16(png);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
      png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_packing(png);
    }
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.data.assign(img.pixel_count() * img.channels, 0);
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) {
      png_read_row(png, img.data.data() + y * row_bytes, nullptr);
    }
    png_read_end(png, nullptr);
    if (one_bit_gray) {
      // png_set_packing leaves 0/1 samples; keep them as a 0/1 mask.
      for (auto & v : img.data) {
        v = v ? 1 : 0;
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_file(const std::string & path, std::span<const std::uint8_t> bytes)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw IoError("cannot open for writing: " + path);
  }
  f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw IoError("write failed: " + path);
  }
}

void write_file(const std::string & path, const std::string & text)
{
  write_file(
    path, std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::string & path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open for reading: " + path);
  }
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::string & path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open for reading: " + path);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace
{
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c)
{
  if (c >= 'A' && c <= 'Z') {return c - 'A';}
  if (c >= 'a' && c <= 'z') {return c - 'a' + 26;}
  if (c >= '0' && c <= '9') {return c - '0' + 52;}
  if (c == '+') {return 62;}
  if (c == '/') {return 63;}
  return -1;
}
}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string & text)
{
  if (text.size() % 4 != 0) {
    throw ParseError("base64: length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) {
          throw ParseError("base64: misplaced padding");
        }
        v[k] = 0;
        ++pad;
      } else {
        if (pad) {
          throw ParseError("base64: data after padding");
        }
        v[k] = b64_value(c);
        if (v[k] < 0) {
          throw ParseError("base64: invalid character");
        }
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) {out.push_back(static_cast<std::uint8_t>(w >> 8));}
    if (pad < 1) {out.push_back(static_cast<std::uint8_t>(w));}
  }
  return out;
}

}  // namespace uivnav
