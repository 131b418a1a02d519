#ifndef UIVNAV__IMAGE_HPP_
#define UIVNAV__IMAGE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uivnav
{

/// Row-major interleaved 8-bit image. Row 0 is the top of the frame.
struct Image
{
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
  : width(w), height(h), channels(c),
    data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t & at(int x, int y, int c = 0)
  {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const
  {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {return static_cast<std::size_t>(width) * height;}
  bool same_shape(const Image & o) const
  {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool operator==(const Image &) const = default;
};

std::vector<std::uint8_t> encode_png(const Image & img);
/// Writes a single-channel 0/1 mask as a 1-bit grayscale PNG.
std::vector<std::uint8_t> encode_png_mask(const Image & mask);
Image decode_png(std::span<const std::uint8_t> bytes);

void write_file(const std::string & path, std::span<const std::uint8_t> bytes);
void write_file(const std::string & path, const std::string & text);
std::vector<std::uint8_t> read_file_bytes(const std::string & path);
std::string read_file_text(const std::string & path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string & text);

}  // namespace uivnav

#endif  // UIVNAV__IMAGE_HPP_
