#ifndef UIVNAV__IR_HPP_
#define UIVNAV__IR_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "uivnav/image.hpp"

namespace uivnav
{

using Rgb = std::array<std::uint8_t, 3>;
using ColormapLut = std::array<Rgb, 256>;

/// Depth-to-color table for OOI pixels: piecewise linear through
/// 0 blue, 64 cyan, 128 green, 191 yellow, 255 red; rounded half-up per channel.
/// No entry is gray, so OOI pixels never collide with non-OOI pixels.
const ColormapLut & colormap_lut();
Rgb colormap(std::uint8_t d);
/// Index whose color is exactly rgb, if any.
std::optional<std::uint8_t> colormap_inverse(const Rgb & rgb);

/// 256 lines "index,r,g,b" with a header row.
std::string lut_to_csv(const ColormapLut & lut);
ColormapLut lut_from_csv(const std::string & text);

/// Three-channel composite the policy consumes. Wrapping the image in its own
/// type keeps learned-policy inputs from being confused with raw planes.
struct SegDepthImage
{
  Image image;

  int width() const {return image.width;}
  int height() const {return image.height;}
  bool operator==(const SegDepthImage &) const = default;
};

/// Colormapped depth where seg is set, depth replicated to gray elsewhere.
SegDepthImage compose_segdepth(const Image & seg, const Image & depth);

/// Per-channel block mean, rounded half-up. Output dims must divide input dims.
SegDepthImage downsample(const SegDepthImage & ids, int out_w, int out_h);

/// Recovers the planes from a full-resolution composite: seg from non-gray
/// pixels, depth from the gray level or by LUT inversion.
struct SegDepthPlanes
{
  Image seg;
  Image depth;
};
SegDepthPlanes decompose_segdepth(const SegDepthImage & ids);

}  // namespace uivnav

#endif  // UIVNAV__IR_HPP_
