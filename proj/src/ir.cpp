#include "uivnav/ir.hpp"

#include <algorithm>
#include <sstream>

#include "uivnav/common.hpp"

namespace uivnav
{

namespace
{

struct Anchor
{
  int index;
  Rgb color;
};

constexpr std::array<Anchor, 5> kAnchors{{
  {0, {0, 0, 255}},
  {64, {0, 255, 255}},
  {128, {0, 255, 0}},
  {191, {255, 255, 0}},
  {255, {255, 0, 0}},
}};

ColormapLut build_lut()
{
  ColormapLut lut{};
  for (std::size_t s = 0; s + 1 < kAnchors.size(); ++s) {
    const Anchor & a = kAnchors[s];
    const Anchor & b = kAnchors[s + 1];
    const int span = b.index - a.index;
    for (int d = a.index; d <= b.index; ++d) {
      for (int c = 0; c < 3; ++c) {
        // value = a + (b - a) * (d - a.index) / span, rounded half-up, in
        // exact integer arithmetic. The numerator is never negative.
        const int num = a.color[c] * span + (b.color[c] - a.color[c]) * (d - a.index);
        lut[d][c] = static_cast<std::uint8_t>((2 * num + span) / (2 * span));
      }
    }
  }
  return lut;
}

}  // namespace

const ColormapLut & colormap_lut()
{
  static const ColormapLut lut = build_lut();
  return lut;
}

Rgb colormap(std::uint8_t d)
{
  return colormap_lut()[d];
}

std::optional<std::uint8_t> colormap_inverse(const Rgb & rgb)
{
  static const auto table = [] {
      // Sorted (24-bit color, index) pairs; the LUT is injective.
      std::array<std::pair<std::uint32_t, std::uint8_t>, 256> t{};
      const auto & lut = colormap_lut();
      for (int d = 0; d < 256; ++d) {
        t[d] = {(lut[d][0] << 16u) | (lut[d][1] << 8u) | lut[d][2], static_cast<std::uint8_t>(d)};
      }
      std::sort(t.begin(), t.end());
      return t;
    }();
  const std::uint32_t key = (rgb[0] << 16u) | (rgb[1] << 8u) | rgb[2];
  auto it = std::lower_bound(
    table.begin(), table.end(), std::pair<std::uint32_t, std::uint8_t>{key, 0});
  if (it != table.end() && it->first == key) {
    return it->second;
  }
  return std::nullopt;
}

std::string lut_to_csv(const ColormapLut & lut)
{
  std::ostringstream out;
  out << "index,r,g,b\n";
  for (int d = 0; d < 256; ++d) {
    out << d << ',' << int(lut[d][0]) << ',' << int(lut[d][1]) << ',' << int(lut[d][2]) << '\n';
  }
  return out.str();
}

ColormapLut lut_from_csv(const std::string & text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,r,g,b", 0) != 0) {
    throw ParseError("lut csv: missing header 'index,r,g,b'");
  }
  ColormapLut lut{};
  std::array<bool, 256> seen{};
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    int v[4];
    char comma;
    if (!(ls >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3])) {
      throw ParseError("lut csv: malformed row: " + line);
    }
    for (int k = 0; k < 4; ++k) {
      if (v[k] < 0 || v[k] > 255) {
        throw ParseError("lut csv: value out of range in row: " + line);
      }
    }
    if (seen[v[0]]) {
      throw ParseError("lut csv: duplicate index " + std::to_string(v[0]));
    }
    seen[v[0]] = true;
    lut[v[0]] = {static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2]),
      static_cast<std::uint8_t>(v[3])};
    ++rows;
  }
  if (rows != 256) {
    throw ParseError("lut csv: expected 256 rows, got " + std::to_string(rows));
  }
  return lut;
}

SegDepthImage compose_segdepth(const Image & seg, const Image & depth)
{
  if (seg.channels != 1 || depth.channels != 1) {
    throw DimensionError("compose_segdepth: seg and depth must be single-channel");
  }
  if (seg.width != depth.width || seg.height != depth.height) {
    throw DimensionError("compose_segdepth: seg and depth dimensions differ");
  }
  const auto & lut = colormap_lut();
  SegDepthImage out{Image(depth.width, depth.height, 3)};
  const std::size_t n = depth.pixel_count();
  std::uint8_t * dst = out.image.data.data();
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint8_t d = depth.data[p];
    // The OOI and non-OOI branches have disjoint support, so their sum is a
    // per-pixel select.
    if (seg.data[p]) {
      dst[3 * p + 0] = lut[d][0];
      dst[3 * p + 1] = lut[d][1];
      dst[3 * p + 2] = lut[d][2];
    } else {
      dst[3 * p + 0] = d;
      dst[3 * p + 1] = d;
      dst[3 * p + 2] = d;
    }
  }
  return out;
}

SegDepthImage downsample(const SegDepthImage & ids, int out_w, int out_h)
{
  const Image & in = ids.image;
  if (out_w <= 0 || out_h <= 0 || in.width % out_w != 0 || in.height % out_h != 0) {
    throw DimensionError("downsample: output dimensions must divide input dimensions");
  }
  const int bx = in.width / out_w;
  const int by = in.height / out_h;
  const int count = bx * by;
  const int ch = in.channels;
  SegDepthImage out{Image(out_w, out_h, ch)};
  std::vector<int> acc(static_cast<std::size_t>(out_w) * ch);
  for (int oy = 0; oy < out_h; ++oy) {
    std::fill(acc.begin(), acc.end(), 0);
    for (int y = oy * by; y < (oy + 1) * by; ++y) {
      const std::uint8_t * row = in.data.data() + static_cast<std::size_t>(y) * in.width * ch;
      for (int x = 0; x < in.width; ++x) {
        const int ox = x / bx;
        for (int c = 0; c < ch; ++c) {
          acc[ox * ch + c] += row[x * ch + c];
        }
      }
    }
    for (int ox = 0; ox < out_w; ++ox) {
      for (int c = 0; c < ch; ++c) {
        out.image.at(ox, oy, c) = static_cast<std::uint8_t>((2 * acc[ox * ch + c] + count) / (2 * count));
      }
    }
  }
  return out;
}

SegDepthPlanes decompose_segdepth(const SegDepthImage & ids)
{
  const Image & in = ids.image;
  if (in.channels != 3) {
    throw DimensionError("decompose_segdepth: expected a 3-channel image");
  }
  SegDepthPlanes out{Image(in.width, in.height, 1), Image(in.width, in.height, 1)};
  for (std::size_t p = 0; p < in.pixel_count(); ++p) {
    const Rgb rgb{in.data[3 * p], in.data[3 * p + 1], in.data[3 * p + 2]};
    if (rgb[0] == rgb[1] && rgb[1] == rgb[2]) {
      out.depth.data[p] = rgb[0];
      continue;
    }
    const auto d = colormap_inverse(rgb);
    if (!d) {
      throw ParseError("decompose_segdepth: color is neither gray nor in the colormap");
    }
    out.seg.data[p] = 1;
    out.depth.data[p] = *d;
  }
  return out;
}

}  // namespace uivnav
