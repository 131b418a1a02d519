#ifndef UIVNAV__SENSOR_HPP_
#define UIVNAV__SENSOR_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/image.hpp"
#include "uivnav/world.hpp"

namespace uivnav
{

struct CameraModel
{
  double hfov = 80.0;            // degrees
  double vfov = 64.0;            // degrees
  int image_w = 256;
  int image_h = 256;
  double boresight_tilt = -30.0; // degrees relative to body pitch
  double max_range = 20.0;       // meters

  void validate() const;
  bool operator==(const CameraModel &) const = default;
};

nlohmann::json to_json(const CameraModel & cam);
CameraModel camera_from_json(const nlohmann::json & j, CameraModel base = {});

/// Per-step sensor bundle. seg is a 0/1 mask, depth an 8-bit proximity image
/// (255 = zero range, 0 = at or beyond max range), segdepth the composed
/// 3-channel image (empty until the ir stage fills it).
struct Frame
{
  Image seg;
  Image depth;
  Image segdepth;
};

struct Vec3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline constexpr std::uint32_t kNoCell = std::numeric_limits<std::uint32_t>::max();

struct RayHit
{
  bool hit = false;
  double range = 0.0;
  std::uint32_t cell = kNoCell;
};

/// Heightfield ray marcher. Samples the ray at t = k * cell_size / 2 and
/// refines the first hit with one bisection; the reported range is the middle
/// of the final bracket (error <= cell_size / 8). Blocks of cells whose maximum
/// height lies below the ray are skipped without changing which samples hit.
class RayCaster
{
public:
  explicit RayCaster(const WorldMap & map);

  const WorldMap & map() const {return map_;}
  RayHit cast(const Vec3 & origin, const Vec3 & dir, double max_range) const;
  /// Same sampling without block skipping. Used to cross-check cast().
  RayHit cast_uniform(const Vec3 & origin, const Vec3 & dir, double max_range) const;

private:
  bool sample(const Vec3 & o, const Vec3 & d, double t, std::uint32_t & cell, bool & inside) const;
  RayHit refine(const Vec3 & o, const Vec3 & d, double t_hit, std::uint32_t cell_hit) const;

  // Max-height pyramids over square blocks of cells, coarsest first.
  struct BlockLevel
  {
    int size;
    int cols;
    int rows;
    std::vector<float> max;
  };
  const WorldMap & map_;
  double step_;
  std::vector<BlockLevel> levels_;
};

/// World-frame unit ray of pixel (u, v); u grows to the right, v downwards.
Vec3 pixel_ray(const RobotPose & pose, const CameraModel & cam, int u, int v);

/// Result of one render: the seg/depth planes plus the grid cell seen by each
/// pixel (kNoCell where nothing is hit within range).
struct RenderOutput
{
  Frame frame;
  std::vector<std::uint32_t> pixel_cells;
};

/// Renders frames for one map and camera; holds the caster and per-pixel
/// camera-frame directions so repeated renders are cheap.
class Sensor
{
public:
  Sensor(const WorldMap & map, const CameraModel & cam);

  const CameraModel & camera() const {return cam_;}
  const WorldMap & map() const {return caster_.map();}

  RenderOutput render_full(const RobotPose & pose) const;
  Frame render(const RobotPose & pose) const {return render_full(pose).frame;}
  /// Sorted, unique flat indices of the cells visible in the frame at pose.
  std::vector<std::uint32_t> footprint(const RobotPose & pose) const;

private:
  void check_pose(const RobotPose & pose) const;

  RayCaster caster_;
  CameraModel cam_;
  std::vector<double> xn_;
  std::vector<double> yn_;
};

Frame render(const WorldMap & map, const RobotPose & pose, const CameraModel & cam);
std::vector<std::uint32_t> ground_footprint(
  const WorldMap & map, const RobotPose & pose, const CameraModel & cam);

/// Proximity encoding: round(255 * max(0, 1 - r / max_range)), half-up.
std::uint8_t encode_proximity(double range, double max_range);
/// Inverse of encode_proximity up to quantization.
double decode_proximity(std::uint8_t value, double max_range);

/// Writes <stem>_seg.png (1-bit), <stem>_depth.png (8-bit gray),
/// <stem>_segdepth.png (RGB) and <stem>.json (pose and camera) into dir.
void export_frame(
  const Frame & frame, const RobotPose & pose, const CameraModel & cam,
  const std::string & dir, const std::string & stem);

}  // namespace uivnav

#endif  // UIVNAV__SENSOR_HPP_
