#include "uivnav/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "uivnav/common.hpp"
#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

void CameraModel::validate() const
{
  if (!(hfov > 0.0 && hfov < 180.0) || !(vfov > 0.0 && vfov < 180.0)) {
    throw ParameterError("camera: fov must be in (0, 180) degrees");
  }
  if (image_w < 16 || image_h < 16) {
    throw ParameterError("camera: image dimensions must be >= 16");
  }
  if (!(max_range > 0.0)) {
    throw ParameterError("camera: max_range must be positive");
  }
  if (!std::isfinite(boresight_tilt)) {
    throw ParameterError("camera: boresight_tilt must be finite");
  }
}

json to_json(const CameraModel & cam)
{
  return {
    {"hfov", cam.hfov}, {"vfov", cam.vfov}, {"image_w", cam.image_w},
    {"image_h", cam.image_h}, {"boresight_tilt", cam.boresight_tilt},
    {"max_range", cam.max_range},
  };
}

CameraModel camera_from_json(const json & j, CameraModel c)
{
  JsonFields f(j, "camera");
  f.optional("hfov", c.hfov);
  f.optional("vfov", c.vfov);
  f.optional("image_w", c.image_w);
  f.optional("image_h", c.image_h);
  f.optional("boresight_tilt", c.boresight_tilt);
  f.optional("max_range", c.max_range);
  f.finish();
  c.validate();
  return c;
}

std::uint8_t encode_proximity(double range, double max_range)
{
  const double v = 255.0 * std::max(0.0, 1.0 - range / max_range);
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(v + 0.5)));
}

double decode_proximity(std::uint8_t value, double max_range)
{
  return max_range * (1.0 - value / 255.0);
}

// ---------------------------------------------------------------------------

RayCaster::RayCaster(const WorldMap & map)
: map_(map), step_(map.cell_size() / 2.0)
{
  for (int size : {64, 8}) {
    BlockLevel level{size, (map.cols() + size - 1) / size, (map.rows() + size - 1) / size, {}};
    level.max.assign(static_cast<std::size_t>(level.cols) * level.rows, 0.0f);
    const auto & h = map.heights();
    for (int r = 0; r < map.rows(); ++r) {
      float * brow = level.max.data() + static_cast<std::size_t>(r / size) * level.cols;
      const float * hrow = h.data() + static_cast<std::size_t>(r) * map.cols();
      for (int c = 0; c < map.cols(); ++c) {
        float & m = brow[c / size];
        m = std::max(m, hrow[c]);
      }
    }
    levels_.push_back(std::move(level));
  }
}

bool RayCaster::sample(
  const Vec3 & o, const Vec3 & d, double t, std::uint32_t & cell, bool & inside) const
{
  const double px = o.x + t * d.x;
  const double py = o.y + t * d.y;
  const double pz = o.z + t * d.z;
  if (!(px >= 0.0 && px < map_.width_m() && py >= 0.0 && py < map_.height_m())) {
    inside = false;
    return false;
  }
  inside = true;
  const double inv = 1.0 / map_.cell_size();
  const int col = std::min(static_cast<int>(px * inv), map_.cols() - 1);
  const int row = std::min(static_cast<int>(py * inv), map_.rows() - 1);
  cell = static_cast<std::uint32_t>(map_.flat(col, row));
  return pz <= map_.heights()[cell];
}

RayHit RayCaster::refine(const Vec3 & o, const Vec3 & d, double t_hit, std::uint32_t cell_hit) const
{
  const double t_mid = t_hit - 0.5 * step_;
  std::uint32_t cell_mid = kNoCell;
  bool inside = false;
  if (t_mid > 0.0 && sample(o, d, t_mid, cell_mid, inside) && inside) {
    return {true, t_mid - 0.25 * step_, cell_mid};
  }
  return {true, t_hit - 0.25 * step_, cell_hit};
}

RayHit RayCaster::cast_uniform(const Vec3 & o, const Vec3 & d, double max_range) const
{
  const long k_max = static_cast<long>(std::floor(max_range / step_ + 1e-9));
  for (long k = 1; k <= k_max; ++k) {
    const double t = static_cast<double>(k) * step_;
    std::uint32_t cell = kNoCell;
    bool inside = false;
    const bool hit = sample(o, d, t, cell, inside);
    if (!inside) {
      return {};
    }
    if (hit) {
      return refine(o, d, t, cell);
    }
  }
  return {};
}

RayHit RayCaster::cast(const Vec3 & o, const Vec3 & d, double max_range) const
{
  const long k_max = static_cast<long>(std::floor(max_range / step_ + 1e-9));
  const double cell = map_.cell_size();
  const double inv_cell = 1.0 / cell;
  const double width = map_.width_m();
  const double height = map_.height_m();
  const int cols = map_.cols();
  const int rows = map_.rows();
  const float * heights = map_.heights().data();
  const double inv_dx = d.x != 0.0 ? 1.0 / d.x : 0.0;
  const double inv_dy = d.y != 0.0 ? 1.0 / d.y : 0.0;
  const double inv_dz = d.z != 0.0 ? 1.0 / d.z : 0.0;

  long k = 1;
  while (k <= k_max) {
    const double t = static_cast<double>(k) * step_;
    const double px = o.x + t * d.x;
    const double py = o.y + t * d.y;
    const double pz = o.z + t * d.z;
    if (!(px >= 0.0 && px < width && py >= 0.0 && py < height)) {
      return {};
    }
    const int col = std::min(static_cast<int>(px * inv_cell), cols - 1);
    const int row = std::min(static_cast<int>(py * inv_cell), rows - 1);
    const auto idx = static_cast<std::uint32_t>(static_cast<std::size_t>(row) * cols + col);
    if (pz <= heights[idx]) {
      return refine(o, d, t, idx);
    }

    // Find the coarsest block around the sample that lies entirely below it.
    // Samples strictly before t_safe stay in that block and above its tallest
    // cell, so none of them can hit.
    double t_safe = -1.0;
    for (const auto & level : levels_) {
      const int bc = col / level.size;
      const int br = row / level.size;
      const float bmax = level.max[static_cast<std::size_t>(br) * level.cols + bc];
      if (!(pz > bmax)) {
        continue;
      }
      const double block_m = level.size * cell;
      t_safe = max_range;
      if (d.x > 0.0) {
        t_safe = std::min(t_safe, ((bc + 1) * block_m - o.x) * inv_dx);
      } else if (d.x < 0.0) {
        t_safe = std::min(t_safe, (bc * block_m - o.x) * inv_dx);
      }
      if (d.y > 0.0) {
        t_safe = std::min(t_safe, ((br + 1) * block_m - o.y) * inv_dy);
      } else if (d.y < 0.0) {
        t_safe = std::min(t_safe, (br * block_m - o.y) * inv_dy);
      }
      if (d.z < 0.0) {
        t_safe = std::min(t_safe, (bmax - o.z) * inv_dz);
      }
      break;
    }
    if (t_safe > t) {
      const long k_last = static_cast<long>(std::floor((t_safe - 1e-6) / step_));
      k = std::max(k + 1, k_last + 1);
    } else {
      ++k;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

namespace
{

struct CameraBasis
{
  Vec3 f;
  Vec3 r;
  Vec3 u;
};

CameraBasis camera_basis(const RobotPose & pose, const CameraModel & cam)
{
  const double psi = deg2rad(pose.yaw);
  const double e = deg2rad(pose.pitch + cam.boresight_tilt);
  const double ce = std::cos(e);
  const double se = std::sin(e);
  const double cp = std::cos(psi);
  const double sp = std::sin(psi);
  return {
    {ce * cp, -ce * sp, se},
    {-sp, -cp, 0.0},
    {-se * cp, se * sp, ce},
  };
}

Vec3 combine(const CameraBasis & b, double xn, double yn)
{
  Vec3 d{
    b.f.x + xn * b.r.x + yn * b.u.x,
    b.f.y + xn * b.r.y + yn * b.u.y,
    b.f.z + xn * b.r.z + yn * b.u.z,
  };
  const double n = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  d.x /= n;
  d.y /= n;
  d.z /= n;
  return d;
}

double pixel_xn(const CameraModel & cam, int u)
{
  return (2.0 * (u + 0.5) / cam.image_w - 1.0) * std::tan(deg2rad(cam.hfov / 2.0));
}

double pixel_yn(const CameraModel & cam, int v)
{
  return (1.0 - 2.0 * (v + 0.5) / cam.image_h) * std::tan(deg2rad(cam.vfov / 2.0));
}

}  // namespace

Vec3 pixel_ray(const RobotPose & pose, const CameraModel & cam, int u, int v)
{
  return combine(camera_basis(pose, cam), pixel_xn(cam, u), pixel_yn(cam, v));
}

Sensor::Sensor(const WorldMap & map, const CameraModel & cam)
: caster_(map), cam_(cam)
{
  cam_.validate();
  xn_.resize(cam_.image_w);
  yn_.resize(cam_.image_h);
  for (int u = 0; u < cam_.image_w; ++u) {
    xn_[u] = pixel_xn(cam_, u);
  }
  for (int v = 0; v < cam_.image_h; ++v) {
    yn_[v] = pixel_yn(cam_, v);
  }
}

void Sensor::check_pose(const RobotPose & pose) const
{
  const auto & m = caster_.map();
  const auto c = m.try_cell_of(pose.x, pose.y);
  if (!c) {
    throw OutOfBoundsError("render: pose outside world bounds");
  }
  if (!(pose.z > m.height_at(c->col, c->row))) {
    throw ParameterError("render: pose is under the terrain");
  }
}

RenderOutput Sensor::render_full(const RobotPose & pose) const
{
  check_pose(pose);
  const int W = cam_.image_w;
  const int H = cam_.image_h;
  RenderOutput out;
  out.frame.seg = Image(W, H, 1);
  out.frame.depth = Image(W, H, 1);
  out.pixel_cells.assign(static_cast<std::size_t>(W) * H, kNoCell);

  const CameraBasis basis = camera_basis(pose, cam_);
  const Vec3 origin{pose.x, pose.y, pose.z};
  const auto & ooi = caster_.map().ooi();
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const Vec3 d = combine(basis, xn_[u], yn_[v]);
      const RayHit hit = caster_.cast(origin, d, cam_.max_range);
      if (!hit.hit) {
        continue;
      }
      const std::uint8_t prox = encode_proximity(hit.range, cam_.max_range);
      if (prox == 0) {
        continue;  // at max range after quantization: rendered as a miss
      }
      const std::size_t p = static_cast<std::size_t>(v) * W + u;
      out.frame.depth.data[p] = prox;
      out.frame.seg.data[p] = ooi[hit.cell];
      out.pixel_cells[p] = hit.cell;
    }
  }
  return out;
}

std::vector<std::uint32_t> Sensor::footprint(const RobotPose & pose) const
{
  auto cells = render_full(pose).pixel_cells;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (!cells.empty() && cells.back() == kNoCell) {
    cells.pop_back();
  }
  return cells;
}

Frame render(const WorldMap & map, const RobotPose & pose, const CameraModel & cam)
{
  return Sensor(map, cam).render(pose);
}

std::vector<std::uint32_t> ground_footprint(
  const WorldMap & map, const RobotPose & pose, const CameraModel & cam)
{
  return Sensor(map, cam).footprint(pose);
}

void export_frame(
  const Frame & frame, const RobotPose & pose, const CameraModel & cam,
  const std::string & dir, const std::string & stem)
{
  const std::string base = dir.empty() ? stem : dir + "/" + stem;
  write_file(base + "_seg.png", encode_png_mask(frame.seg));
  write_file(base + "_depth.png", encode_png(frame.depth));
  if (!frame.segdepth.data.empty()) {
    write_file(base + "_segdepth.png", encode_png(frame.segdepth));
  }
  json side = {
    {"pose", {{"x", pose.x}, {"y", pose.y}, {"z", pose.z}, {"yaw", pose.yaw},
      {"pitch", pose.pitch}}},
    {"camera", to_json(cam)},
  };
  write_file(base + ".json", side.dump(2) + "\n");
}

}  // namespace uivnav
