#include "uivnav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "uivnav/common.hpp"
#include "uivnav/json_fields.hpp"
#include "uivnav/sensor.hpp"

namespace uivnav
{

using nlohmann::json;

bool valid_class(int c)
{
  return c >= 0 && c < kNumClasses;
}

double decode_action(int c, double delta)
{
  if (!valid_class(c)) {
    throw ParameterError("decode_action: class " + std::to_string(c) + " outside 0..6");
  }
  return (kNoOpClass - c) * delta;
}

double ActionClass::yaw_change() const {return decode_action(c_yaw, delta_yaw);}
double ActionClass::pitch_change() const {return decode_action(c_pitch, delta_pitch);}

bool is_simplex(const ClassDistribution & p, double tol)
{
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < -tol) {
      return false;
    }
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

ClassDistribution smooth_label(int c)
{
  if (!valid_class(c)) {
    throw ParameterError("smooth_label: class " + std::to_string(c) + " outside 0..6");
  }
  ClassDistribution t{};
  t[c] = 0.8;
  for (int n : {c - 1, c + 1}) {
    if (valid_class(n)) {
      t[n] = 0.1;
    } else {
      t[c] += 0.1;
    }
  }
  return t;
}

ClassDistribution one_hot(int c)
{
  if (!valid_class(c)) {
    throw ParameterError("one_hot: class outside 0..6");
  }
  ClassDistribution t{};
  t[c] = 1.0;
  return t;
}

int argmax_class(const ClassDistribution & p)
{
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i) {
    if (p[i] > p[best]) {
      best = i;
    }
  }
  return best;
}

double entropy(const ClassDistribution & t)
{
  double h = 0.0;
  for (double v : t) {
    if (v > 0.0) {
      h -= v * std::log(v);
    }
  }
  return h;
}

namespace
{

void require_simplex(const ClassDistribution & p, const char * what)
{
  if (!is_simplex(p)) {
    throw ParameterError(std::string("loss: ") + what + " is not a probability simplex");
  }
}

void head_terms(const ClassDistribution & p, const ClassDistribution & t, double & cce, double & kl)
{
  for (int i = 0; i < kNumClasses; ++i) {
    if (t[i] <= 0.0) {
      continue;
    }
    const double lp = std::log(std::max(p[i], kLogClamp));
    cce -= t[i] * lp;
    kl += t[i] * (std::log(t[i]) - lp);
  }
}

}  // namespace

LossTerms loss_terms(
  const ClassDistribution & pred_yaw, const ClassDistribution & pred_pitch,
  const ClassDistribution & target_yaw, const ClassDistribution & target_pitch,
  double lambda)
{
  require_simplex(pred_yaw, "pred_yaw");
  require_simplex(pred_pitch, "pred_pitch");
  require_simplex(target_yaw, "target_yaw");
  require_simplex(target_pitch, "target_pitch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("loss: lambda must be in [0, 1]");
  }
  LossTerms out;
  head_terms(pred_yaw, target_yaw, out.cce, out.kl);
  head_terms(pred_pitch, target_pitch, out.cce, out.kl);
  out.total = lambda * out.cce + (1.0 - lambda) * out.kl;
  return out;
}

double loss(
  const ClassDistribution & pred_yaw, const ClassDistribution & pred_pitch,
  const ClassDistribution & target_yaw, const ClassDistribution & target_pitch,
  double lambda)
{
  return loss_terms(pred_yaw, pred_pitch, target_yaw, target_pitch, lambda).total;
}

ClassDistribution loss_grad_pred(
  const ClassDistribution & pred, const ClassDistribution & target, double lambda)
{
  ClassDistribution g{};
  for (int i = 0; i < kNumClasses; ++i) {
    if (target[i] <= 0.0 || pred[i] < kLogClamp) {
      continue;  // clamped logs are constant in p
    }
    const double d_cce = -target[i] / pred[i];
    const double d_kl = -target[i] / pred[i];
    g[i] = lambda * d_cce + (1.0 - lambda) * d_kl;
  }
  return g;
}

ClassDistribution loss_grad_logits(
  const ClassDistribution & pred, const ClassDistribution & target, double lambda)
{
  const ClassDistribution gp = loss_grad_pred(pred, target, lambda);
  double dot = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    dot += gp[i] * pred[i];
  }
  ClassDistribution gz{};
  for (int j = 0; j < kNumClasses; ++j) {
    gz[j] = pred[j] * (gp[j] - dot);
  }
  return gz;
}

ClassDistribution softmax(const std::array<double, kNumClasses> & z)
{
  const double m = *std::max_element(z.begin(), z.end());
  ClassDistribution p{};
  double s = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    p[i] = std::exp(z[i] - m);
    s += p[i];
  }
  for (double & v : p) {
    v /= s;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Expert

void ExpertConfig::validate() const
{
  if (near_proximity < 1 || near_proximity > 255) {
    throw ParameterError("expert: near_proximity must be in [1, 255]");
  }
  if (!(obstacle_weight >= 0.0)) {
    throw ParameterError("expert: obstacle_weight must be >= 0");
  }
  if (!(pitch_soft > 0.0 && pitch_soft < pitch_medium && pitch_medium < pitch_hard &&
    pitch_hard < 1.0))
  {
    throw ParameterError("expert: need 0 < pitch_soft < pitch_medium < pitch_hard < 1");
  }
  if (!(range_low > 0.0 && range_low < range_high)) {
    throw ParameterError("expert: need 0 < range_low < range_high");
  }
  if (!(delta_yaw > 0.0 && delta_pitch > 0.0)) {
    throw ParameterError("expert: deltas must be positive");
  }
  if (!(max_range > 0.0)) {
    throw ParameterError("expert: max_range must be positive");
  }
}

json to_json(const ExpertConfig & c)
{
  return {
    {"near_proximity", c.near_proximity}, {"obstacle_weight", c.obstacle_weight},
    {"pitch_hard", c.pitch_hard}, {"pitch_medium", c.pitch_medium},
    {"pitch_soft", c.pitch_soft}, {"range_low", c.range_low}, {"range_high", c.range_high},
    {"delta_yaw", c.delta_yaw}, {"delta_pitch", c.delta_pitch},
  };
}

ExpertConfig expert_config_from_json(const json & j, ExpertConfig c)
{
  JsonFields f(j, "expert");
  f.optional("near_proximity", c.near_proximity);
  f.optional("obstacle_weight", c.obstacle_weight);
  f.optional("pitch_hard", c.pitch_hard);
  f.optional("pitch_medium", c.pitch_medium);
  f.optional("pitch_soft", c.pitch_soft);
  f.optional("range_low", c.range_low);
  f.optional("range_high", c.range_high);
  f.optional("delta_yaw", c.delta_yaw);
  f.optional("delta_pitch", c.delta_pitch);
  f.finish();
  c.validate();
  return c;
}

int sector_of_column(int u, int width)
{
  return static_cast<int>((static_cast<long>(2 * u + 1) * kNumClasses) / (2L * width));
}

ExpertScores expert_scores(const Image & seg, const Image & depth, const ExpertConfig & config)
{
  if (seg.channels != 1 || depth.channels != 1 || seg.width != depth.width ||
    seg.height != depth.height || seg.width < 2 || seg.height < 2)
  {
    throw DimensionError("expert_policy: seg and depth must be matching single-channel planes");
  }
  const int W = depth.width;
  const int H = depth.height;
  std::array<long, kNumClasses> far_mass{};
  std::array<long, kNumClasses> near_count{};
  long upper_near = 0;
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const int d = depth.at(u, v);
      const int j = sector_of_column(u, W);
      if (seg.at(u, v)) {
        far_mass[j] += 255 - d;
      } else if (d >= config.near_proximity) {
        ++near_count[j];
      }
      if (v < H / 2 && d >= config.near_proximity) {
        ++upper_near;
      }
    }
  }

  ExpertScores s;
  for (int j = 0; j < kNumClasses; ++j) {
    // Integer sums keep the scores independent of summation order.
    s.sector[j] = static_cast<double>(far_mass[j]) / 255.0 -
      config.obstacle_weight * static_cast<double>(near_count[j]);
  }
  s.near_fraction = static_cast<double>(upper_near) / (static_cast<double>(W) * (H / 2));

  int bottom = depth.at(W / 2, H - 1);
  if (W % 2 == 0) {
    bottom = std::max<int>(bottom, depth.at(W / 2 - 1, H - 1));
  }
  s.bottom_range = decode_proximity(static_cast<std::uint8_t>(bottom), config.max_range);
  s.bottom_hit = bottom > 0;
  return s;
}

ActionClass expert_policy(const Image & seg, const Image & depth, const ExpertConfig & config)
{
  const ExpertScores s = expert_scores(seg, depth, config);

  int best = kNoOpClass;
  for (int j = 0; j < kNumClasses; ++j) {
    if (j == best) {
      continue;
    }
    const double a = s.sector[j];
    const double b = s.sector[best];
    if (a > b) {
      best = j;
    } else if (a == b) {
      const int dj = std::abs(j - kNoOpClass);
      const int db = std::abs(best - kNoOpClass);
      if (dj < db || (dj == db && j > best)) {
        best = j;
      }
    }
  }

  int c_pitch;
  if (s.near_fraction > config.pitch_hard) {
    c_pitch = 0;
  } else if (s.near_fraction > config.pitch_medium) {
    c_pitch = 1;
  } else if (s.near_fraction > config.pitch_soft) {
    c_pitch = 2;
  } else if (!s.bottom_hit) {
    c_pitch = kNoOpClass;  // no floor in range: nothing to regulate against
  } else if (s.bottom_range < config.range_low) {
    c_pitch = 2;
  } else if (s.bottom_range > config.range_high) {
    c_pitch = 4;
  } else {
    c_pitch = kNoOpClass;
  }

  ActionClass a;
  a.delta_yaw = config.delta_yaw;
  a.delta_pitch = config.delta_pitch;
  if (s.sector[best] <= 0.0 && c_pitch == kNoOpClass) {
    return a;  // nothing worth steering for: hold course
  }
  a.c_yaw = (kNumClasses - 1) - best;
  a.c_pitch = c_pitch;
  return a;
}

}  // namespace uivnav
