#ifndef UIVNAV__POLICY_HPP_
#define UIVNAV__POLICY_HPP_

#include <array>

#include "json.hpp"
#include "uivnav/image.hpp"

namespace uivnav
{

inline constexpr int kNumClasses = 7;
inline constexpr int kNoOpClass = 3;

/// Pair of 7-way classes. Class c decodes to (3 - c) * delta degrees: positive
/// yaw is clockwise, positive pitch is nose-up.
struct ActionClass
{
  int c_yaw = kNoOpClass;
  int c_pitch = kNoOpClass;
  double delta_yaw = 5.0;
  double delta_pitch = 5.0;

  double yaw_change() const;
  double pitch_change() const;
  bool same_classes(const ActionClass & o) const
  {
    return c_yaw == o.c_yaw && c_pitch == o.c_pitch;
  }
};

bool valid_class(int c);
/// (3 - c) * delta. Throws ParameterError when c is outside 0..6.
double decode_action(int c, double delta);

using ClassDistribution = std::array<double, kNumClasses>;

bool is_simplex(const ClassDistribution & p, double tol = 1e-9);
/// 0.8 on c and 0.1 on each neighbor; a missing neighbor's share folds onto c.
ClassDistribution smooth_label(int c);
ClassDistribution one_hot(int c);
/// Index of the largest entry; ties go to the lower index.
int argmax_class(const ClassDistribution & p);

inline constexpr double kLogClamp = 1e-12;

/// Per-head CCE and forward KL, already summed over the two heads.
struct LossTerms
{
  double cce = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Sum over heads of lambda * CCE(t, p) + (1 - lambda) * KL(t || p), with p
/// clamped at 1e-12 inside the logs and 0 * log 0 = 0. Inputs must be simplexes.
LossTerms loss_terms(
  const ClassDistribution & pred_yaw, const ClassDistribution & pred_pitch,
  const ClassDistribution & target_yaw, const ClassDistribution & target_pitch,
  double lambda);
double loss(
  const ClassDistribution & pred_yaw, const ClassDistribution & pred_pitch,
  const ClassDistribution & target_yaw, const ClassDistribution & target_pitch,
  double lambda);

/// Shannon entropy in nats.
double entropy(const ClassDistribution & t);

/// dL/dp for one head, treating p as free (no simplex projection). The result
/// does not depend on lambda: both terms contribute -t_i / p_i.
ClassDistribution loss_grad_pred(
  const ClassDistribution & pred, const ClassDistribution & target, double lambda);
/// dL/dz for one head when p = softmax(z).
ClassDistribution loss_grad_logits(
  const ClassDistribution & pred, const ClassDistribution & target, double lambda);

ClassDistribution softmax(const std::array<double, kNumClasses> & logits);

/// Thresholds of the deterministic labeler. Pixel values are 8-bit proximity.
struct ExpertConfig
{
  int near_proximity = 204;      // proximity >= 0.8 of full scale counts as near
  double obstacle_weight = 4.0;  // beta: penalty per near non-OOI pixel
  double pitch_hard = 0.30;      // near_frac thresholds for climb classes 0/1/2
  double pitch_medium = 0.15;
  double pitch_soft = 0.05;
  double range_low = 4.0;        // meters: climb below this bottom-center range
  double range_high = 9.0;       // meters: descend above this
  double delta_yaw = 5.0;
  double delta_pitch = 5.0;
  double max_range = 20.0;       // mirrors the camera's range; set with it

  void validate() const;
};

nlohmann::json to_json(const ExpertConfig & c);
/// max_range is not read here; callers copy it from the camera.
ExpertConfig expert_config_from_json(const nlohmann::json & j, ExpertConfig base = {});

/// Column u of a width-W image belongs to sector floor((2u + 1) * 7 / (2W)).
/// The center-based assignment makes sectors exactly mirror-symmetric.
int sector_of_column(int u, int width);

struct ExpertScores
{
  std::array<double, kNumClasses> sector{};  // S_j - P_j, in proximity units / 255
  double near_fraction = 0.0;
  double bottom_range = 0.0;
  bool bottom_hit = false;  // false when the bottom-center ray found nothing in range
};

ExpertScores expert_scores(const Image & seg, const Image & depth, const ExpertConfig & config);

/// Deterministic stand-in for the human labeler. Yaw steers to the sector with
/// the most far-weighted OOI minus a near-obstacle penalty; pitch climbs away
/// from near pixels in the upper half, otherwise holds the bottom-center range
/// inside [range_low, range_high].
ActionClass expert_policy(const Image & seg, const Image & depth, const ExpertConfig & config);

}  // namespace uivnav

#endif  // UIVNAV__POLICY_HPP_
