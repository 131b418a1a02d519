#ifndef UIVNAV__ACTUATION_HPP_
#define UIVNAV__ACTUATION_HPP_

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"

namespace uivnav
{

enum class Dof
{
  Surge,
  Heave,
  Yaw,
  Pitch,
};

inline constexpr int kNumDof = 4;

std::string_view dof_name(Dof d);
/// Throws ParameterError for anything other than surge/heave/yaw/pitch.
Dof parse_dof(const std::string & name);

struct ActuationParams
{
  double alpha = 0.1;                             // m/s (or rad/s) per command unit
  std::array<double, kNumDof> gain{50, 50, 50, 50};  // us per unit velocity, by Dof
  int pwm_min = 1100;
  int pwm_max = 1900;
  int neutral = 1500;
  int surge_command = 3;  // held constant; the class pair carries no surge

  void validate() const;
  double k(Dof d) const {return gain[static_cast<int>(d)];}
};

nlohmann::json to_json(const ActuationParams & p);
ActuationParams actuation_params_from_json(const nlohmann::json & j, ActuationParams base = {});

double command_to_velocity(int c, double alpha);

/// round(neutral + k * nu), clamped to [pwm_min, pwm_max].
int velocity_to_pwm(double nu, Dof dof, const ActuationParams & p);
int velocity_to_pwm(double nu, const std::string & dof, const ActuationParams & p);

struct PwmCommand
{
  int surge = 1500;
  int heave = 1500;
  int yaw = 1500;
  int pitch = 1500;

  bool operator==(const PwmCommand &) const = default;
};

/// Yaw and pitch go through the signed offset 3 - C; heave is held at zero.
PwmCommand classes_to_pwm(int c_yaw, int c_pitch, const ActuationParams & p);

/// "t=<step> surge=<us> heave=<us> yaw=<us> pitch=<us>"
std::string pwm_line(long step, const PwmCommand & cmd);

}  // namespace uivnav

#endif  // UIVNAV__ACTUATION_HPP_
