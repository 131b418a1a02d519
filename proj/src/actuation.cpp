#include "uivnav/actuation.hpp"

#include <algorithm>
#include <cmath>

#include "uivnav/common.hpp"
#include "uivnav/json_fields.hpp"
#include "uivnav/policy.hpp"

namespace uivnav
{

std::string_view dof_name(Dof d)
{
  switch (d) {
    case Dof::Surge: return "surge";
    case Dof::Heave: return "heave";
    case Dof::Yaw: return "yaw";
    case Dof::Pitch: return "pitch";
  }
  return "surge";
}

Dof parse_dof(const std::string & name)
{
  for (Dof d : {Dof::Surge, Dof::Heave, Dof::Yaw, Dof::Pitch}) {
    if (dof_name(d) == name) {
      return d;
    }
  }
  throw ParameterError("actuation: unknown degree of freedom '" + name + "'");
}

void ActuationParams::validate() const
{
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("actuation.alpha must be > 0");
  }
  for (double g : gain) {
    if (!std::isfinite(g)) {
      throw ParameterError("actuation gains must be finite");
    }
  }
  if (!(pwm_min < neutral && neutral < pwm_max)) {
    throw ParameterError("actuation: need pwm_min < neutral < pwm_max");
  }
}

nlohmann::json to_json(const ActuationParams & p)
{
  nlohmann::json gains;
  for (int i = 0; i < kNumDof; ++i) {
    gains[std::string(dof_name(static_cast<Dof>(i)))] = p.gain[i];
  }
  return {
    {"alpha", p.alpha}, {"gains", gains}, {"pwm_min", p.pwm_min}, {"pwm_max", p.pwm_max},
    {"neutral", p.neutral}, {"surge_command", p.surge_command},
  };
}

ActuationParams actuation_params_from_json(const nlohmann::json & j, ActuationParams p)
{
  JsonFields f(j, "actuation");
  f.optional("alpha", p.alpha);
  if (f.has("gains")) {
    JsonFields g(f.sub("gains"), "actuation.gains");
    for (int i = 0; i < kNumDof; ++i) {
      g.optional(std::string(dof_name(static_cast<Dof>(i))), p.gain[i]);
    }
    g.finish();
  }
  f.optional("pwm_min", p.pwm_min);
  f.optional("pwm_max", p.pwm_max);
  f.optional("neutral", p.neutral);
  f.optional("surge_command", p.surge_command);
  f.finish();
  p.validate();
  return p;
}

double command_to_velocity(int c, double alpha)
{
  return c * alpha;
}

int velocity_to_pwm(double nu, Dof dof, const ActuationParams & p)
{
  const double raw = std::round(p.neutral + p.k(dof) * nu);
  return static_cast<int>(std::clamp(raw, double(p.pwm_min), double(p.pwm_max)));
}

int velocity_to_pwm(double nu, const std::string & dof, const ActuationParams & p)
{
  return velocity_to_pwm(nu, parse_dof(dof), p);
}

PwmCommand classes_to_pwm(int c_yaw, int c_pitch, const ActuationParams & p)
{
  if (!valid_class(c_yaw) || !valid_class(c_pitch)) {
    throw ParameterError("actuation: action classes must be in [0, 6]");
  }
  PwmCommand cmd;
  cmd.surge = velocity_to_pwm(command_to_velocity(p.surge_command, p.alpha), Dof::Surge, p);
  cmd.heave = velocity_to_pwm(0.0, Dof::Heave, p);
  cmd.yaw = velocity_to_pwm(command_to_velocity(kNoOpClass - c_yaw, p.alpha), Dof::Yaw, p);
  cmd.pitch = velocity_to_pwm(command_to_velocity(kNoOpClass - c_pitch, p.alpha), Dof::Pitch, p);
  return cmd;
}

std::string pwm_line(long step, const PwmCommand & c)
{
  return "t=" + std::to_string(step) + " surge=" + std::to_string(c.surge) + " heave=" +
         std::to_string(c.heave) + " yaw=" + std::to_string(c.yaw) + " pitch=" +
         std::to_string(c.pitch);
}

}  // namespace uivnav
