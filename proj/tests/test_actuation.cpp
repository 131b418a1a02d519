#include "doctest.h"
#include "uivnav/actuation.hpp"
#include "uivnav/common.hpp"

using namespace uivnav;

TEST_CASE("command to velocity") {
  CHECK(command_to_velocity(0, 0.1) == 0.0);
  CHECK(command_to_velocity(3, 0.1) == doctest::Approx(0.3));
  CHECK(command_to_velocity(-2, 0.1) == doctest::Approx(-0.2));
}

TEST_CASE("velocity to pwm") {
  const ActuationParams p;
  for (Dof d : {Dof::Surge, Dof::Heave, Dof::Yaw, Dof::Pitch}) {
    CHECK(velocity_to_pwm(0.0, d, p) == 1500);
  }
  CHECK(velocity_to_pwm(2.0, Dof::Yaw, p) == 1600);
  CHECK(velocity_to_pwm(20.0, Dof::Yaw, p) == 1900);
  CHECK(velocity_to_pwm(-20.0, Dof::Yaw, p) == 1100);
  CHECK(velocity_to_pwm(2.0, "pitch", p) == 1600);
  CHECK_THROWS_AS(velocity_to_pwm(1.0, "roll", p), ParameterError);
  CHECK_THROWS_AS(parse_dof("sway"), ParameterError);
}

TEST_CASE("pwm is monotone, clamped and odd about neutral") {
  ActuationParams p;
  p.gain = {37, 50, 80, 120};
  Rng rng(8);
  for (Dof d : {Dof::Surge, Dof::Heave, Dof::Yaw, Dof::Pitch}) {
    int prev = 0;
    for (int i = -400; i <= 400; ++i) {
      const double nu = i * 0.05;
      const int v = velocity_to_pwm(nu, d, p);
      CHECK(v >= prev);
      CHECK(v >= p.pwm_min);
      CHECK(v <= p.pwm_max);
      prev = v;
    }
    for (int i = 0; i < 200; ++i) {
      const double nu = rng.uniform(-3.0, 3.0);
      CHECK(velocity_to_pwm(nu, d, p) - 1500 == 1500 - velocity_to_pwm(-nu, d, p));
    }
  }
}

TEST_CASE("class pairs map to pwm") {
  const ActuationParams p;
  const PwmCommand noop = classes_to_pwm(3, 3, p);
  CHECK(noop.yaw == 1500);
  CHECK(noop.pitch == 1500);
  CHECK(noop.heave == 1500);
  CHECK(noop.surge == 1515);
  // Class 0: offset +3, nu = 0.3, 50 * 0.3 = 15.
  const PwmCommand hard = classes_to_pwm(0, 6, p);
  CHECK(hard.yaw == 1515);
  CHECK(hard.pitch == 1485);
  CHECK_THROWS_AS(classes_to_pwm(7, 3, p), ParameterError);
  CHECK(pwm_line(12, hard) == "t=12 surge=1515 heave=1500 yaw=1515 pitch=1485");
}

TEST_CASE("actuation params json and validation") {
  ActuationParams p;
  p.gain = {10, 20, 30, 40};
  p.pwm_min = 1000;
  const ActuationParams back = actuation_params_from_json(to_json(p));
  CHECK(back.gain == p.gain);
  CHECK(back.pwm_min == 1000);
  ActuationParams bad;
  bad.pwm_min = 1600;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK_THROWS(actuation_params_from_json(nlohmann::json{{"bogus", 1}}));
}
