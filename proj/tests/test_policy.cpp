#include <cmath>

#include "doctest.h"
#include "uivnav/common.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/sensor.hpp"

using namespace uivnav;

namespace
{

ClassDistribution random_simplex(Rng & rng)
{
  ClassDistribution p{};
  double s = 0.0;
  for (auto & v : p) {
    v = rng.uniform(0.01, 1.0);
    s += v;
  }
  for (auto & v : p) {
    v /= s;
  }
  return p;
}

}  // namespace

TEST_CASE("decode table for both axes") {
  const double expected[7] = {15, 10, 5, 0, -5, -10, -15};
  for (int c = 0; c < 7; ++c) {
    CHECK(decode_action(c, 5.0) == expected[c]);
  }
  CHECK_THROWS_AS(decode_action(7, 5.0), ParameterError);
  CHECK_THROWS_AS(decode_action(-1, 5.0), ParameterError);
  ActionClass a;
  a.c_yaw = 0;
  a.c_pitch = 6;
  CHECK(a.yaw_change() == 15.0);
  CHECK(a.pitch_change() == -15.0);
}

TEST_CASE("label smoothing kernel") {
  CHECK(smooth_label(3) == ClassDistribution{0, 0, 0.1, 0.8, 0.1, 0, 0});
  CHECK(smooth_label(0) == ClassDistribution{0.9, 0.1, 0, 0, 0, 0, 0});
  CHECK(smooth_label(6) == ClassDistribution{0, 0, 0, 0, 0, 0.1, 0.9});
  for (int c = 0; c < 7; ++c) {
    CHECK(is_simplex(smooth_label(c)));
  }
}

TEST_CASE("argmax ties go to the lower index") {
  CHECK(argmax_class({0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.2}) == 0);
  CHECK(argmax_class({0.1, 0.1, 0.1, 0.3, 0.3, 0.05, 0.05}) == 3);
}

TEST_CASE("loss: uniform prediction against one-hot targets") {
  ClassDistribution u;
  u.fill(1.0 / 7.0);
  const LossTerms t = loss_terms(u, u, one_hot(2), one_hot(5), 0.1);
  CHECK(t.cce == doctest::Approx(2 * std::log(7.0)).epsilon(1e-12));
  CHECK(t.kl == doctest::Approx(2 * std::log(7.0)).epsilon(1e-12));
  CHECK(loss(u, u, one_hot(2), one_hot(5), 0.1) == doctest::Approx(2 * std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("loss: prediction equal to the target leaves lambda * entropy") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_simplex(rng);
    const auto b = random_simplex(rng);
    for (double lambda : {0.0, 0.1, 1.0}) {
      const LossTerms t = loss_terms(a, b, a, b, lambda);
      CHECK(t.kl == 0.0);
      CHECK(t.total == doctest::Approx(lambda * (entropy(a) + entropy(b))).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(loss(smooth_label(1), smooth_label(1), {0.5, 0.6, 0, 0, 0, 0, 0},
    smooth_label(1), 0.1), ParameterError);
}

TEST_CASE("loss gradient agrees with central differences") {
  Rng rng(7);
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_simplex(rng);
    const auto t = smooth_label(static_cast<int>(rng.below(7)));
    const double lambda = rng.uniform();
    // dL/dp, p treated as free, evaluated through the head-summed loss with
    // the other head fixed at its target.
    const auto g = loss_grad_pred(p, t, lambda);
    auto f = [&](const ClassDistribution & q) {
        double s = 0.0;
        for (int k = 0; k < 7; ++k) {
          const double lp = std::log(std::max(q[k], kLogClamp));
          if (t[k] > 0) {
            s += lambda * (-t[k] * lp) + (1 - lambda) * t[k] * (std::log(t[k]) - lp);
          }
        }
        return s;
      };
    for (int k = 0; k < 7; ++k) {
      auto a = p, b = p;
      a[k] += h;
      b[k] -= h;
      const double fd = (f(a) - f(b)) / (2 * h);
      const double rel = std::abs(fd - g[k]) / std::max(1e-8, std::abs(fd) + std::abs(g[k]));
      worst = std::max(worst, rel);
    }
    // Through the softmax as well.
    std::array<double, 7> z{};
    for (auto & v : z) {
      v = rng.uniform(-2, 2);
    }
    const auto gz = loss_grad_logits(softmax(z), t, lambda);
    for (int k = 0; k < 7; ++k) {
      auto a = z, b = z;
      a[k] += h;
      b[k] -= h;
      const double fd = (f(softmax(a)) - f(softmax(b))) / (2 * h);
      const double rel = std::abs(fd - gz[k]) / std::max(1e-8, std::abs(fd) + std::abs(gz[k]));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient does not depend on lambda") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_simplex(rng);
    const auto t = random_simplex(rng);
    const auto g0 = loss_grad_pred(p, t, 0.0);
    for (double lambda : {0.1, 1.0}) {
      const auto g = loss_grad_pred(p, t, lambda);
      for (int k = 0; k < 7; ++k) {
        CHECK(std::abs(g[k] - g0[k]) <= 1e-12);
      }
    }
  }
}

namespace
{

struct Planes
{
  Image seg{35, 20, 1, 0};
  Image depth{35, 20, 1, 0};
};

}  // namespace

TEST_CASE("expert: empty frame holds course") {
  Planes f;
  const ActionClass a = expert_policy(f.seg, f.depth, ExpertConfig{});
  CHECK(a.c_yaw == 3);
  CHECK(a.c_pitch == 3);
}

TEST_CASE("expert: OOI mass in the rightmost sector turns hard clockwise") {
  Planes f;
  // Floor at a mid range in the bottom row keeps the altitude rule quiet.
  for (int u = 0; u < 35; ++u) {
    f.depth.at(u, 19) = encode_proximity(6.0, 20.0);
  }
  for (int v = 10; v < 19; ++v) {
    for (int u = 30; u < 35; ++u) {
      f.seg.at(u, v) = 1;
      f.depth.at(u, v) = 60;
    }
  }
  const ActionClass a = expert_policy(f.seg, f.depth, ExpertConfig{});
  CHECK(a.c_yaw == 0);
  CHECK(a.c_pitch == 3);
}

TEST_CASE("expert: near pixels in the upper half trigger a climb") {
  Planes f;
  for (int v = 0; v < 10; ++v) {
    for (int u = 0; u < 14; ++u) {  // 140 of 350 upper pixels = 40%
      f.depth.at(u, v) = 230;
    }
  }
  CHECK(expert_policy(f.seg, f.depth, ExpertConfig{}).c_pitch == 0);
  Planes g;
  for (int u = 0; u < 35 * 2 / 10 * 1; ++u) {  // 7 pixels = 2%
    g.depth.at(u, 0) = 230;
  }
  g.depth.at(17, 19) = encode_proximity(2.0, 20.0);  // too low
  CHECK(expert_policy(g.seg, g.depth, ExpertConfig{}).c_pitch == 2);
  Planes h;
  h.depth.at(17, 19) = encode_proximity(15.0, 20.0);  // too high
  CHECK(expert_policy(h.seg, h.depth, ExpertConfig{}).c_pitch == 4);
}

TEST_CASE("expert: deterministic and mirror equivariant in yaw") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    Image seg(42, 30, 1), depth(42, 30, 1);
    for (std::size_t i = 0; i < seg.data.size(); ++i) {
      seg.data[i] = rng.uniform() < 0.1 ? 1 : 0;
      depth.data[i] = static_cast<std::uint8_t>(rng.below(256));
    }
    Image ms = seg, md = depth;
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 42; ++x) {
        ms.at(x, y) = seg.at(41 - x, y);
        md.at(x, y) = depth.at(41 - x, y);
      }
    }
    const ActionClass a = expert_policy(seg, depth, ExpertConfig{});
    const ActionClass b = expert_policy(ms, md, ExpertConfig{});
    CHECK(a.same_classes(expert_policy(seg, depth, ExpertConfig{})));
    CHECK(b.c_yaw == 6 - a.c_yaw);
    CHECK(b.c_pitch == a.c_pitch);
  }
}

TEST_CASE("sectors are mirror symmetric") {
  for (int w : {16, 35, 64, 256}) {
    for (int u = 0; u < w; ++u) {
      CHECK(sector_of_column(w - 1 - u, w) == 6 - sector_of_column(u, w));
    }
  }
}
