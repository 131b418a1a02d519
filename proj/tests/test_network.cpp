#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "uivnav/common.hpp"
#include "uivnav/network.hpp"

using namespace uivnav;

namespace
{

SegDepthImage random_ids(Rng & rng, int size)
{
  SegDepthImage ids{Image(size, size, 3)};
  for (auto & v : ids.image.data) {
    v = static_cast<std::uint8_t>(rng.below(256));
  }
  return ids;
}

std::vector<LabeledSample> random_samples(std::uint64_t seed, int n, int size = 64)
{
  Rng rng(seed);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    LabeledSample s;
    s.image = random_ids(rng, size);
    s.c_yaw = static_cast<int>(rng.below(7));
    s.c_pitch = static_cast<int>(rng.below(7));
    s.step = i;
    out.push_back(std::move(s));
  }
  return out;
}

double max_abs_diff(std::span<const float> a, std::span<const float> b)
{
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, static_cast<double>(std::abs(a[i] - b[i])));
  }
  return m;
}

}  // namespace

TEST_CASE("arch sizes") {
  NetworkArch a;
  CHECK(a.conv1_size() == 32);
  CHECK(a.conv2_size() == 16);
  CHECK(a.flat_size() == 16u * 16u * 16u);
  const std::size_t expected = (8 * 75 + 8) + (16 * 200 + 16) + (64 * 4096 + 64) + 2 * (7 * 64 + 7);
  CHECK(a.parameter_count() == expected);
  PolicyModel m(a);
  CHECK(m.weights().size() == expected);
}

TEST_CASE("predict returns two simplexes and argmax actions") {
  PolicyModel m;
  m.initialize(5);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const Prediction p = m.predict(random_ids(rng, 64));
    CHECK(is_simplex(p.yaw, 1e-6));
    CHECK(is_simplex(p.pitch, 1e-6));
    CHECK(p.action.c_yaw == argmax_class(p.yaw));
    CHECK(p.action.c_pitch == argmax_class(p.pitch));
  }
}

TEST_CASE("wrong input dims throw DimensionError") {
  PolicyModel m;
  m.initialize(0);
  CHECK_THROWS_AS(m.predict(SegDepthImage{Image(32, 32, 3)}), DimensionError);
  CHECK_THROWS_AS(m.predict(SegDepthImage{Image(64, 64, 1)}), DimensionError);
  auto bad = random_samples(0, 3, 32);
  TrainerConfig c;
  c.epochs = 1;
  CHECK_THROWS_AS(train_bc(bad, {}, c), DimensionError);
}

TEST_CASE("empty dataset and bad labels are rejected") {
  TrainerConfig c;
  c.epochs = 1;
  CHECK_THROWS_AS(train_bc({}, {}, c), ParameterError);
  auto s = random_samples(0, 2);
  s[1].c_pitch = 7;
  CHECK_THROWS_AS(train_bc(s, {}, c), ParameterError);
}

TEST_CASE("memorizes ten samples") {
  const auto data = random_samples(42, 10);
  TrainerConfig c;
  c.epochs = 200;
  c.batch = 10;
  c.seed = 3;
  const TrainResult r = train_bc(data, {}, c);
  // Floor of the loss is lambda times the target entropy of both heads.
  double floor = 0.0;
  for (const auto & s : data) {
    floor += c.lambda * (entropy(smooth_label(s.c_yaw)) + entropy(smooth_label(s.c_pitch)));
  }
  floor /= static_cast<double>(data.size());
  CHECK(r.train.loss < floor + 0.05);
  CHECK(r.train.yaw_exact == 1.0);
  CHECK(r.train.pitch_exact == 1.0);
  CHECK(r.epoch_loss.size() == 200u);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("duplicating a full-batch dataset leaves the gradient unchanged") {
  const auto data = random_samples(7, 6);
  std::vector<LabeledSample> doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  TrainerConfig c;
  c.epochs = 5;
  c.seed = 11;
  c.batch = 6;
  const TrainResult a = train_bc(data, {}, c);
  c.batch = 12;
  const TrainResult b = train_bc(doubled, {}, c);
  CHECK(max_abs_diff(a.model.weights(), b.model.weights()) < 1e-5);
}

TEST_CASE("training is deterministic per seed") {
  const auto data = random_samples(9, 12);
  TrainerConfig c;
  c.epochs = 3;
  c.batch = 4;
  c.seed = 1;
  const TrainResult a = train_bc(data, {}, c);
  const TrainResult b = train_bc(data, {}, c);
  CHECK(max_abs_diff(a.model.weights(), b.model.weights()) == 0.0);
  c.seed = 2;
  const TrainResult d = train_bc(data, {}, c);
  CHECK(max_abs_diff(a.model.weights(), d.model.weights()) > 0.0);
}

TEST_CASE("validation metrics are reported when given") {
  const auto data = random_samples(1, 8);
  const auto val = random_samples(2, 4);
  TrainerConfig c;
  c.epochs = 1;
  const TrainResult r = train_bc(data, val, c);
  REQUIRE(r.validation.has_value());
  CHECK(r.validation->count == 4u);
  CHECK(r.train.count == 8u);
}

TEST_CASE("model json round trip and arch check") {
  PolicyModel m;
  m.initialize(17);
  const PolicyModel back = model_from_json(model_to_json(m), NetworkArch{});
  CHECK(max_abs_diff(m.weights(), back.weights()) == 0.0);
  CHECK(back.lambda() == m.lambda());

  NetworkArch other;
  other.hidden = 32;
  CHECK_THROWS(model_from_json(model_to_json(m), other));

  const auto path = (std::filesystem::temp_directory_path() / "uivnav_test_model.json").string();
  save_model(path, m);
  const PolicyModel loaded = load_model(path);
  CHECK(max_abs_diff(m.weights(), loaded.weights()) == 0.0);
  Rng rng(4);
  const auto ids = random_ids(rng, 64);
  CHECK(m.predict(ids).action.same_classes(loaded.predict(ids).action));
  std::filesystem::remove(path);
}

TEST_CASE("trainer config validation") {
  TrainerConfig c;
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}
