#ifndef UIVNAV__NETWORK_HPP_
#define UIVNAV__NETWORK_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/dataset.hpp"
#include "uivnav/ir.hpp"
#include "uivnav/policy.hpp"

namespace uivnav
{

/// conv(k, s=2, pad=k/2) -> ReLU -> conv -> ReLU -> dense -> ReLU -> two 7-way heads.
struct NetworkArch
{
  int input_size = 64;  // square input, 3 channels scaled to [0, 1]
  int conv1_filters = 8;
  int conv2_filters = 16;
  int kernel = 5;
  int stride = 2;
  int hidden = 64;

  int conv1_size() const;
  int conv2_size() const;
  std::size_t flat_size() const;
  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const NetworkArch &) const = default;
};

nlohmann::json to_json(const NetworkArch & a);
NetworkArch network_arch_from_json(const nlohmann::json & j);

struct Prediction
{
  ClassDistribution yaw{};
  ClassDistribution pitch{};
  ActionClass action;
};

class PolicyModel
{
public:
  /// Zero weights. Use initialize() or load_model() for something useful.
  explicit PolicyModel(NetworkArch arch = {}, double lambda = 0.1);

  /// Uniform fan-in init: U(-sqrt(6/fan_in), +) for ReLU layers,
  /// U(-sqrt(3/fan_in), +) for the heads; biases zero.
  void initialize(std::uint64_t seed);

  const NetworkArch & arch() const {return arch_;}
  double lambda() const {return lambda_;}
  std::span<const float> weights() const {return w_;}
  std::span<float> weights() {return w_;}
  bool weights_finite() const;

  /// Pure forward pass. Throws DimensionError when the image is not
  /// input_size x input_size x 3.
  Prediction predict(const SegDepthImage & ids) const;

private:
  NetworkArch arch_;
  double lambda_;
  std::vector<float> w_;
};

struct TrainerConfig
{
  int epochs = 30;
  double lr = 1e-3;
  int batch = 32;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.2;  // used by callers that split one dataset
  NetworkArch arch;

  void validate() const;
};

nlohmann::json to_json(const TrainerConfig & c);
TrainerConfig trainer_config_from_json(const nlohmann::json & j, TrainerConfig base = {});

struct TrainMetrics
{
  std::size_t count = 0;
  double loss = 0.0;  // mean Eq. 1 loss against smoothed targets
  double yaw_exact = 0.0;
  double pitch_exact = 0.0;
  double yaw_within1 = 0.0;
  double pitch_within1 = 0.0;
};

nlohmann::json to_json(const TrainMetrics & m);

struct TrainResult
{
  PolicyModel model;
  std::vector<double> epoch_loss;  // mean training loss seen during each epoch
  TrainMetrics train;
  std::optional<TrainMetrics> validation;
};

/// Adam on the mean smoothed-target loss. Deterministic for a given seed:
/// init and shuffling draw from separate derived streams.
TrainResult train_bc(
  std::span<const LabeledSample> train, std::span<const LabeledSample> validation,
  const TrainerConfig & config);

TrainMetrics evaluate_model(const PolicyModel & model, std::span<const LabeledSample> samples);

nlohmann::json model_to_json(const PolicyModel & model);
/// Rejects files whose architecture differs from `expected` when given.
PolicyModel model_from_json(
  const nlohmann::json & j, const std::optional<NetworkArch> & expected = std::nullopt);
void save_model(const std::string & path, const PolicyModel & model);
PolicyModel load_model(
  const std::string & path, const std::optional<NetworkArch> & expected = std::nullopt);

}  // namespace uivnav

#endif  // UIVNAV__NETWORK_HPP_
