#include "uivnav/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "uivnav/common.hpp"
#include "uivnav/image.hpp"
#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

namespace
{

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatF>;
using CMapM = Eigen::Map<const MatF>;
using MapV = Eigen::Map<Eigen::VectorXf>;
using CMapV = Eigen::Map<const Eigen::VectorXf>;

constexpr int kChannels = 3;
constexpr const char * kModelFormat = "uivnav-policy";
constexpr int kModelVersion = 1;

int conv_out(int in, int k, int s)
{
  const int pad = k / 2;
  return (in + 2 * pad - k) / s + 1;
}

// Offsets of each tensor in the flat weight vector. Weight matrices are
// row-major [out x in].
struct Layout
{
  std::size_t w1, b1, w2, b2, w3, b3, wy, by, wp, bp, total;
  int k1, k2;  // im2col rows of each conv
  int n1, n2;  // spatial positions of each conv output
  int d;       // flattened conv2 output
};

Layout make_layout(const NetworkArch & a)
{
  Layout l{};
  l.k1 = kChannels * a.kernel * a.kernel;
  l.k2 = a.conv1_filters * a.kernel * a.kernel;
  l.n1 = a.conv1_size() * a.conv1_size();
  l.n2 = a.conv2_size() * a.conv2_size();
  l.d = static_cast<int>(a.flat_size());
  std::size_t o = 0;
  auto take = [&o](std::size_t n) {
      const std::size_t at = o;
      o += n;
      return at;
    };
  l.w1 = take(static_cast<std::size_t>(a.conv1_filters) * l.k1);
  l.b1 = take(a.conv1_filters);
  l.w2 = take(static_cast<std::size_t>(a.conv2_filters) * l.k2);
  l.b2 = take(a.conv2_filters);
  l.w3 = take(static_cast<std::size_t>(a.hidden) * l.d);
  l.b3 = take(a.hidden);
  l.wy = take(static_cast<std::size_t>(kNumClasses) * a.hidden);
  l.by = take(kNumClasses);
  l.wp = take(static_cast<std::size_t>(kNumClasses) * a.hidden);
  l.bp = take(kNumClasses);
  l.total = o;
  return l;
}

// Unfolds a CHW tensor into [C*K*K x Ho*Ho] patches, zero-padded by K/2.
void im2col(const float * x, int C, int H, int K, int S, int Ho, float * col)
{
  const int P = K / 2;
  const int N = Ho * Ho;
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx) {
        float * row = col + static_cast<std::size_t>((c * K + ky) * K + kx) * N;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * S - P + ky;
          float * out = row + oy * Ho;
          if (iy < 0 || iy >= H) {
            std::fill(out, out + Ho, 0.0f);
            continue;
          }
          const float * in = x + (static_cast<std::size_t>(c) * H + iy) * H;
          for (int ox = 0; ox < Ho; ++ox) {
            const int ix = ox * S - P + kx;
            out[ox] = (ix >= 0 && ix < H) ? in[ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch gradients back onto a zeroed CHW tensor.
void col2im(const float * col, int C, int H, int K, int S, int Ho, float * x)
{
  const int P = K / 2;
  const int N = Ho * Ho;
  std::fill(x, x + static_cast<std::size_t>(C) * H * H, 0.0f);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx) {
        const float * row = col + static_cast<std::size_t>((c * K + ky) * K + kx) * N;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * S - P + ky;
          if (iy < 0 || iy >= H) {
            continue;
          }
          float * out = x + (static_cast<std::size_t>(c) * H + iy) * H;
          for (int ox = 0; ox < Ho; ++ox) {
            const int ix = ox * S - P + kx;
            if (ix >= 0 && ix < H) {
              out[ix] += row[oy * Ho + ox];
            }
          }
        }
      }
    }
  }
}

struct Activations
{
  std::vector<float> input;  // CHW in [0, 1]
  MatF col1, a1, r1, col2, a2, r2;
  Eigen::VectorXf a3, r3;
  ClassDistribution py{}, pp{};
};

void load_input(const NetworkArch & a, const SegDepthImage & ids, std::vector<float> & out)
{
  const Image & img = ids.image;
  if (img.width != a.input_size || img.height != a.input_size || img.channels != kChannels) {
    throw DimensionError(
      "policy: expected a " + std::to_string(a.input_size) + "x" + std::to_string(a.input_size) +
      "x3 image, got " + std::to_string(img.width) + "x" + std::to_string(img.height) + "x" +
      std::to_string(img.channels));
  }
  const std::size_t n = img.pixel_count();
  out.resize(n * kChannels);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < kChannels; ++c) {
      out[c * n + p] = static_cast<float>(img.data[p * kChannels + c]) / 255.0f;
    }
  }
}

ClassDistribution head_softmax(const Eigen::VectorXf & z)
{
  std::array<double, kNumClasses> zd{};
  for (int i = 0; i < kNumClasses; ++i) {
    zd[i] = z[i];
  }
  return softmax(zd);
}

void forward(const NetworkArch & a, const Layout & l, const float * w, Activations & act)
{
  const int s1 = a.conv1_size();
  const int s2 = a.conv2_size();
  act.col1.resize(l.k1, l.n1);
  im2col(act.input.data(), kChannels, a.input_size, a.kernel, a.stride, s1, act.col1.data());
  const CMapM W1(w + l.w1, a.conv1_filters, l.k1);
  const CMapV b1(w + l.b1, a.conv1_filters);
  act.a1.noalias() = W1 * act.col1;
  act.a1.colwise() += b1;
  act.r1 = act.a1.cwiseMax(0.0f);

  act.col2.resize(l.k2, l.n2);
  im2col(act.r1.data(), a.conv1_filters, s1, a.kernel, a.stride, s2, act.col2.data());
  const CMapM W2(w + l.w2, a.conv2_filters, l.k2);
  const CMapV b2(w + l.b2, a.conv2_filters);
  act.a2.noalias() = W2 * act.col2;
  act.a2.colwise() += b2;
  act.r2 = act.a2.cwiseMax(0.0f);

  // r2 is row-major [filters x positions], i.e. already CHW-flat.
  const CMapV flat(act.r2.data(), l.d);
  const CMapM W3(w + l.w3, a.hidden, l.d);
  act.a3.noalias() = W3 * flat;
  act.a3 += CMapV(w + l.b3, a.hidden);
  act.r3 = act.a3.cwiseMax(0.0f);

  Eigen::VectorXf zy = CMapM(w + l.wy, kNumClasses, a.hidden) * act.r3 +
    CMapV(w + l.by, kNumClasses);
  Eigen::VectorXf zp = CMapM(w + l.wp, kNumClasses, a.hidden) * act.r3 +
    CMapV(w + l.bp, kNumClasses);
  act.py = head_softmax(zy);
  act.pp = head_softmax(zp);
}

// Adds dL/dw for one sample into g, given the logit gradients of both heads.
void backward(
  const NetworkArch & a, const Layout & l, const float * w, const Activations & act,
  const ClassDistribution & gzy_d, const ClassDistribution & gzp_d, float * g,
  std::vector<float> & scratch)
{
  Eigen::VectorXf gzy(kNumClasses), gzp(kNumClasses);
  for (int i = 0; i < kNumClasses; ++i) {
    gzy[i] = static_cast<float>(gzy_d[i]);
    gzp[i] = static_cast<float>(gzp_d[i]);
  }
  MapM(g + l.wy, kNumClasses, a.hidden).noalias() += gzy * act.r3.transpose();
  MapV(g + l.by, kNumClasses) += gzy;
  MapM(g + l.wp, kNumClasses, a.hidden).noalias() += gzp * act.r3.transpose();
  MapV(g + l.bp, kNumClasses) += gzp;

  Eigen::VectorXf dr3 = CMapM(w + l.wy, kNumClasses, a.hidden).transpose() * gzy;
  dr3.noalias() += CMapM(w + l.wp, kNumClasses, a.hidden).transpose() * gzp;
  const Eigen::VectorXf da3 = (act.a3.array() > 0.0f).select(dr3, 0.0f);
  const CMapV flat(act.r2.data(), l.d);
  MapM(g + l.w3, a.hidden, l.d).noalias() += da3 * flat.transpose();
  MapV(g + l.b3, a.hidden) += da3;

  const Eigen::VectorXf dflat = CMapM(w + l.w3, a.hidden, l.d).transpose() * da3;
  MatF da2 = CMapM(dflat.data(), a.conv2_filters, l.n2);
  da2 = (act.a2.array() > 0.0f).select(da2, 0.0f);
  MapM(g + l.w2, a.conv2_filters, l.k2).noalias() += da2 * act.col2.transpose();
  MapV(g + l.b2, a.conv2_filters) += da2.rowwise().sum();

  const MatF dcol2 = CMapM(w + l.w2, a.conv2_filters, l.k2).transpose() * da2;
  const int s1 = a.conv1_size();
  scratch.resize(static_cast<std::size_t>(a.conv1_filters) * l.n1);
  col2im(dcol2.data(), a.conv1_filters, s1, a.kernel, a.stride, a.conv2_size(), scratch.data());
  MatF da1 = CMapM(scratch.data(), a.conv1_filters, l.n1);
  da1 = (act.a1.array() > 0.0f).select(da1, 0.0f);
  MapM(g + l.w1, a.conv1_filters, l.k1).noalias() += da1 * act.col1.transpose();
  MapV(g + l.b1, a.conv1_filters) += da1.rowwise().sum();
}

Prediction to_prediction(const Activations & act)
{
  Prediction p;
  p.yaw = act.py;
  p.pitch = act.pp;
  p.action.c_yaw = argmax_class(p.yaw);
  p.action.c_pitch = argmax_class(p.pitch);
  return p;
}

void accumulate_metrics(
  TrainMetrics & m, const Activations & act, const LabeledSample & s, double lambda)
{
  m.loss += loss(act.py, act.pp, smooth_label(s.c_yaw), smooth_label(s.c_pitch), lambda);
  const int y = argmax_class(act.py);
  const int p = argmax_class(act.pp);
  m.yaw_exact += y == s.c_yaw;
  m.pitch_exact += p == s.c_pitch;
  m.yaw_within1 += std::abs(y - s.c_yaw) <= 1;
  m.pitch_within1 += std::abs(p - s.c_pitch) <= 1;
  ++m.count;
}

void finish_metrics(TrainMetrics & m)
{
  if (m.count == 0) {
    return;
  }
  const double n = static_cast<double>(m.count);
  m.loss /= n;
  m.yaw_exact /= n;
  m.pitch_exact /= n;
  m.yaw_within1 /= n;
  m.pitch_within1 /= n;
}

void check_labels(std::span<const LabeledSample> samples, const NetworkArch & a, const char * what)
{
  for (const auto & s : samples) {
    const Image & img = s.image.image;
    if (img.width != a.input_size || img.height != a.input_size || img.channels != kChannels) {
      throw DimensionError(std::string("train_bc: ") + what + " image dims do not match the network input");
    }
    if (!valid_class(s.c_yaw) || !valid_class(s.c_pitch)) {
      throw ParameterError(std::string("train_bc: ") + what + " label outside 0..6");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkArch

int NetworkArch::conv1_size() const {return conv_out(input_size, kernel, stride);}
int NetworkArch::conv2_size() const {return conv_out(conv1_size(), kernel, stride);}

std::size_t NetworkArch::flat_size() const
{
  return static_cast<std::size_t>(conv2_filters) * conv2_size() * conv2_size();
}

std::size_t NetworkArch::parameter_count() const
{
  return make_layout(*this).total;
}

void NetworkArch::validate() const
{
  if (input_size < 8 || input_size > 512) {
    throw ParameterError("network: input_size must be in [8, 512]");
  }
  if (kernel < 1 || kernel % 2 == 0 || kernel > 11) {
    throw ParameterError("network: kernel must be odd and in [1, 11]");
  }
  if (stride < 1 || stride > 4) {
    throw ParameterError("network: stride must be in [1, 4]");
  }
  if (conv1_filters < 1 || conv2_filters < 1 || hidden < 1) {
    throw ParameterError("network: layer widths must be positive");
  }
  if (conv2_size() < 1) {
    throw ParameterError("network: input too small for two strided convolutions");
  }
}

json to_json(const NetworkArch & a)
{
  return {
    {"input", {a.input_size, a.input_size, kChannels}}, {"conv1_filters", a.conv1_filters},
    {"conv2_filters", a.conv2_filters}, {"kernel", a.kernel}, {"stride", a.stride},
    {"hidden", a.hidden}, {"heads", {kNumClasses, kNumClasses}},
  };
}

NetworkArch network_arch_from_json(const json & j)
{
  JsonFields f(j, "architecture");
  NetworkArch a;
  const auto input = f.require<std::vector<int>>("input");
  if (input.size() != 3 || input[0] != input[1] || input[2] != kChannels) {
    throw ParseError("architecture: input must be [n, n, 3]");
  }
  a.input_size = input[0];
  a.conv1_filters = f.require<int>("conv1_filters");
  a.conv2_filters = f.require<int>("conv2_filters");
  a.kernel = f.require<int>("kernel");
  a.stride = f.require<int>("stride");
  a.hidden = f.require<int>("hidden");
  const auto heads = f.require<std::vector<int>>("heads");
  if (heads != std::vector<int>{kNumClasses, kNumClasses}) {
    throw ParseError("architecture: heads must be [7, 7]");
  }
  f.finish();
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// PolicyModel

PolicyModel::PolicyModel(NetworkArch arch, double lambda)
: arch_(arch), lambda_(lambda)
{
  arch_.validate();
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("policy: lambda must be in [0, 1]");
  }
  w_.assign(make_layout(arch_).total, 0.0f);
}

void PolicyModel::initialize(std::uint64_t seed)
{
  const Layout l = make_layout(arch_);
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t n, int fan_in, double gain) {
      const double lim = std::sqrt(gain / fan_in);
      for (std::size_t i = 0; i < n; ++i) {
        w_[off + i] = static_cast<float>(rng.uniform(-lim, lim));
      }
    };
  std::fill(w_.begin(), w_.end(), 0.0f);
  fill(l.w1, l.b1 - l.w1, l.k1, 6.0);
  fill(l.w2, l.b2 - l.w2, l.k2, 6.0);
  fill(l.w3, l.b3 - l.w3, l.d, 6.0);
  fill(l.wy, l.by - l.wy, arch_.hidden, 3.0);
  fill(l.wp, l.bp - l.wp, arch_.hidden, 3.0);
}

bool PolicyModel::weights_finite() const
{
  return std::all_of(w_.begin(), w_.end(), [](float v) {return std::isfinite(v);});
}

Prediction PolicyModel::predict(const SegDepthImage & ids) const
{
  const Layout l = make_layout(arch_);
  Activations act;
  load_input(arch_, ids, act.input);
  forward(arch_, l, w_.data(), act);
  return to_prediction(act);
}

// ---------------------------------------------------------------------------
// Training

void TrainerConfig::validate() const
{
  if (epochs < 1) {
    throw ParameterError("trainer: epochs must be >= 1");
  }
  if (!(lr > 0.0)) {
    throw ParameterError("trainer: lr must be positive");
  }
  if (batch < 1) {
    throw ParameterError("trainer: batch must be >= 1");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("trainer: lambda must be in [0, 1]");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ParameterError("trainer: need beta1, beta2 in [0, 1) and epsilon > 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ParameterError("trainer: validation_fraction must be in [0, 1)");
  }
  arch.validate();
}

json to_json(const TrainerConfig & c)
{
  return {
    {"epochs", c.epochs}, {"lr", c.lr}, {"batch", c.batch}, {"seed", c.seed},
    {"lambda", c.lambda}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon},
    {"validation_fraction", c.validation_fraction}, {"input_size", c.arch.input_size},
  };
}

TrainerConfig trainer_config_from_json(const json & j, TrainerConfig c)
{
  JsonFields f(j, "trainer");
  f.optional("epochs", c.epochs);
  f.optional("lr", c.lr);
  f.optional("batch", c.batch);
  f.optional("seed", c.seed);
  f.optional("lambda", c.lambda);
  f.optional("beta1", c.beta1);
  f.optional("beta2", c.beta2);
  f.optional("epsilon", c.epsilon);
  f.optional("validation_fraction", c.validation_fraction);
  f.optional("input_size", c.arch.input_size);
  f.finish();
  c.validate();
  return c;
}

json to_json(const TrainMetrics & m)
{
  return {
    {"count", m.count}, {"loss", m.loss}, {"yaw_exact", m.yaw_exact},
    {"pitch_exact", m.pitch_exact}, {"yaw_within1", m.yaw_within1},
    {"pitch_within1", m.pitch_within1},
  };
}

TrainMetrics evaluate_model(const PolicyModel & model, std::span<const LabeledSample> samples)
{
  check_labels(samples, model.arch(), "evaluation");
  const Layout l = make_layout(model.arch());
  TrainMetrics m;
  Activations act;
  for (const auto & s : samples) {
    load_input(model.arch(), s.image, act.input);
    forward(model.arch(), l, model.weights().data(), act);
    accumulate_metrics(m, act, s, model.lambda());
  }
  finish_metrics(m);
  return m;
}

TrainResult train_bc(
  std::span<const LabeledSample> train, std::span<const LabeledSample> validation,
  const TrainerConfig & config)
{
  config.validate();
  if (train.empty()) {
    throw ParameterError("train_bc: empty dataset");
  }
  check_labels(train, config.arch, "training");
  check_labels(validation, config.arch, "validation");

  TrainResult result{PolicyModel(config.arch, config.lambda), {}, {}, std::nullopt};
  PolicyModel & model = result.model;
  model.initialize(derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));

  const NetworkArch & a = config.arch;
  const Layout l = make_layout(a);
  const std::span<float> w = model.weights();
  std::vector<float> grad(l.total), m1(l.total, 0.0f), m2(l.total, 0.0f), scratch;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }

  // Smoothed targets are fixed per sample.
  std::vector<ClassDistribution> ty(train.size()), tp(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    ty[i] = smooth_label(train[i].c_yaw);
    tp[i] = smooth_label(train[i].c_pitch);
  }

  Activations act;
  long step = 0;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        load_input(a, train[i].image, act.input);
        forward(a, l, w.data(), act);
        epoch_loss += loss(act.py, act.pp, ty[i], tp[i], config.lambda);
        backward(
          a, l, w.data(), act, loss_grad_logits(act.py, ty[i], config.lambda),
          loss_grad_logits(act.pp, tp[i], config.lambda), grad.data(), scratch);
      }
      ++step;
      const float inv = 1.0f / static_cast<float>(end - start);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      const float alpha = static_cast<float>(config.lr * std::sqrt(c2) / c1);
      const float eps = static_cast<float>(config.epsilon * std::sqrt(c2));
      const float fb1 = static_cast<float>(b1);
      const float fb2 = static_cast<float>(b2);
      for (std::size_t p = 0; p < l.total; ++p) {
        const float gp = grad[p] * inv;
        m1[p] = fb1 * m1[p] + (1.0f - fb1) * gp;
        m2[p] = fb2 * m2[p] + (1.0f - fb2) * gp * gp;
        w[p] -= alpha * m1[p] / (std::sqrt(m2[p]) + eps);
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(train.size()));
  }
  if (!model.weights_finite()) {
    throw Error("train_bc: training diverged (non-finite weights)");
  }

  result.train = evaluate_model(model, train);
  if (!validation.empty()) {
    result.validation = evaluate_model(model, validation);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model IO

json model_to_json(const PolicyModel & model)
{
  const auto w = model.weights();
  std::vector<std::uint8_t> bytes(w.size() * sizeof(float));
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &w[i], sizeof(u));
    for (int b = 0; b < 4; ++b) {
      bytes[4 * i + b] = static_cast<std::uint8_t>(u >> (8 * b));
    }
  }
  return {
    {"format", kModelFormat}, {"version", kModelVersion},
    {"architecture", to_json(model.arch())}, {"lambda", model.lambda()},
    {"parameter_count", w.size()}, {"weights_f32le", base64_encode(bytes)},
  };
}

PolicyModel model_from_json(const json & j, const std::optional<NetworkArch> & expected)
{
  JsonFields f(j, "model");
  if (f.require<std::string>("format") != kModelFormat) {
    throw ParseError("model: unrecognized format");
  }
  if (f.require<int>("version") != kModelVersion) {
    throw ParseError("model: unsupported version");
  }
  if (f.has("provenance")) {
    f.sub("provenance");  // informational; written by the CLI
  }
  const NetworkArch arch = network_arch_from_json(f.sub("architecture"));
  if (expected && !(arch == *expected)) {
    throw ParseError("model: architecture does not match the configured network");
  }
  PolicyModel model(arch, f.require<double>("lambda"));
  const auto count = f.require<std::size_t>("parameter_count");
  const auto bytes = base64_decode(f.require<std::string>("weights_f32le"));
  f.finish();
  if (count != model.weights().size() || bytes.size() != count * sizeof(float)) {
    throw ParseError("model: weight count does not match the architecture");
  }
  auto w = model.weights();
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
      u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    }
    std::memcpy(&w[i], &u, sizeof(u));
  }
  if (!model.weights_finite()) {
    throw ParseError("model: non-finite weights");
  }
  return model;
}

void save_model(const std::string & path, const PolicyModel & model)
{
  write_file(path, model_to_json(model).dump() + "\n");
}

PolicyModel load_model(const std::string & path, const std::optional<NetworkArch> & expected)
{
  json j;
  try {
    j = json::parse(read_file_text(path));
  } catch (const json::parse_error &) {
    throw ParseError("model: " + path + " is not valid JSON");
  }
  return model_from_json(j, expected);
}

}  // namespace uivnav
