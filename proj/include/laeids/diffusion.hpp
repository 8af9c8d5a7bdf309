#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laeids/errors.hpp"
#include "laeids/imaging.hpp"

namespace laeids::diffusion {

struct StepOutOfRange : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct NonFiniteLoss : Error {
  using Error::Error;
};

// Forward-process schedule: betas linearly interpolated over [beta_start,
// beta_end] inclusive, alphas = 1 - beta, alpha_bars = running products.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
};

NoiseSchedule make_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, t in [1, T].
std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> eps,
                             const NoiseSchedule& schedule);

struct DenoiserLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> biases;
};

// Fully connected noise predictor: input is the flattened noised image plus
// the timestep t/T appended as one extra scalar; hidden layers use tanh, the
// output layer is linear and predicts the injected noise.
class Denoiser {
 public:
  Denoiser() = default;

  static Denoiser create(int image_dim, std::span<const int> hidden_sizes, uint64_t seed);

  int image_dim() const { return image_dim_; }
  // Width of the last hidden layer; its activations are the extracted
  // representation.
  int feature_dim() const;
  size_t param_count() const;

  // Flat parameter vector: per layer, weights (row-major) then biases,
  // layers in forward order. Pairs with the gradient layout of loss_grad.
  std::vector<double> params() const;
  void set_params(std::span<const double> flat);

  std::vector<double> predict_noise(std::span<const double> x_t, int t, int total_steps) const;
  std::vector<double> hidden_features(std::span<const double> x_t, int t, int total_steps) const;

  const std::vector<DenoiserLayer>& layers() const { return layers_; }
  std::vector<DenoiserLayer>& layers() { return layers_; }

 private:
  int image_dim_ = 0;
  std::vector<DenoiserLayer> layers_;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as Denoiser::params()
};

// Mean squared error between the predicted noise at q_sample(x0, t, eps) and
// eps, together with the exact analytic gradient for every parameter.
LossGrad denoise_loss(const Denoiser& d, std::span<const double> x0, int t,
                      std::span<const double> eps, const NoiseSchedule& schedule);

struct PretrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::vector<int> hidden_sizes{256, 64};
  bool float32 = false;  // fast mode; tests use the 64-bit default
  std::string dataset_name;
};

// The persistent memory: trained denoiser, its schedule, and one
// representation vector per pretraining image.
struct FeatureMemory {
  Denoiser denoiser;
  NoiseSchedule schedule;
  std::vector<std::vector<double>> representations;
  int feature_dim = 0;
  int extract_step = 0;  // defaults to steps / 4
  std::string provenance;  // JSON: dataset, config digest, epoch losses
};

FeatureMemory pretrain(std::span<const imaging::TrafficImage> images, const PretrainConfig& cfg);

// Deterministic readout: the last hidden layer's activations on
// q_sample(image, extract_step, zero noise).
std::vector<double> extract_features(const Denoiser& d, const NoiseSchedule& schedule,
                                     const imaging::TrafficImage& image, int extract_step);
std::vector<double> extract_features(const FeatureMemory& memory, const imaging::TrafficImage& image);

// Single bundle file: versioned header, schedule, layer shapes, 64-bit
// little-endian parameter block, representation matrix, provenance trailer.
void save_memory(const std::string& path, const FeatureMemory& memory);
FeatureMemory load_memory(const std::string& path);

}  // namespace laeids::diffusion
