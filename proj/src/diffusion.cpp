#include "laeids/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "laeids/binio.hpp"
#include "laeids/digest.hpp"
#include "laeids/rng.hpp"

namespace laeids::diffusion {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw InvalidRange("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw InvalidRange("betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  if (steps == 1) {
    s.betas[0] = beta_start;
  } else {
    const double span = beta_end - beta_start;
    for (int i = 0; i < steps; ++i) {
      s.betas[i] = beta_start + span * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
  }
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    s.alphas[i] = 1.0 - s.betas[i];
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> eps,
                             const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps) throw StepOutOfRange("timestep outside [1, T]");
  if (x0.size() != eps.size()) throw LengthMismatch("x0 and eps lengths differ");
  const double ab = schedule.alpha_bars[static_cast<size_t>(t) - 1];
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = signal * x0[i] + noise * eps[i];
  return out;
}

int Denoiser::feature_dim() const {
  if (layers_.size() < 2) return 0;
  return layers_[layers_.size() - 2].out;
}

size_t Denoiser::param_count() const {
  size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

Denoiser Denoiser::create(int image_dim, std::span<const int> hidden_sizes, uint64_t seed) {
  if (image_dim < 1) throw InvalidRange("image dimension must be positive");
  if (hidden_sizes.empty()) throw InvalidRange("denoiser needs at least one hidden layer");
  Denoiser d;
  d.image_dim_ = image_dim;
  Rng rng(derive_seed(seed, 0x494E4954ull));  // "INIT"
  int in = image_dim + 1;  // +1 for the timestep scalar
  std::vector<int> outs(hidden_sizes.begin(), hidden_sizes.end());
  outs.push_back(image_dim);
  for (int out : outs) {
    if (out < 1) throw InvalidRange("layer width must be positive");
    DenoiserLayer layer;
    layer.in = in;
    layer.out = out;
    const double scale = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weights.resize(static_cast<size_t>(in) * static_cast<size_t>(out));
    for (auto& w : layer.weights) w = rng.uniform(-scale, scale);
    layer.biases.assign(static_cast<size_t>(out), 0.0);
    d.layers_.push_back(std::move(layer));
    in = out;
  }
  return d;
}

std::vector<double> Denoiser::params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.biases.begin(), l.biases.end());
  }
  return flat;
}

void Denoiser::set_params(std::span<const double> flat) {
  if (flat.size() != param_count()) throw ShapeMismatch("parameter vector has wrong length");
  size_t pos = 0;
  for (auto& l : layers_) {
    std::copy_n(flat.begin() + static_cast<ptrdiff_t>(pos), l.weights.size(), l.weights.begin());
    pos += l.weights.size();
    std::copy_n(flat.begin() + static_cast<ptrdiff_t>(pos), l.biases.size(), l.biases.begin());
    pos += l.biases.size();
  }
}

namespace {

// Flat parameter trainer shared by loss evaluation and pretraining. The
// float instantiation is the optional fast mode; tests run the double one.
template <typename Scalar>
struct MlpTrainer {
  int image_dim = 0;
  std::vector<std::pair<int, int>> shapes;  // (in, out) per layer
  std::vector<size_t> w_off, b_off;
  std::vector<Scalar> params;
  std::vector<Scalar> grads;
  std::vector<std::vector<Scalar>> act;    // act[0] input, act[l+1] layer outputs
  std::vector<Scalar> delta, delta_prev;

  void init_from(const Denoiser& d) {
    image_dim = d.image_dim();
    shapes.clear();
    w_off.clear();
    b_off.clear();
    size_t pos = 0;
    for (const auto& l : d.layers()) {
      shapes.emplace_back(l.in, l.out);
      w_off.push_back(pos);
      pos += l.weights.size();
      b_off.push_back(pos);
      pos += l.biases.size();
    }
    params.resize(pos);
    pos = 0;
    for (const auto& l : d.layers()) {
      for (double w : l.weights) params[pos++] = static_cast<Scalar>(w);
      for (double b : l.biases) params[pos++] = static_cast<Scalar>(b);
    }
    grads.assign(params.size(), Scalar(0));
    act.resize(shapes.size() + 1);
    act[0].resize(static_cast<size_t>(shapes[0].first));
    for (size_t l = 0; l < shapes.size(); ++l) act[l + 1].resize(static_cast<size_t>(shapes[l].second));
  }

  void export_to(Denoiser& d) const {
    size_t pos = 0;
    for (auto& l : d.layers()) {
      for (auto& w : l.weights) w = static_cast<double>(params[pos++]);
      for (auto& b : l.biases) b = static_cast<double>(params[pos++]);
    }
  }

  void zero_grads() { std::fill(grads.begin(), grads.end(), Scalar(0)); }

  void forward() {
    for (size_t l = 0; l < shapes.size(); ++l) {
      const auto [in, out] = shapes[l];
      const Scalar* w = params.data() + w_off[l];
      const Scalar* b = params.data() + b_off[l];
      const Scalar* a = act[l].data();
      Scalar* z = act[l + 1].data();
      for (int o = 0; o < out; ++o) {
        Scalar sum = b[o];
        const Scalar* wr = w + static_cast<size_t>(o) * static_cast<size_t>(in);
        for (int i = 0; i < in; ++i) sum += wr[i] * a[i];
        z[o] = sum;
      }
      if (l + 1 < shapes.size()) {
        for (int o = 0; o < out; ++o) z[o] = std::tanh(z[o]);
      }
    }
  }

  // Accumulates gradients of the mean-squared noise error into `grads`.
  double backward(const Scalar* eps) {
    const size_t last = shapes.size() - 1;
    const int out_dim = shapes[last].second;
    const Scalar* out = act[last + 1].data();
    double loss = 0.0;
    delta.resize(static_cast<size_t>(out_dim));
    for (int i = 0; i < out_dim; ++i) {
      const Scalar diff = out[i] - eps[i];
      loss += static_cast<double>(diff) * static_cast<double>(diff);
      delta[static_cast<size_t>(i)] = Scalar(2) * diff / static_cast<Scalar>(out_dim);
    }
    loss /= static_cast<double>(out_dim);

    for (size_t l = shapes.size(); l-- > 0;) {
      const auto [in, out_w] = shapes[l];
      const Scalar* a = act[l].data();
      Scalar* gw = grads.data() + w_off[l];
      Scalar* gb = grads.data() + b_off[l];
      const Scalar* w = params.data() + w_off[l];
      for (int o = 0; o < out_w; ++o) {
        const Scalar d = delta[static_cast<size_t>(o)];
        Scalar* gr = gw + static_cast<size_t>(o) * static_cast<size_t>(in);
        for (int i = 0; i < in; ++i) gr[i] += d * a[i];
        gb[o] += d;
      }
      if (l == 0) break;
      delta_prev.assign(static_cast<size_t>(in), Scalar(0));
      for (int o = 0; o < out_w; ++o) {
        const Scalar d = delta[static_cast<size_t>(o)];
        const Scalar* wr = w + static_cast<size_t>(o) * static_cast<size_t>(in);
        for (int i = 0; i < in; ++i) delta_prev[static_cast<size_t>(i)] += wr[i] * d;
      }
      // tanh derivative via the stored activations
      const Scalar* al = act[l].data();
      delta.resize(static_cast<size_t>(in));
      for (int i = 0; i < in; ++i) {
        delta[static_cast<size_t>(i)] = delta_prev[static_cast<size_t>(i)] * (Scalar(1) - al[i] * al[i]);
      }
    }
    return loss;
  }

  void load_input(std::span<const double> x_t, int t, int total_steps) {
    Scalar* a = act[0].data();
    for (size_t i = 0; i < x_t.size(); ++i) a[i] = static_cast<Scalar>(x_t[i]);
    a[x_t.size()] = static_cast<Scalar>(static_cast<double>(t) / static_cast<double>(total_steps));
  }
};

std::vector<double> forward_only(const Denoiser& d, std::span<const double> x_t, int t,
                                 int total_steps, bool want_hidden) {
  if (static_cast<int>(x_t.size()) != d.image_dim()) {
    throw ShapeMismatch("input length does not match denoiser image dimension");
  }
  const auto& layers = d.layers();
  std::vector<double> a(x_t.begin(), x_t.end());
  a.push_back(static_cast<double>(t) / static_cast<double>(total_steps));
  std::vector<double> z;
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    z.assign(static_cast<size_t>(layer.out), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      double sum = layer.biases[static_cast<size_t>(o)];
      const double* wr = layer.weights.data() + static_cast<size_t>(o) * static_cast<size_t>(layer.in);
      for (int i = 0; i < layer.in; ++i) sum += wr[i] * a[static_cast<size_t>(i)];
      z[static_cast<size_t>(o)] = sum;
    }
    if (l + 1 < layers.size()) {
      for (auto& v : z) v = std::tanh(v);
      if (want_hidden && l + 2 == layers.size()) return z;
    }
    a = z;
  }
  return a;
}

}  // namespace

std::vector<double> Denoiser::predict_noise(std::span<const double> x_t, int t, int total_steps) const {
  return forward_only(*this, x_t, t, total_steps, /*want_hidden=*/false);
}

std::vector<double> Denoiser::hidden_features(std::span<const double> x_t, int t, int total_steps) const {
  return forward_only(*this, x_t, t, total_steps, /*want_hidden=*/true);
}

LossGrad denoise_loss(const Denoiser& d, std::span<const double> x0, int t,
                      std::span<const double> eps, const NoiseSchedule& schedule) {
  if (static_cast<int>(x0.size()) != d.image_dim()) {
    throw ShapeMismatch("image length does not match denoiser");
  }
  const auto x_t = q_sample(x0, t, eps, schedule);
  MlpTrainer<double> trainer;
  trainer.init_from(d);
  trainer.load_input(x_t, t, schedule.steps);
  trainer.forward();
  std::vector<double> eps_copy(eps.begin(), eps.end());
  LossGrad lg;
  lg.loss = trainer.backward(eps_copy.data());
  if (!std::isfinite(lg.loss)) throw NonFiniteLoss("denoising loss is not finite");
  lg.grad.assign(trainer.grads.begin(), trainer.grads.end());
  return lg;
}

namespace {

template <typename Scalar>
std::vector<double> train_loop(MlpTrainer<Scalar>& trainer, std::span<const imaging::TrafficImage> images,
                               const PretrainConfig& cfg, const NoiseSchedule& schedule, double lr) {
  Rng rng(derive_seed(cfg.seed, 0x545241494Eull));  // "TRAIN"
  const size_t n = images.size();
  const int image_dim = trainer.image_dim;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<double> eps(static_cast<size_t>(image_dim));
  std::vector<Scalar> eps_s(static_cast<size_t>(image_dim));
  std::vector<double> epoch_losses;
  epoch_losses.reserve(static_cast<size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    size_t done = 0;
    while (done < n) {
      const size_t batch = std::min(static_cast<size_t>(cfg.batch_size), n - done);
      trainer.zero_grads();
      for (size_t k = 0; k < batch; ++k) {
        const auto& img = images[order[done + k]];
        const int t = static_cast<int>(rng.uniform_int(1, schedule.steps));
        for (auto& e : eps) e = rng.normal();
        const auto x_t = q_sample(img.pixels, t, eps, schedule);
        trainer.load_input(x_t, t, schedule.steps);
        trainer.forward();
        for (size_t i = 0; i < eps.size(); ++i) eps_s[i] = static_cast<Scalar>(eps[i]);
        loss_sum += trainer.backward(eps_s.data());
      }
      const Scalar step = static_cast<Scalar>(lr / static_cast<double>(batch));
      for (size_t i = 0; i < trainer.params.size(); ++i) trainer.params[i] -= step * trainer.grads[i];
      done += batch;
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) throw NonFiniteLoss("epoch loss diverged");
    epoch_losses.push_back(mean_loss);
  }
  return epoch_losses;
}

template <typename Scalar>
std::vector<double> run_pretrain(Denoiser& d, std::span<const imaging::TrafficImage> images,
                                 const PretrainConfig& cfg, const NoiseSchedule& schedule, double lr) {
  MlpTrainer<Scalar> trainer;
  trainer.init_from(d);
  auto losses = train_loop(trainer, images, cfg, schedule, lr);
  trainer.export_to(d);
  return losses;
}

}  // namespace

FeatureMemory pretrain(std::span<const imaging::TrafficImage> images, const PretrainConfig& cfg) {
  if (images.empty()) throw EmptyInput("no images to pretrain on");
  const int image_dim = static_cast<int>(images[0].pixels.size());
  for (const auto& img : images) {
    if (static_cast<int>(img.pixels.size()) != image_dim) {
      throw ShapeMismatch("all pretraining images must share one shape");
    }
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw InvalidRange("bad pretraining config");

  FeatureMemory memory;
  memory.schedule = make_schedule(cfg.steps, cfg.beta_start, cfg.beta_end);
  memory.extract_step = std::max(1, cfg.steps / 4);

  std::vector<double> losses;
  double lr = cfg.learning_rate;
  for (int attempt = 0;; ++attempt) {
    memory.denoiser = Denoiser::create(image_dim, cfg.hidden_sizes, cfg.seed);
    try {
      losses = cfg.float32 ? run_pretrain<float>(memory.denoiser, images, cfg, memory.schedule, lr)
                           : run_pretrain<double>(memory.denoiser, images, cfg, memory.schedule, lr);
      break;
    } catch (const NonFiniteLoss&) {
      if (attempt >= 1) throw;
      lr *= 0.5;  // one retry at halved learning rate
    }
  }

  memory.feature_dim = memory.denoiser.feature_dim();
  memory.representations.reserve(images.size());
  for (const auto& img : images) {
    memory.representations.push_back(
        extract_features(memory.denoiser, memory.schedule, img, memory.extract_step));
  }

  Digest cfg_digest;
  cfg_digest.add(cfg.epochs).add(cfg.batch_size).add(cfg.learning_rate);
  cfg_digest.add(static_cast<uint64_t>(cfg.seed)).add(cfg.steps);
  cfg_digest.add(cfg.beta_start).add(cfg.beta_end);
  for (int h : cfg.hidden_sizes) cfg_digest.add(h);
  cfg_digest.add(static_cast<uint64_t>(cfg.float32 ? 1 : 0));

  nlohmann::ordered_json prov;
  prov["dataset"] = cfg.dataset_name;
  prov["config_digest"] = cfg_digest.hex();
  prov["image_count"] = images.size();
  prov["image_shape"] = {images[0].height, images[0].width};
  prov["epoch_mean_loss"] = losses;
  prov["learning_rate_used"] = lr;
  prov["float32"] = cfg.float32;
  memory.provenance = prov.dump();
  return memory;
}

std::vector<double> extract_features(const Denoiser& d, const NoiseSchedule& schedule,
                                     const imaging::TrafficImage& image, int extract_step) {
  if (static_cast<int>(image.pixels.size()) != d.image_dim()) {
    throw ShapeMismatch("image shape does not match the trained denoiser");
  }
  const std::vector<double> zero(image.pixels.size(), 0.0);
  const auto x_t = q_sample(image.pixels, extract_step, zero, schedule);
  return d.hidden_features(x_t, extract_step, schedule.steps);
}

std::vector<double> extract_features(const FeatureMemory& memory, const imaging::TrafficImage& image) {
  return extract_features(memory.denoiser, memory.schedule, image, memory.extract_step);
}

void save_memory(const std::string& path, const FeatureMemory& memory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write("FMEM", 4);
  BinaryWriter w(out);
  w.u32(1);  // version
  w.u32(static_cast<uint32_t>(memory.schedule.steps));
  w.f64_span(memory.schedule.betas);
  w.u32(static_cast<uint32_t>(memory.denoiser.image_dim()));
  w.u32(static_cast<uint32_t>(memory.denoiser.layers().size()));
  for (const auto& l : memory.denoiser.layers()) {
    w.u32(static_cast<uint32_t>(l.in));
    w.u32(static_cast<uint32_t>(l.out));
  }
  const auto flat = memory.denoiser.params();
  w.f64_span(flat);
  w.u32(static_cast<uint32_t>(memory.representations.size()));
  w.u32(static_cast<uint32_t>(memory.feature_dim));
  for (const auto& phi : memory.representations) {
    for (double v : phi) w.f64(v);
  }
  w.u32(static_cast<uint32_t>(memory.extract_step));
  w.str(memory.provenance);
}

FeatureMemory load_memory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "FMEM") throw CorruptFile("not a feature memory bundle");
  BinaryReader r(in);
  const uint32_t version = r.u32();
  if (version != 1) throw CorruptFile("unsupported memory bundle version");

  FeatureMemory memory;
  const int steps = static_cast<int>(r.u32());
  const auto betas = r.f64_span();
  if (static_cast<int>(betas.size()) != steps) throw CorruptFile("schedule length mismatch");
  memory.schedule.steps = steps;
  memory.schedule.betas = betas;
  memory.schedule.alphas.resize(betas.size());
  memory.schedule.alpha_bars.resize(betas.size());
  double running = 1.0;
  for (size_t i = 0; i < betas.size(); ++i) {
    memory.schedule.alphas[i] = 1.0 - betas[i];
    running *= memory.schedule.alphas[i];
    memory.schedule.alpha_bars[i] = running;
  }

  const int image_dim = static_cast<int>(r.u32());
  const uint32_t n_layers = r.u32();
  std::vector<int> hidden;
  std::vector<std::pair<int, int>> shapes;
  for (uint32_t i = 0; i < n_layers; ++i) {
    const int lin = static_cast<int>(r.u32());
    const int lout = static_cast<int>(r.u32());
    shapes.emplace_back(lin, lout);
    if (i + 1 < n_layers) hidden.push_back(lout);
  }
  memory.denoiser = Denoiser::create(image_dim, hidden, 0);
  const auto flat = r.f64_span();
  memory.denoiser.set_params(flat);

  const uint32_t n_phi = r.u32();
  memory.feature_dim = static_cast<int>(r.u32());
  memory.representations.resize(n_phi);
  for (auto& phi : memory.representations) {
    phi.resize(static_cast<size_t>(memory.feature_dim));
    for (auto& v : phi) v = r.f64();
  }
  memory.extract_step = static_cast<int>(r.u32());
  memory.provenance = r.str();
  return memory;
}

}  // namespace laeids::diffusion
