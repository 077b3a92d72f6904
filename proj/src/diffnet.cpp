#include "cgpi/diffnet.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cgpi {

namespace {

constexpr char kMagic[8] = {'C', 'G', 'P', 'I', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

[[noreturn]] void shape_error(const std::string& what) {
  throw std::invalid_argument("diffnet: " + what);
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, int tanh_output_dims, Rng& rng)
    : layer_sizes_(std::move(layer_sizes)), tanh_output_dims_(tanh_output_dims) {
  if (layer_sizes_.size() < 2) shape_error("need at least input and output layer");
  for (int s : layer_sizes_)
    if (s <= 0) shape_error("layer sizes must be positive");
  if (tanh_output_dims_ < 0 || tanh_output_dims_ > layer_sizes_.back())
    shape_error("tanh_output_dims out of range");
  build_offsets();
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes_[l]));
    auto w = weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    auto b = bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = rng.uniform(-bound, bound);
  }
}

void Mlp::build_offsets() {
  Eigen::Index off = 0;
  weight_offsets_.clear();
  bias_offsets_.clear();
  for (int l = 0; l < num_layers(); ++l) {
    weight_offsets_.push_back(off);
    off += static_cast<Eigen::Index>(layer_sizes_[l + 1]) * layer_sizes_[l];
    bias_offsets_.push_back(off);
    off += layer_sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(off);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + weight_offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + weight_offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offsets_[layer], layer_sizes_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offsets_[layer], layer_sizes_[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, ForwardCache* cache) const {
  if (inputs.rows() != input_dim())
    shape_error("forward: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                std::to_string(input_dim()));
  if (cache) {
    cache->activations.clear();
    cache->activations.reserve(num_layers() + 1);
    cache->activations.push_back(inputs);
  }
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z;
    z.noalias() = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      a = z.cwiseMax(0.0);  // ReLU; derivative at exactly 0 is taken as 0
    } else {
      a = std::move(z);
      if (tanh_output_dims_ > 0)
        a.topRows(tanh_output_dims_) = a.topRows(tanh_output_dims_).array().tanh();
    }
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward(Eigen::MatrixXd(input), nullptr).col(0);
}

GradientBundle Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const {
  const int layers = num_layers();
  if (static_cast<int>(cache.activations.size()) != layers + 1)
    shape_error("backward: forward cache does not match network");
  if (upstream.rows() != output_dim() || upstream.cols() != cache.activations.back().cols())
    shape_error("backward: upstream gradient shape mismatch");

  GradientBundle out;
  out.param_grads = Eigen::VectorXd::Zero(params_.size());

  Eigen::MatrixXd delta = upstream;
  if (tanh_output_dims_ > 0) {
    const auto& y = cache.activations.back();
    delta.topRows(tanh_output_dims_).array() *=
        1.0 - y.topRows(tanh_output_dims_).array().square();
  }
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd> gw(out.param_grads.data() + weight_offsets_[l],
                                   layer_sizes_[l + 1], layer_sizes_[l]);
    gw.noalias() = delta * cache.activations[l].transpose();
    Eigen::Map<Eigen::VectorXd> gb(out.param_grads.data() + bias_offsets_[l],
                                   layer_sizes_[l + 1]);
    gb = delta.rowwise().sum();
    Eigen::MatrixXd prev;
    prev.noalias() = weight(l).transpose() * delta;
    if (l > 0) {
      prev.array() *= (cache.activations[l].array() > 0.0).cast<double>();
      delta = std::move(prev);
    } else {
      out.input_grads = std::move(prev);
    }
  }
  return out;
}

GradientBundle Mlp::backward(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const {
  ForwardCache cache;
  forward(Eigen::MatrixXd(input), &cache);
  return backward(cache, Eigen::MatrixXd(upstream));
}

void Mlp::check_finite(const std::string& context) const {
  if (!params_.allFinite())
    throw std::runtime_error("diffnet: non-finite parameter in " + context);
}

void Mlp::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("diffnet: cannot open " + path + " for writing");
  f.write(kMagic, sizeof(kMagic));
  auto put_u32 = [&f](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  put_u32(kFormatVersion);
  put_u32(static_cast<std::uint32_t>(layer_sizes_.size()));
  for (int s : layer_sizes_) put_u32(static_cast<std::uint32_t>(s));
  put_u32(static_cast<std::uint32_t>(tanh_output_dims_));  // activation tag
  for (int l = 0; l < num_layers(); ++l) {
    const auto w = weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double v = w(r, c);
        f.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    const auto b = bias(l);
    f.write(reinterpret_cast<const char*>(b.data()), sizeof(double) * b.size());
  }
  if (!f) throw std::runtime_error("diffnet: write failed for " + path);
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("diffnet: cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("diffnet: bad magic in " + path);
  auto get_u32 = [&f, &path] {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f) throw std::runtime_error("diffnet: truncated checkpoint " + path);
    return v;
  };
  const std::uint32_t version = get_u32();
  if (version != kFormatVersion)
    throw std::runtime_error("diffnet: unsupported checkpoint version in " + path);
  const std::uint32_t n_sizes = get_u32();
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("diffnet: corrupt checkpoint " + path);
  Mlp net;
  net.layer_sizes_.resize(n_sizes);
  for (auto& s : net.layer_sizes_) s = static_cast<int>(get_u32());
  net.tanh_output_dims_ = static_cast<int>(get_u32());
  net.build_offsets();
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        double v;
        f.read(reinterpret_cast<char*>(&v), sizeof(v));
        w(r, c) = v;
      }
    auto b = net.bias(l);
    f.read(reinterpret_cast<char*>(b.data()), sizeof(double) * b.size());
  }
  if (!f) throw std::runtime_error("diffnet: truncated checkpoint " + path);
  return net;
}

AdamState AdamState::zeros(Eigen::Index n, double lr) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  s.learning_rate = lr;
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               const std::string& context) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size())
    shape_error("adam_step: shape mismatch");
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < grads.size(); ++i)
      if (!std::isfinite(grads[i])) {
        bad = i;
        break;
      }
    throw std::runtime_error("diffnet: non-finite gradient at flat index " + std::to_string(bad) +
                             (context.empty() ? "" : " in " + context));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment.array() =
      state.beta2 * state.second_moment.array() + (1.0 - state.beta2) * grads.array().square();
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.learning_rate * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + state.epsilon);
}

void ema_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau) {
  if (target.size() != online.size()) shape_error("ema_update: shape mismatch");
  target = (1.0 - tau) * target + tau * online;
}

}  // namespace cgpi
