// SPDX-License-Identifier: Apache-2.0
#include "dpl/networks.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dpl/ops.hpp"

namespace dpl::inline DPL_PRECISION_NS {

Conv2dLayer Conv2dLayer::he_init(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                                 std::size_t padding, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(in * kernel * kernel));
  std::vector<real> w(out * in * kernel * kernel);
  for (auto& v : w) v = static_cast<real>(rng.normal(0.0, stddev));
  return {Tensor::from_data({out, in, kernel, kernel}, std::move(w), true), Tensor::zeros({out}, true), stride,
          padding};
}

Conv2dLayer Conv2dLayer::zeros(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  return {Tensor::zeros({out, in, kernel, kernel}, true), Tensor::zeros({out}, true), stride, padding};
}

Tensor Conv2dLayer::forward(Tape& tape, const Tensor& x) const {
  return ops::conv2d(tape, x, weight, bias, stride, padding);
}

void set_trainable(const NamedParams& params, bool trainable) {
  for (const auto& [name, t] : params) const_cast<Tensor&>(t).set_requires_grad(trainable);
}

std::uint64_t parameter_hash(const NamedParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params) {
    const auto data = t.data();
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size_bytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double parameter_norm(const NamedParams& params) {
  double total = 0.0;
  for (const auto& [name, t] : params)
    for (real v : t.data()) total += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(total);
}

std::vector<Tensor> tensors_of(const NamedParams& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

NamedTensors to_bundle(const NamedParams& params) {
  NamedTensors bundle;
  for (const auto& [name, t] : params) {
    if (!bundle.emplace(name, t.detach()).second) throw std::logic_error("duplicate parameter name " + name);
  }
  return bundle;
}

void load_bundle(const NamedParams& params, const NamedTensors& bundle) {
  for (const auto& [name, t] : params) {
    auto it = bundle.find(name);
    if (it == bundle.end()) throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape() != t.shape())
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " + shape_to_string(it->second.shape()) +
                               ", network expects " + shape_to_string(t.shape()));
    auto dst = const_cast<Tensor&>(t).mutable_data();
    const auto src = it->second.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

namespace {

void append(NamedParams& out, const std::string& prefix, const Conv2dLayer& layer) {
  out.emplace_back(prefix + ".weight", layer.weight);
  out.emplace_back(prefix + ".bias", layer.bias);
}

}  // namespace

GeneratorF::GeneratorF(Rng& rng)
    : enc1_(Conv2dLayer::he_init(3, 16, 3, 1, 1, rng)),
      enc2_(Conv2dLayer::he_init(16, 32, 3, 2, 1, rng)),
      enc3_(Conv2dLayer::he_init(32, 32, 3, 1, 1, rng)),
      dec1_(Conv2dLayer::he_init(32, 16, 3, 1, 1, rng)),
      head_(Conv2dLayer::zeros(16, 3, 3, 1, 1)) {}

Tensor GeneratorF::forward(Tape& tape, const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != 3)
    throw std::invalid_argument("generator: expected input [3,H,W], got " + shape_to_string(x.shape()));
  if (x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0 || x.dim(1) < 8 || x.dim(2) < 8)
    throw std::invalid_argument("generator: spatial extent must be even and >= 8, got " + shape_to_string(x.shape()));
  auto h = ops::relu(tape, enc1_.forward(tape, x));
  h = ops::relu(tape, enc2_.forward(tape, h));
  h = ops::relu(tape, enc3_.forward(tape, h));
  h = ops::upsample_nearest2(tape, h);
  h = ops::relu(tape, dec1_.forward(tape, h));
  return ops::add(tape, head_.forward(tape, h), x);
}

NamedParams GeneratorF::named_parameters() const {
  NamedParams p;
  append(p, "f.enc1", enc1_);
  append(p, "f.enc2", enc2_);
  append(p, "f.enc3", enc3_);
  append(p, "f.dec1", dec1_);
  append(p, "f.head", head_);
  return p;
}

FeatureNetPsi::FeatureNetPsi(Rng& rng)
    : conv1_(Conv2dLayer::he_init(3, 16, 3, 1, 1, rng)),
      conv2_(Conv2dLayer::he_init(16, 32, 3, 1, 1, rng)),
      conv3_(Conv2dLayer::he_init(32, 64, 3, 1, 1, rng)) {
  const double stddev = std::sqrt(1.0 / 64.0);
  std::vector<real> w(kClasses * 64);
  for (auto& v : w) v = static_cast<real>(rng.normal(0.0, stddev));
  head_weight_ = Tensor::from_data({kClasses, 64}, std::move(w), true);
  head_bias_ = Tensor::zeros({kClasses}, true);
}

FeatureSet FeatureNetPsi::forward(Tape& tape, const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != 3)
    throw std::invalid_argument("feature net: expected input [3,H,W], got " + shape_to_string(x.shape()));
  if (x.dim(1) % 4 != 0 || x.dim(2) % 4 != 0)
    throw std::invalid_argument("feature net: spatial extent must be divisible by 4, got " + shape_to_string(x.shape()));
  FeatureSet taps;
  taps.push_back(ops::relu(tape, conv1_.forward(tape, x)));
  taps.push_back(ops::relu(tape, conv2_.forward(tape, ops::max_pool2(tape, taps[0]))));
  taps.push_back(ops::relu(tape, conv3_.forward(tape, ops::max_pool2(tape, taps[1]))));
  return taps;
}

Tensor FeatureNetPsi::logits(Tape& tape, const Tensor& x) const {
  const auto taps = forward(tape, x);
  return ops::linear(tape, ops::global_avg_pool(tape, taps.back()), head_weight_, head_bias_);
}

NamedParams FeatureNetPsi::named_parameters() const {
  NamedParams p;
  append(p, "psi.conv1", conv1_);
  append(p, "psi.conv2", conv2_);
  append(p, "psi.conv3", conv3_);
  return p;
}

NamedParams FeatureNetPsi::head_parameters() const {
  return {{"psi.head.weight", head_weight_}, {"psi.head.bias", head_bias_}};
}

SelectionPhi::SelectionPhi(Rng& rng, double noise) {
  for (std::size_t c : FeatureNetPsi::kTapChannels) {
    const std::size_t half = c / 2;
    std::vector<real> a(c * c), b(half * c);
    for (std::size_t o = 0; o < c; ++o)
      for (std::size_t i = 0; i < c; ++i) a[o * c + i] = static_cast<real>((o == i ? 1.0 : 0.0) + noise * rng.normal());
    for (std::size_t o = 0; o < half; ++o)
      for (std::size_t i = 0; i < c; ++i) b[o * c + i] = static_cast<real>((o == i ? 1.0 : 0.0) + noise * rng.normal());
    Block block;
    block.expand = {Tensor::from_data({c, c, 1, 1}, std::move(a), true), Tensor::zeros({c}, true), 1, 0};
    block.reduce = {Tensor::from_data({half, c, 1, 1}, std::move(b), true), Tensor::zeros({half}, true), 1, 0};
    blocks_.push_back(std::move(block));
  }
}

FeatureSet SelectionPhi::forward(Tape& tape, const FeatureSet& features) const {
  if (features.size() != blocks_.size())
    throw std::invalid_argument("feature selection: expected " + std::to_string(blocks_.size()) + " taps, got " +
                                std::to_string(features.size()));
  FeatureSet out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::size_t expected = blocks_[i].expand.weight.dim(1);
    if (f.rank() != 3 || f.dim(0) != expected)
      throw std::invalid_argument("feature selection: tap " + std::to_string(i) + " expects " +
                                  std::to_string(expected) + " channels, got " + shape_to_string(f.shape()));
    auto h = ops::relu(tape, blocks_[i].expand.forward(tape, f));
    out.push_back(blocks_[i].reduce.forward(tape, h));
  }
  return out;
}

NamedParams SelectionPhi::named_parameters() const {
  NamedParams p;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "phi.tap" + std::to_string(i + 1);
    append(p, prefix + ".expand", blocks_[i].expand);
    append(p, prefix + ".reduce", blocks_[i].reduce);
  }
  return p;
}

}  // namespace dpl::inline DPL_PRECISION_NS
