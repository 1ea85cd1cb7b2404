// SPDX-License-Identifier: Apache-2.0
#include "dpl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "dpl/filters.hpp"
#include "dpl/simd/kernels.hpp"

namespace dpl::inline DPL_PRECISION_NS::ops {
namespace {

const simd::KernelTable<real>& K() { return simd::kernels<real>(); }

bool tracks(const Tensor& t) { return t.requires_grad(); }

std::string op_error(const char* op, const std::string& what) { return std::string(op) + ": " + what; }

void require_rank(const char* op, const Tensor& t, std::size_t rank, const char* name) {
  if (t.rank() != rank)
    throw std::invalid_argument(op_error(op, std::string(name) + " must be rank-" + std::to_string(rank) +
                                             ", got " + shape_to_string(t.shape())));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(op_error(op, "shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                             shape_to_string(b.shape())));
}

}  // namespace

Tensor elementwise(Tape& tape, ElementwiseKind kind, const Tensor& a, const Tensor& b) {
  const bool broadcast = b.rank() == 0 && a.rank() != 0;
  if (!broadcast && a.shape() != b.shape())
    throw std::invalid_argument("elementwise: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()) + " (only rank-0 right operands broadcast)");
  const std::size_t n = a.numel();
  const auto av = a.data();
  std::vector<real> out(n);
  if (broadcast) {
    const real s = b.item();
    switch (kind) {
      case ElementwiseKind::add:
        for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + s;
        break;
      case ElementwiseKind::sub:
        for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - s;
        break;
      case ElementwiseKind::mul:
        for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * s;
        break;
    }
  } else {
    const auto bv = b.data();
    switch (kind) {
      case ElementwiseKind::add:
        K().add(av.data(), bv.data(), out.data(), n);
        break;
      case ElementwiseKind::sub:
        K().sub(av.data(), bv.data(), out.data(), n);
        break;
      case ElementwiseKind::mul:
        K().mul(av.data(), bv.data(), out.data(), n);
        break;
    }
  }
  const bool rg = tracks(a) || tracks(b);
  auto result = Tensor::make_result(a.shape(), std::move(out), rg);
  if (!rg) return result;

  tape.record(result, [kind, broadcast, a, b, result]() {
    const auto& gy = result.node().grad;
    const std::size_t n = gy.size();
    if (tracks(a)) {
      auto& ga = grad_buffer(a.node());
      switch (kind) {
        case ElementwiseKind::add:
        case ElementwiseKind::sub:
          K().axpy(real(1), gy.data(), ga.data(), n);
          break;
        case ElementwiseKind::mul:
          if (broadcast)
            K().axpy(b.item(), gy.data(), ga.data(), n);
          else
            for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * b.data()[i];
          break;
      }
    }
    if (tracks(b)) {
      auto& gb = grad_buffer(b.node());
      const real sign = kind == ElementwiseKind::sub ? real(-1) : real(1);
      if (broadcast) {
        real acc = 0;
        if (kind == ElementwiseKind::mul)
          acc = K().dot(gy.data(), a.data().data(), n);
        else
          acc = sign * K().sum(gy.data(), n);
        gb[0] += acc;
      } else if (kind == ElementwiseKind::mul) {
        for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i] * a.data()[i];
      } else {
        K().axpy(sign, gy.data(), gb.data(), n);
      }
    }
  });
  return result;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, ElementwiseKind::add, a, b); }
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, ElementwiseKind::sub, a, b); }
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, ElementwiseKind::mul, a, b); }

Tensor scale(Tape& tape, const Tensor& x, real factor) {
  return elementwise(tape, ElementwiseKind::mul, x, Tensor::scalar(factor));
}

Tensor add_constant(Tape& tape, const Tensor& x, real constant) {
  return elementwise(tape, ElementwiseKind::add, x, Tensor::scalar(constant));
}

Tensor relu(Tape& tape, const Tensor& x) {
  std::vector<real> out(x.numel());
  K().relu(x.data().data(), out.data(), out.size());
  auto result = Tensor::make_result(x.shape(), std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result]() {
    const auto& gy = result.node().grad;
    K().relu_backward(x.data().data(), gy.data(), grad_buffer(x.node()).data(), gy.size());
  });
  return result;
}

Tensor abs(Tape& tape, const Tensor& x) {
  const auto xv = x.data();
  std::vector<real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(xv[i]);
  auto result = Tensor::make_result(x.shape(), std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result]() {
    const auto& gy = result.node().grad;
    const auto xv = x.data();
    auto& gx = grad_buffer(x.node());
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (xv[i] > real(0))
        gx[i] += gy[i];
      else if (xv[i] < real(0))
        gx[i] -= gy[i];
    }
  });
  return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
  auto result = Tensor::make_result({}, {K().sum(x.data().data(), x.numel())}, tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result]() {
    const real g = result.node().grad[0];
    for (auto& v : grad_buffer(x.node())) v += g;
  });
  return result;
}

Tensor mean(Tape& tape, const Tensor& x) {
  const real inv = real(1) / static_cast<real>(x.numel());
  auto result = Tensor::make_result({}, {K().sum(x.data().data(), x.numel()) * inv}, tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, inv]() {
    const real g = result.node().grad[0] * inv;
    for (auto& v : grad_buffer(x.node())) v += g;
  });
  return result;
}

Tensor mean_squared_error(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("mean_squared_error", a, b);
  const std::size_t n = a.numel();
  const real inv = real(1) / static_cast<real>(n);
  const real value = K().squared_distance(a.data().data(), b.data().data(), n) * inv;
  const bool rg = tracks(a) || tracks(b);
  auto result = Tensor::make_result({}, {value}, rg);
  if (!rg) return result;
  tape.record(result, [a, b, result, inv, n]() {
    const real g = real(2) * inv * result.node().grad[0];
    std::vector<real> diff(n);
    K().sub(a.data().data(), b.data().data(), diff.data(), n);
    if (tracks(a)) K().axpy(g, diff.data(), grad_buffer(a.node()).data(), n);
    if (tracks(b)) K().axpy(-g, diff.data(), grad_buffer(b.node()).data(), n);
  });
  return result;
}

namespace {

struct ConvGeometry {
  std::size_t in_c, in_h, in_w, out_c, k, stride, pad, out_h, out_w;
  std::size_t patch() const { return in_c * k * k; }
  std::size_t pixels() const { return out_h * out_w; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

// cols[(c*k + ky)*k + kx][oy*out_w + ox] = input[c][oy*s + ky - p][ox*s + kx - p] (zero outside)
std::vector<real> im2col(const ConvGeometry& g, std::span<const real> in) {
  std::vector<real> cols(g.patch() * g.pixels(), real(0));
  for (std::size_t c = 0; c < g.in_c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        real* row = cols.data() + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          const real* src = in.data() + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          real* dst = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ox] = src[ix];
          }
        }
      }
  return cols;
}

void col2im_add(const ConvGeometry& g, std::span<const real> cols, std::span<real> grad_in) {
  for (std::size_t c = 0; c < g.in_c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const real* row = cols.data() + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          real* dst = grad_in.data() + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          const real* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank("conv2d", input, 3, "input");
  require_rank("conv2d", weight, 4, "weight");
  require_rank("conv2d", bias, 1, "bias");
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  const auto& ws = weight.shape();
  if (ws[2] != ws[3]) throw std::invalid_argument("conv2d: kernel must be square, got " + shape_to_string(ws));
  if (ws[1] != input.dim(0))
    throw std::invalid_argument("conv2d: channel mismatch, input " + shape_to_string(input.shape()) + " vs weight " +
                                shape_to_string(ws));
  if (bias.dim(0) != ws[0])
    throw std::invalid_argument("conv2d: bias " + shape_to_string(bias.shape()) + " does not match weight " +
                                shape_to_string(ws));
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), ws[0], ws[2], stride, padding, 0, 0};
  if (g.k > g.in_h + 2 * g.pad || g.k > g.in_w + 2 * g.pad)
    throw std::invalid_argument("conv2d: empty output extent for input " + shape_to_string(input.shape()) +
                                " with kernel " + std::to_string(g.k) + " and padding " + std::to_string(g.pad));
  g.out_h = (g.in_h + 2 * g.pad - g.k) / g.stride + 1;
  g.out_w = (g.in_w + 2 * g.pad - g.k) / g.stride + 1;

  // Pointwise kernels read the input directly as the column matrix.
  std::shared_ptr<const std::vector<real>> cols;
  if (!g.pointwise()) cols = std::make_shared<const std::vector<real>>(im2col(g, input.data()));
  const std::span<const real> colv = g.pointwise() ? input.data() : std::span<const real>(*cols);

  const std::size_t P = g.pixels();
  const std::size_t KK = g.patch();
  const auto wv = weight.data();
  const auto bv = bias.data();
  std::vector<real> out(g.out_c * P);
  for (std::size_t o = 0; o < g.out_c; ++o) {
    real* dst = out.data() + o * P;
    std::fill(dst, dst + P, bv[o]);
    for (std::size_t kk = 0; kk < KK; ++kk) {
      const real w = wv[o * KK + kk];
      K().axpy(w, colv.data() + kk * P, dst, P);
    }
  }

  const bool rg = tracks(input) || tracks(weight) || tracks(bias);
  auto result = Tensor::make_result({g.out_c, g.out_h, g.out_w}, std::move(out), rg);
  if (!rg) return result;

  tape.record(result, [g, input, weight, bias, cols, result]() {
    const std::size_t P = g.pixels();
    const std::size_t KK = g.patch();
    const auto& gy = result.node().grad;
    const std::span<const real> colv = g.pointwise() ? input.data() : std::span<const real>(*cols);
    if (tracks(bias)) {
      auto& gb = grad_buffer(bias.node());
      for (std::size_t o = 0; o < g.out_c; ++o) gb[o] += K().sum(gy.data() + o * P, P);
    }
    if (tracks(weight)) {
      auto& gw = grad_buffer(weight.node());
      for (std::size_t o = 0; o < g.out_c; ++o)
        for (std::size_t kk = 0; kk < KK; ++kk)
          gw[o * KK + kk] += K().dot(gy.data() + o * P, colv.data() + kk * P, P);
    }
    if (tracks(input)) {
      const auto wv = weight.data();
      auto& gin = grad_buffer(input.node());
      if (g.pointwise()) {
        for (std::size_t kk = 0; kk < KK; ++kk)
          for (std::size_t o = 0; o < g.out_c; ++o)
            K().axpy(wv[o * KK + kk], gy.data() + o * P, gin.data() + kk * P, P);
      } else {
        std::vector<real> gcols(KK * P, real(0));
        for (std::size_t kk = 0; kk < KK; ++kk)
          for (std::size_t o = 0; o < g.out_c; ++o)
            K().axpy(wv[o * KK + kk], gy.data() + o * P, gcols.data() + kk * P, P);
        col2im_add(g, gcols, gin);
      }
    }
  });
  return result;
}

Tensor max_pool2(Tape& tape, const Tensor& x) {
  require_rank("max_pool2", x, 3, "input");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("max_pool2: spatial extent must be even, got " + shape_to_string(x.shape()));
  const std::size_t Ho = H / 2, Wo = W / 2;
  const auto xv = x.data();
  std::vector<real> out(C * Ho * Wo);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo) {
        const std::size_t base = (c * H + 2 * y) * W + 2 * xo;
        const std::size_t window[4] = {base, base + 1, base + W, base + W + 1};
        std::size_t best = window[0];
        for (int i = 1; i < 4 && !std::isnan(xv[best]); ++i)
          if (xv[window[i]] > xv[best] || std::isnan(xv[window[i]])) best = window[i];
        const std::size_t o = (c * Ho + y) * Wo + xo;
        out[o] = xv[best];
        (*argmax)[o] = best;
      }
  auto result = Tensor::make_result({C, Ho, Wo}, std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, argmax]() {
    const auto& gy = result.node().grad;
    auto& gx = grad_buffer(x.node());
    for (std::size_t o = 0; o < gy.size(); ++o) gx[(*argmax)[o]] += gy[o];
  });
  return result;
}

Tensor avg_pool2(Tape& tape, const Tensor& x) {
  require_rank("avg_pool2", x, 3, "input");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("avg_pool2: spatial extent must be even, got " + shape_to_string(x.shape()));
  const std::size_t Ho = H / 2, Wo = W / 2;
  const auto xv = x.data();
  std::vector<real> out(C * Ho * Wo);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo) {
        const std::size_t base = (c * H + 2 * y) * W + 2 * xo;
        out[(c * Ho + y) * Wo + xo] = (xv[base] + xv[base + 1] + xv[base + W] + xv[base + W + 1]) * real(0.25);
      }
  auto result = Tensor::make_result({C, Ho, Wo}, std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, C, H, W, Ho, Wo]() {
    const auto& gy = result.node().grad;
    auto& gx = grad_buffer(x.node());
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          const real g = gy[(c * Ho + y) * Wo + xo] * real(0.25);
          const std::size_t base = (c * H + 2 * y) * W + 2 * xo;
          gx[base] += g;
          gx[base + 1] += g;
          gx[base + W] += g;
          gx[base + W + 1] += g;
        }
  });
  return result;
}

Tensor upsample_nearest2(Tape& tape, const Tensor& x) {
  require_rank("upsample_nearest2", x, 3, "input");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t Ho = 2 * H, Wo = 2 * W;
  const auto xv = x.data();
  std::vector<real> out(C * Ho * Wo);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo) out[(c * Ho + y) * Wo + xo] = xv[(c * H + y / 2) * W + xo / 2];
  auto result = Tensor::make_result({C, Ho, Wo}, std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, C, H, W, Ho, Wo]() {
    const auto& gy = result.node().grad;
    auto& gx = grad_buffer(x.node());
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xo = 0; xo < Wo; ++xo) gx[(c * H + y / 2) * W + xo / 2] += gy[(c * Ho + y) * Wo + xo];
  });
  return result;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank("global_avg_pool", x, 3, "input");
  const std::size_t C = x.dim(0), P = x.dim(1) * x.dim(2);
  const real inv = real(1) / static_cast<real>(P);
  std::vector<real> out(C);
  for (std::size_t c = 0; c < C; ++c) out[c] = K().sum(x.data().data() + c * P, P) * inv;
  auto result = Tensor::make_result({C}, std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, C, P, inv]() {
    const auto& gy = result.node().grad;
    auto& gx = grad_buffer(x.node());
    for (std::size_t c = 0; c < C; ++c) {
      const real g = gy[c] * inv;
      for (std::size_t i = 0; i < P; ++i) gx[c * P + i] += g;
    }
  });
  return result;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("linear", x, 1, "input");
  require_rank("linear", weight, 2, "weight");
  require_rank("linear", bias, 1, "bias");
  const std::size_t O = weight.dim(0), I = weight.dim(1);
  if (x.dim(0) != I || bias.dim(0) != O)
    throw std::invalid_argument("linear: shape mismatch, input " + shape_to_string(x.shape()) + " weight " +
                                shape_to_string(weight.shape()) + " bias " + shape_to_string(bias.shape()));
  std::vector<real> out(O);
  for (std::size_t o = 0; o < O; ++o) out[o] = bias.data()[o] + K().dot(weight.data().data() + o * I, x.data().data(), I);
  const bool rg = tracks(x) || tracks(weight) || tracks(bias);
  auto result = Tensor::make_result({O}, std::move(out), rg);
  if (!rg) return result;
  tape.record(result, [x, weight, bias, result, O, I]() {
    const auto& gy = result.node().grad;
    if (tracks(bias)) {
      auto& gb = grad_buffer(bias.node());
      for (std::size_t o = 0; o < O; ++o) gb[o] += gy[o];
    }
    if (tracks(weight)) {
      auto& gw = grad_buffer(weight.node());
      for (std::size_t o = 0; o < O; ++o) K().axpy(gy[o], x.data().data(), gw.data() + o * I, I);
    }
    if (tracks(x)) {
      auto& gx = grad_buffer(x.node());
      for (std::size_t o = 0; o < O; ++o) K().axpy(gy[o], weight.data().data() + o * I, gx.data(), I);
    }
  });
  return result;
}

std::vector<real> softmax(std::span<const real> logits) {
  std::vector<real> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const real top = *std::max_element(p.begin(), p.end());
  real total = 0;
  for (auto& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
  require_rank("cross_entropy", logits, 1, "logits");
  if (label >= logits.dim(0))
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) + " out of range for " +
                                std::to_string(logits.dim(0)) + " classes");
  const auto lv = logits.data();
  const real top = *std::max_element(lv.begin(), lv.end());
  real total = 0;
  for (auto v : lv) total += std::exp(v - top);
  const real value = std::log(total) + top - lv[label];
  auto result = Tensor::make_result({}, {value}, tracks(logits));
  if (!tracks(logits)) return result;
  tape.record(result, [logits, result, label]() {
    const real g = result.node().grad[0];
    const auto p = softmax(logits.data());
    auto& gl = grad_buffer(logits.node());
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] += g * (p[i] - (i == label ? real(1) : real(0)));
  });
  return result;
}

Tensor gaussian_blur(Tape& tape, const Tensor& x, double sigma) {
  require_rank("gaussian_blur", x, 3, "input");
  const auto taps64 = filters::gaussian_kernel(sigma);
  const std::vector<real> taps(taps64.begin(), taps64.end());
  const std::size_t T = taps.size(), R = T / 2;
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const auto rx = filters::reflect_table(W, R);
  const auto ry = filters::reflect_table(H, R);
  const auto xv = x.data();
  std::vector<real> tmp(C * H * W, real(0)), out(C * H * W, real(0));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y) {
      const real* src = xv.data() + (c * H + y) * W;
      real* dst = tmp.data() + (c * H + y) * W;
      for (std::size_t xo = 0; xo < W; ++xo) {
        real acc = 0;
        for (std::size_t t = 0; t < T; ++t) acc += taps[t] * src[rx[xo * T + t]];
        dst[xo] = acc;
      }
    }
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y) {
      real* dst = out.data() + (c * H + y) * W;
      for (std::size_t t = 0; t < T; ++t)
        K().axpy(taps[t], tmp.data() + (c * H + ry[y * T + t]) * W, dst, W);
    }
  auto result = Tensor::make_result(x.shape(), std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, taps, rx, ry, C, H, W, T]() {
    const auto& gy = result.node().grad;
    std::vector<real> gtmp(C * H * W, real(0));
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t t = 0; t < T; ++t)
          K().axpy(taps[t], gy.data() + (c * H + y) * W, gtmp.data() + (c * H + ry[y * T + t]) * W, W);
    auto& gx = grad_buffer(x.node());
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y) {
        const real* src = gtmp.data() + (c * H + y) * W;
        real* dst = gx.data() + (c * H + y) * W;
        for (std::size_t xo = 0; xo < W; ++xo)
          for (std::size_t t = 0; t < T; ++t) dst[rx[xo * T + t]] += taps[t] * src[xo];
      }
  });
  return result;
}

namespace {
constexpr real kLuma[3] = {real(0.299), real(0.587), real(0.114)};
}

Tensor grayscale(Tape& tape, const Tensor& x) {
  require_rank("grayscale", x, 3, "input");
  if (x.dim(0) != 3) throw std::invalid_argument("grayscale: expected 3 channels, got " + shape_to_string(x.shape()));
  const std::size_t P = x.dim(1) * x.dim(2);
  const auto xv = x.data();
  std::vector<real> out(3 * P);
  for (std::size_t i = 0; i < P; ++i) {
    const real l = kLuma[0] * xv[i] + kLuma[1] * xv[P + i] + kLuma[2] * xv[2 * P + i];
    out[i] = out[P + i] = out[2 * P + i] = l;
  }
  auto result = Tensor::make_result(x.shape(), std::move(out), tracks(x));
  if (!tracks(x)) return result;
  tape.record(result, [x, result, P]() {
    const auto& gy = result.node().grad;
    auto& gx = grad_buffer(x.node());
    for (std::size_t i = 0; i < P; ++i) {
      const real g = gy[i] + gy[P + i] + gy[2 * P + i];
      for (std::size_t c = 0; c < 3; ++c) gx[c * P + i] += kLuma[c] * g;
    }
  });
  return result;
}

}  // namespace dpl::inline DPL_PRECISION_NS::ops
