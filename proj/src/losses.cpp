// SPDX-License-Identifier: Apache-2.0
#include "dpl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpl/ops.hpp"

namespace dpl::inline DPL_PRECISION_NS::losses {
namespace {

void require_same_taps(const char* what, const FeatureSet& a, const FeatureSet& b) {
  if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty feature set");
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": tap count mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  for (std::size_t t = 0; t < a.size(); ++t)
    if (a[t].shape() != b[t].shape())
      throw std::invalid_argument(std::string(what) + ": tap " + std::to_string(t) + " shape mismatch " +
                                  shape_to_string(a[t].shape()) + " vs " + shape_to_string(b[t].shape()));
}

void require_same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
}

// [C, P] channel-major tap -> row-major [P][C] vectors.
std::vector<double> to_vectors(std::span<const real> data, std::size_t channels, std::size_t positions) {
  std::vector<double> v(positions * channels);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < positions; ++p) v[p * channels + c] = static_cast<double>(data[c * positions + p]);
  return v;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Cached forward state of one tap, enough to replay the backward pass.
struct ContextualTap {
  std::size_t channels = 0, nx = 0, ny = 0;
  std::vector<double> xhat, yhat;  // [nx][C], [ny][C]
  std::vector<double> xnorm, ynorm;
  std::vector<double> d;    // [nx][ny] cosine distance
  std::vector<double> cx;   // [nx][ny] row-normalised affinity
  std::vector<double> row_min;
  std::vector<std::size_t> row_argmin;
  std::vector<std::size_t> col_argmax;
  double q = 0.0;  // mean over j of max_i CX_ij
};

ContextualTap contextual_forward(const Tensor& a, const Tensor& b, const ContextualParams& p) {
  ContextualTap s;
  s.channels = a.dim(0);
  s.nx = a.dim(1) * a.dim(2);
  s.ny = b.dim(1) * b.dim(2);
  const std::size_t C = s.channels;
  auto x = to_vectors(a.data(), C, s.nx);
  auto y = to_vectors(b.data(), C, s.ny);

  std::vector<double> mu(C, 0.0);
  for (std::size_t j = 0; j < s.ny; ++j)
    for (std::size_t c = 0; c < C; ++c) mu[c] += y[j * C + c];
  for (auto& m : mu) m /= static_cast<double>(s.ny);

  const double eps2 = p.epsilon * p.epsilon;
  auto normalise = [&](std::vector<double>& v, std::size_t n, std::vector<double>& norms) {
    norms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = v.data() + i * C;
      for (std::size_t c = 0; c < C; ++c) row[c] -= mu[c];
      norms[i] = std::sqrt(dot(row, row, C) + eps2);
      for (std::size_t c = 0; c < C; ++c) row[c] /= norms[i];
    }
  };
  normalise(x, s.nx, s.xnorm);
  normalise(y, s.ny, s.ynorm);
  s.xhat = std::move(x);
  s.yhat = std::move(y);

  s.d.resize(s.nx * s.ny);
  s.cx.resize(s.nx * s.ny);
  s.row_min.resize(s.nx);
  s.row_argmin.resize(s.nx);
  for (std::size_t i = 0; i < s.nx; ++i) {
    double* drow = s.d.data() + i * s.ny;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < s.ny; ++j) {
      drow[j] = 1.0 - dot(s.xhat.data() + i * C, s.yhat.data() + j * C, C);
      if (drow[j] < drow[arg]) arg = j;
    }
    s.row_min[i] = drow[arg];
    s.row_argmin[i] = arg;
    const double denom = drow[arg] + p.epsilon;
    double* crow = s.cx.data() + i * s.ny;
    double total = 0.0;
    for (std::size_t j = 0; j < s.ny; ++j) {
      crow[j] = std::exp((1.0 - drow[j] / denom) / p.bandwidth);
      total += crow[j];
    }
    for (std::size_t j = 0; j < s.ny; ++j) crow[j] /= total;
  }

  s.col_argmax.assign(s.ny, 0);
  double acc = 0.0;
  for (std::size_t j = 0; j < s.ny; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < s.nx; ++i)
      if (s.cx[i * s.ny + j] > s.cx[arg * s.ny + j]) arg = i;
    s.col_argmax[j] = arg;
    acc += s.cx[arg * s.ny + j];
  }
  s.q = acc / static_cast<double>(s.ny);
  return s;
}

// Accumulates d(-g log q)/d(inputs) into grad buffers of a and b.
void contextual_backward(const ContextualTap& s, const ContextualParams& p, double g, const Tensor& a,
                         const Tensor& b) {
  const std::size_t C = s.channels, nx = s.nx, ny = s.ny;
  const double dm = -g / (s.q * static_cast<double>(ny));

  // dL/dCX is nonzero only at each column's argmax.
  std::vector<double> gcx(nx * ny, 0.0);
  for (std::size_t j = 0; j < ny; ++j) gcx[s.col_argmax[j] * ny + j] = dm;

  std::vector<double> dd(nx * ny, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    const double* crow = s.cx.data() + i * ny;
    const double* grow = gcx.data() + i * ny;
    const double* drow = s.d.data() + i * ny;
    double* ddrow = dd.data() + i * ny;
    double inner = 0.0;
    for (std::size_t j = 0; j < ny; ++j) inner += grow[j] * crow[j];
    const double denom = s.row_min[i] + p.epsilon;
    double dmin = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      // dw_ij * w_ij with w = S * CX; the row sum S cancels.
      const double dw_times_w = (grow[j] - inner) * crow[j];
      const double ddt = -dw_times_w / p.bandwidth;
      ddrow[j] += ddt / denom;
      dmin -= ddt * drow[j] / (denom * denom);
    }
    ddrow[s.row_argmin[i]] += dmin;
  }

  // s = 1 - d, so ds = -dd.
  std::vector<double> dx(nx * C, 0.0), dy(ny * C, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double ds = -dd[i * ny + j];
      if (ds == 0.0) continue;
      const double* xi = s.xhat.data() + i * C;
      const double* yj = s.yhat.data() + j * C;
      double* gx = dx.data() + i * C;
      double* gy = dy.data() + j * C;
      for (std::size_t c = 0; c < C; ++c) {
        gx[c] += ds * yj[c];
        gy[c] += ds * xi[c];
      }
    }

  auto through_norm = [C](std::vector<double>& grad, const std::vector<double>& hat, const std::vector<double>& norms,
                          std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      double* gi = grad.data() + i * C;
      const double* hi = hat.data() + i * C;
      const double proj = dot(gi, hi, C);
      for (std::size_t c = 0; c < C; ++c) gi[c] = (gi[c] - proj * hi[c]) / norms[i];
    }
  };
  through_norm(dx, s.xhat, s.xnorm, nx);
  through_norm(dy, s.yhat, s.ynorm, ny);

  if (a.requires_grad()) {
    auto& ga = grad_buffer(a.node());
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < nx; ++i) ga[c * nx + i] += static_cast<real>(dx[i * C + c]);
  }
  if (b.requires_grad()) {
    // The shared centre is fb's mean, so every b_j also receives -(sum of all centred grads)/ny.
    std::vector<double> shift(C, 0.0);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t c = 0; c < C; ++c) shift[c] += dx[i * C + c];
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t c = 0; c < C; ++c) shift[c] += dy[j * C + c];
    auto& gb = grad_buffer(b.node());
    for (std::size_t c = 0; c < C; ++c) {
      const double sc = shift[c] / static_cast<double>(ny);
      for (std::size_t j = 0; j < ny; ++j) gb[c * ny + j] += static_cast<real>(dy[j * C + c] - sc);
    }
  }
}

}  // namespace

void ContextualParams::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw std::invalid_argument("contextual bandwidth must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("contextual epsilon must be > 0");
}

Tensor perceptual(Tape& tape, const FeatureSet& fa, const FeatureSet& fb) {
  require_same_taps("perceptual loss", fa, fb);
  Tensor total = ops::mean_squared_error(tape, fa[0], fb[0]);
  for (std::size_t t = 1; t < fa.size(); ++t) total = ops::add(tape, total, ops::mean_squared_error(tape, fa[t], fb[t]));
  return ops::scale(tape, total, real(1) / static_cast<real>(fa.size()));
}

Tensor contextual(Tape& tape, const FeatureSet& fa, const FeatureSet& fb, const ContextualParams& params) {
  params.validate();
  if (fa.empty()) throw std::invalid_argument("contextual loss: empty feature set");
  if (fa.size() != fb.size())
    throw std::invalid_argument("contextual loss: tap count mismatch " + std::to_string(fa.size()) + " vs " +
                                std::to_string(fb.size()));
  std::vector<ContextualTap> taps;
  taps.reserve(fa.size());
  double value = 0.0;
  bool rg = false;
  for (std::size_t t = 0; t < fa.size(); ++t) {
    const auto &a = fa[t], &b = fb[t];
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0))
      throw std::invalid_argument("contextual loss: tap " + std::to_string(t) + " needs [C,H,W] inputs of equal C, got " +
                                  shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    if (a.numel() == 0 || b.numel() == 0)
      throw std::invalid_argument("contextual loss: tap " + std::to_string(t) + " is empty");
    taps.push_back(contextual_forward(a, b, params));
    value -= std::log(taps.back().q);
    rg = rg || a.requires_grad() || b.requires_grad();
  }
  const double inv_taps = 1.0 / static_cast<double>(fa.size());
  auto result = Tensor::make_result({}, {static_cast<real>(value * inv_taps)}, rg);
  if (!rg) return result;
  tape.record(result, [fa, fb, params, inv_taps, result, taps = std::move(taps)]() {
    const double g = static_cast<double>(result.node().grad[0]) * inv_taps;
    for (std::size_t t = 0; t < taps.size(); ++t) contextual_backward(taps[t], params, g, fa[t], fb[t]);
  });
  return result;
}

Tensor feature_distance(Tape& tape, const FeatureSet& a, const FeatureSet& b) {
  require_same_taps("feature distance", a, b);
  Tensor total = ops::mean_squared_error(tape, a[0], b[0]);
  for (std::size_t t = 1; t < a.size(); ++t) total = ops::add(tape, total, ops::mean_squared_error(tape, a[t], b[t]));
  return total;
}

Tensor triplet(Tape& tape, const FeatureSet& anchor, const FeatureSet& positive, const FeatureSet& negative,
               double margin) {
  require_same_taps("triplet loss", anchor, positive);
  require_same_taps("triplet loss", anchor, negative);
  if (!(margin >= 0.0)) throw std::invalid_argument("triplet loss: margin must be ≥ 0");
  const auto d_ap = feature_distance(tape, anchor, positive);
  const auto d_an = feature_distance(tape, anchor, negative);
  return ops::relu(tape, ops::add_constant(tape, ops::sub(tape, d_ap, d_an), static_cast<real>(margin)));
}

Tensor color(Tape& tape, const Tensor& a, const Tensor& b, double sigma) {
  require_same_shape("color loss", a, b);
  return ops::mean_squared_error(tape, ops::gaussian_blur(tape, a, sigma), ops::gaussian_blur(tape, b, sigma));
}

Tensor texture(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("texture loss", a, b);
  return ops::mean_squared_error(tape, ops::grayscale(tape, a), ops::grayscale(tape, b));
}

Tensor pixel(Tape& tape, PixelKind kind, const Tensor& a, const Tensor& b) {
  require_same_shape("pixel loss", a, b);
  if (kind == PixelKind::mse) return ops::mean_squared_error(tape, a, b);
  return ops::mean(tape, ops::abs(tape, ops::sub(tape, a, b)));
}

}  // namespace dpl::inline DPL_PRECISION_NS::losses
