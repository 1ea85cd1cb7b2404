// SPDX-License-Identifier: Apache-2.0
#pragma once

// Every differentiable op, loss, network and composed pipeline as a
// gradient-check case drawn at a random point.

#include <memory>
#include <string>
#include <vector>

#include "dpl/losses.hpp"
#include "dpl/networks.hpp"
#include "dpl/ops.hpp"
#include "gradcheck.hpp"

namespace dpl_test {

namespace ops = dpl::ops;
namespace losses = dpl::losses;

struct Prepared {
  std::vector<Tensor> inputs;
  Objective f;
  // Keeps networks alive for the objective.
  std::shared_ptr<void> owner;
};

struct GradCase {
  std::string name;
  // Directional checks per input instead of every element.
  bool directional = false;
  std::function<Prepared(Rng&)> prepare;
};

// sum(y * w) for a fixed random w, turning any output into a scalar.
inline Tensor project(Tape& tape, const Tensor& y, const Tensor& w) { return ops::sum(tape, ops::mul(tape, y, w)); }

inline Tensor projection_for(const dpl::Shape& shape, Rng& rng) { return random_tensor(shape, rng, 1.0, false); }

inline void randomize(const dpl::NamedParams& params, Rng& rng, double scale) {
  for (const auto& [name, t] : params) {
    auto data = const_cast<Tensor&>(t).mutable_data();
    for (auto& v : data) v = static_cast<dpl::real>(scale * rng.normal());
  }
}

inline Prepared unary(Rng& rng, dpl::Shape shape, dpl::Shape out_shape,
                      std::function<Tensor(Tape&, const Tensor&)> op, double scale = 1.0) {
  auto x = random_tensor(shape, rng, scale);
  auto w = projection_for(out_shape, rng);
  return {{x}, [=](Tape& t) { return project(t, op(t, x), w); }, nullptr};
}

inline Prepared binary(Rng& rng, dpl::Shape a_shape, dpl::Shape b_shape, dpl::Shape out_shape,
                       std::function<Tensor(Tape&, const Tensor&, const Tensor&)> op) {
  auto a = random_tensor(a_shape, rng);
  auto b = random_tensor(b_shape, rng);
  auto w = projection_for(out_shape, rng);
  return {{a, b}, [=](Tape& t) { return project(t, op(t, a, b), w); }, nullptr};
}

inline dpl::FeatureSet random_features(Rng& rng, const std::vector<dpl::Shape>& shapes, double scale = 1.0) {
  dpl::FeatureSet fs;
  for (const auto& s : shapes) fs.push_back(random_tensor(s, rng, scale));
  return fs;
}

inline std::vector<GradCase> op_cases() {
  std::vector<GradCase> c;
  c.push_back({"add", false, [](Rng& r) { return binary(r, {2, 3, 4}, {2, 3, 4}, {2, 3, 4}, ops::add); }});
  c.push_back({"sub", false, [](Rng& r) { return binary(r, {2, 3, 4}, {2, 3, 4}, {2, 3, 4}, ops::sub); }});
  c.push_back({"mul", false, [](Rng& r) { return binary(r, {2, 3, 4}, {2, 3, 4}, {2, 3, 4}, ops::mul); }});
  c.push_back({"add(broadcast)", false, [](Rng& r) { return binary(r, {3, 4}, {}, {3, 4}, ops::add); }});
  c.push_back({"mul(broadcast)", false, [](Rng& r) { return binary(r, {3, 4}, {}, {3, 4}, ops::mul); }});
  c.push_back({"scale", false, [](Rng& r) {
                 const auto k = static_cast<dpl::real>(r.uniform(-2, 2));
                 return unary(r, {3, 5}, {3, 5}, [k](Tape& t, const Tensor& x) { return ops::scale(t, x, k); });
               }});
  c.push_back({"add_constant", false, [](Rng& r) {
                 const auto k = static_cast<dpl::real>(r.uniform(-2, 2));
                 return unary(r, {3, 5}, {3, 5}, [k](Tape& t, const Tensor& x) { return ops::add_constant(t, x, k); });
               }});
  c.push_back({"relu", false, [](Rng& r) { return unary(r, {4, 5}, {4, 5}, ops::relu); }});
  c.push_back({"abs", false, [](Rng& r) { return unary(r, {4, 5}, {4, 5}, ops::abs); }});
  c.push_back({"sum", false, [](Rng& r) { return unary(r, {3, 4}, {}, ops::sum); }});
  c.push_back({"mean", false, [](Rng& r) { return unary(r, {3, 4}, {}, ops::mean); }});
  c.push_back({"mean_squared_error", false,
               [](Rng& r) { return binary(r, {2, 3, 3}, {2, 3, 3}, {}, ops::mean_squared_error); }});
  c.push_back({"conv2d(k3,s1,p1)", false, [](Rng& r) {
                 auto x = random_tensor({2, 6, 5}, r);
                 auto w = random_tensor({3, 2, 3, 3}, r, 0.5);
                 auto b = random_tensor({3}, r);
                 auto p = projection_for({3, 6, 5}, r);
                 return Prepared{{x, w, b}, [=](Tape& t) { return project(t, ops::conv2d(t, x, w, b, 1, 1), p); }, nullptr};
               }});
  c.push_back({"conv2d(k3,s2,p1)", false, [](Rng& r) {
                 auto x = random_tensor({2, 7, 6}, r);
                 auto w = random_tensor({3, 2, 3, 3}, r, 0.5);
                 auto b = random_tensor({3}, r);
                 auto p = projection_for({3, 4, 3}, r);
                 return Prepared{{x, w, b}, [=](Tape& t) { return project(t, ops::conv2d(t, x, w, b, 2, 1), p); }, nullptr};
               }});
  c.push_back({"conv2d(k1)", false, [](Rng& r) {
                 auto x = random_tensor({4, 3, 3}, r);
                 auto w = random_tensor({2, 4, 1, 1}, r, 0.5);
                 auto b = random_tensor({2}, r);
                 auto p = projection_for({2, 3, 3}, r);
                 return Prepared{{x, w, b}, [=](Tape& t) { return project(t, ops::conv2d(t, x, w, b, 1, 0), p); }, nullptr};
               }});
  c.push_back({"max_pool2", false, [](Rng& r) { return unary(r, {2, 4, 6}, {2, 2, 3}, ops::max_pool2); }});
  c.push_back({"avg_pool2", false, [](Rng& r) { return unary(r, {2, 4, 6}, {2, 2, 3}, ops::avg_pool2); }});
  c.push_back({"upsample_nearest2", false, [](Rng& r) { return unary(r, {2, 3, 2}, {2, 6, 4}, ops::upsample_nearest2); }});
  c.push_back({"global_avg_pool", false, [](Rng& r) { return unary(r, {3, 4, 4}, {3}, ops::global_avg_pool); }});
  c.push_back({"linear", false, [](Rng& r) {
                 auto x = random_tensor({5}, r);
                 auto w = random_tensor({4, 5}, r);
                 auto b = random_tensor({4}, r);
                 auto p = projection_for({4}, r);
                 return Prepared{{x, w, b}, [=](Tape& t) { return project(t, ops::linear(t, x, w, b), p); }, nullptr};
               }});
  c.push_back({"cross_entropy", false, [](Rng& r) {
                 auto x = random_tensor({6}, r, 2.0);
                 const auto label = static_cast<std::size_t>(r.uniform_int(0, 5));
                 return Prepared{{x}, [=](Tape& t) { return ops::cross_entropy(t, x, label); }, nullptr};
               }});
  c.push_back({"gaussian_blur", false, [](Rng& r) {
                 const double sigma = r.uniform(0.5, 2.0);
                 return unary(r, {3, 6, 7}, {3, 6, 7},
                              [sigma](Tape& t, const Tensor& x) { return ops::gaussian_blur(t, x, sigma); });
               }});
  c.push_back({"grayscale", false, [](Rng& r) { return unary(r, {3, 4, 5}, {3, 4, 5}, ops::grayscale); }});
  return c;
}

inline std::vector<GradCase> loss_cases() {
  std::vector<GradCase> c;
  const std::vector<dpl::Shape> taps = {{3, 4, 4}, {4, 2, 2}};
  c.push_back({"perceptual_loss", false, [taps](Rng& r) {
                 auto a = random_features(r, taps), b = random_features(r, taps);
                 std::vector<Tensor> in(a.begin(), a.end());
                 in.insert(in.end(), b.begin(), b.end());
                 return Prepared{in, [=](Tape& t) { return losses::perceptual(t, a, b); }, nullptr};
               }});
  c.push_back({"contextual_loss", false, [](Rng& r) {
                 auto a = random_features(r, {{3, 3, 3}, {4, 2, 2}});
                 auto b = random_features(r, {{3, 2, 2}, {4, 2, 3}});
                 std::vector<Tensor> in(a.begin(), a.end());
                 in.insert(in.end(), b.begin(), b.end());
                 // A wide bandwidth keeps every affinity numerically relevant.
                 const losses::ContextualParams params{r.uniform(0.3, 1.0), 1e-5};
                 return Prepared{in, [=](Tape& t) { return losses::contextual(t, a, b, params); }, nullptr};
               }});
  c.push_back({"triplet_loss", false, [taps](Rng& r) {
                 auto a = random_features(r, taps), p = random_features(r, taps), n = random_features(r, taps);
                 std::vector<Tensor> in(a.begin(), a.end());
                 in.insert(in.end(), p.begin(), p.end());
                 in.insert(in.end(), n.begin(), n.end());
                 const double margin = r.uniform(0.5, 3.0);
                 return Prepared{in, [=](Tape& t) { return losses::triplet(t, a, p, n, margin); }, nullptr};
               }});
  c.push_back({"color_loss", false, [](Rng& r) {
                 auto a = uniform_tensor({3, 6, 6}, r, 0, 1), b = uniform_tensor({3, 6, 6}, r, 0, 1);
                 return Prepared{{a, b}, [=](Tape& t) { return losses::color(t, a, b); }, nullptr};
               }});
  c.push_back({"texture_loss", false, [](Rng& r) {
                 auto a = uniform_tensor({3, 5, 6}, r, 0, 1), b = uniform_tensor({3, 5, 6}, r, 0, 1);
                 return Prepared{{a, b}, [=](Tape& t) { return losses::texture(t, a, b); }, nullptr};
               }});
  c.push_back({"pixel_loss(l1)", false, [](Rng& r) {
                 auto a = random_tensor({3, 4, 4}, r), b = random_tensor({3, 4, 4}, r);
                 return Prepared{{a, b}, [=](Tape& t) { return losses::pixel(t, losses::PixelKind::l1, a, b); }, nullptr};
               }});
  c.push_back({"pixel_loss(mse)", false, [](Rng& r) {
                 auto a = random_tensor({3, 4, 4}, r), b = random_tensor({3, 4, 4}, r);
                 return Prepared{{a, b}, [=](Tape& t) { return losses::pixel(t, losses::PixelKind::mse, a, b); }, nullptr};
               }});
  return c;
}

struct Nets {
  dpl::GeneratorF f;
  dpl::FeatureNetPsi psi;
  dpl::SelectionPhi phi;
};

inline std::shared_ptr<Nets> random_nets(Rng& r) {
  auto n = std::make_shared<Nets>(Nets{dpl::GeneratorF(r), dpl::FeatureNetPsi(r), dpl::SelectionPhi(r)});
  // Off the zero-initialised head, every F leaf receives gradient.
  randomize(n->f.named_parameters(), r, 0.2);
  randomize(n->phi.named_parameters(), r, 0.3);
  for (const auto& [name, t] : n->psi.named_parameters())
    if (name.ends_with(".bias")) randomize({{name, t}}, r, 0.1);
  return n;
}

inline std::vector<Tensor> leaves(const dpl::NamedParams& p) {
  std::vector<Tensor> out;
  for (const auto& [n, t] : p) out.push_back(t);
  return out;
}

inline std::vector<GradCase> network_cases() {
  std::vector<GradCase> c;
  c.push_back({"generator(mean squared output)", true, [](Rng& r) {
                 auto n = random_nets(r);
                 n->f.set_trainable(true);
                 auto x = uniform_tensor({3, 8, 8}, r, 0, 1);
                 auto in = leaves(n->f.named_parameters());
                 in.push_back(x);
                 return Prepared{in, [n, x](Tape& t) {
                                   auto y = n->f.forward(t, x);
                                   return ops::mean(t, ops::mul(t, y, y));
                                 }, n};
               }});
  c.push_back({"psi", true, [](Rng& r) {
                 auto n = random_nets(r);
                 n->psi.set_trainable(true);
                 auto x = uniform_tensor({3, 8, 8}, r, 0, 1);
                 auto w = random_features(r, {{16, 8, 8}, {32, 4, 4}, {64, 2, 2}});
                 for (auto& t : w) t.set_requires_grad(false);
                 auto in = leaves(n->psi.named_parameters());
                 in.push_back(x);
                 return Prepared{in, [n, x, w](Tape& t) {
                                   const auto f = n->psi.forward(t, x);
                                   Tensor s = project(t, f[0], w[0]);
                                   for (std::size_t i = 1; i < f.size(); ++i) s = ops::add(t, s, project(t, f[i], w[i]));
                                   return s;
                                 }, n};
               }});
  c.push_back({"phi", true, [](Rng& r) {
                 auto n = random_nets(r);
                 n->phi.set_trainable(true);
                 auto h = random_features(r, {{16, 4, 4}, {32, 2, 2}, {64, 1, 1}});
                 auto w = random_features(r, {{8, 4, 4}, {16, 2, 2}, {32, 1, 1}});
                 for (auto& t : w) t.set_requires_grad(false);
                 auto in = leaves(n->phi.named_parameters());
                 in.insert(in.end(), h.begin(), h.end());
                 return Prepared{in, [n, h, w](Tape& t) {
                                   const auto e = n->phi.forward(t, h);
                                   Tensor s = project(t, e[0], w[0]);
                                   for (std::size_t i = 1; i < e.size(); ++i) s = ops::add(t, s, project(t, e[i], w[i]));
                                   return s;
                                 }, n};
               }});
  return c;
}

// The two composed pipelines of the training loop.
inline std::vector<GradCase> pipeline_cases() {
  std::vector<GradCase> c;
  c.push_back({"phi.psi.triplet_loss", true, [](Rng& r) {
                 auto n = random_nets(r);
                 n->phi.set_trainable(true);
                 auto a = uniform_tensor({3, 8, 8}, r, 0, 1);
                 auto p = uniform_tensor({3, 8, 8}, r, 0, 1);
                 auto ng = uniform_tensor({3, 8, 8}, r, 0, 1);
                 // Margin large enough that the hinge is active.
                 const double margin = r.uniform(5.0, 10.0);
                 auto in = leaves(n->phi.named_parameters());
                 in.insert(in.end(), {a, p, ng});
                 return Prepared{in, [=](Tape& t) {
                                   auto e = [&](const Tensor& x) { return n->phi.forward(t, n->psi.forward(t, x)); };
                                   return losses::triplet(t, e(a), e(p), e(ng), margin);
                                 }, n};
               }});
  c.push_back({"generator.perceptual_loss", true, [](Rng& r) {
                 auto n = random_nets(r);
                 n->f.set_trainable(true);
                 auto x = uniform_tensor({3, 8, 8}, r, 0, 1, false);
                 auto y = uniform_tensor({3, 8, 8}, r, 0, 1, false);
                 return Prepared{leaves(n->f.named_parameters()), [=](Tape& t) {
                                   const auto fx = n->psi.forward(t, n->f.forward(t, x));
                                   Tape side;
                                   const auto fy = n->psi.forward(side, y);
                                   return losses::perceptual(t, fx, fy);
                                 }, n};
               }});
  return c;
}

struct CaseOutcome {
  std::string name;
  double worst_error = 0.0;
  int points = 0;
  int redraws = 0;
};

// Runs `points` smooth random points of one case. A point whose finite
// differences disagree across step sizes straddles a kink and is redrawn
// (up to 20 times per point).
inline CaseOutcome run_case(const GradCase& gc, int points, Rng& rng) {
  CaseOutcome out{gc.name, 0.0, 0, 0};
  for (int p = 0; p < points; ++p) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      auto prep = gc.prepare(rng);
      double err = 0.0;
      bool smooth = true;
      if (gc.directional) {
        for (std::size_t k = 0; k < prep.inputs.size() && smooth; ++k) {
          std::vector<Tensor> one{prep.inputs[k]};
          const auto r = check_directional(prep.f, one, rng, 2);
          smooth = r.smooth;
          err = std::max(err, r.error);
        }
      } else {
        const auto r = check_elementwise(prep.f, prep.inputs);
        smooth = r.smooth;
        err = r.error;
      }
      if (!smooth) {
        ++out.redraws;
        continue;
      }
      out.worst_error = std::max(out.worst_error, err);
      ++out.points;
      break;
    }
  }
  return out;
}

}  // namespace dpl_test
