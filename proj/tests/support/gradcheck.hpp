// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central-difference gradient oracle. Intended for the 64-bit build.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dpl/rng.hpp"
#include "dpl/tensor.hpp"

namespace dpl_test {

using dpl::Rng;
using dpl::Tape;
using dpl::Tensor;
using Objective = std::function<Tensor(Tape&)>;

inline double eval(const Objective& f) {
  Tape tape;
  return static_cast<double>(f(tape).item());
}

inline std::vector<std::vector<double>> analytic_grads(const Objective& f, std::vector<Tensor>& inputs) {
  for (auto& t : inputs) t.zero_grad();
  Tape tape;
  const auto loss = f(tape);
  tape.backward(loss);
  std::vector<std::vector<double>> out;
  for (auto& t : inputs) {
    if (t.has_grad()) out.emplace_back(t.grad().begin(), t.grad().end());
    else out.emplace_back(t.numel(), 0.0);
  }
  return out;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// |a - n| / max(|a|, |n|, floor), with both-zero counted as exact agreement.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n, double floor = 1e-300) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - n[i];
  const double scale = std::max({norm(a), norm(n), floor});
  return norm(d) / scale;
}

// Smallest derivative a central difference of f at step h can resolve.
inline double resolution(const Objective& f, double h) {
  return 8.0 * std::numeric_limits<dpl::real>::epsilon() * std::max(std::abs(eval(f)), 1.0) / h;
}

// Numerical d f / d inputs[k][i] for every element, at step h.
inline std::vector<std::vector<double>> numeric_grads(const Objective& f, std::vector<Tensor>& inputs, double h) {
  std::vector<std::vector<double>> out;
  for (auto& t : inputs) {
    std::vector<double> g(t.numel());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto saved = data[i];
      data[i] = saved + h;
      const double up = eval(f);
      data[i] = saved - h;
      const double down = eval(f);
      data[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Numerical directional derivative along `dir` (one vector per input).
inline double numeric_directional(const Objective& f, std::vector<Tensor>& inputs,
                                  const std::vector<std::vector<double>>& dir, double h) {
  auto shift = [&](double s) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      auto data = inputs[k].mutable_data();
      for (std::size_t i = 0; i < data.size(); ++i) data[i] += static_cast<dpl::real>(s * dir[k][i]);
    }
  };
  std::vector<std::vector<dpl::real>> saved;
  for (auto& t : inputs) saved.emplace_back(t.data().begin(), t.data().end());
  auto restore = [&] {
    for (std::size_t k = 0; k < inputs.size(); ++k) std::copy(saved[k].begin(), saved[k].end(), inputs[k].mutable_data().begin());
  };
  shift(h);
  const double up = eval(f);
  restore();
  shift(-h);
  const double down = eval(f);
  restore();
  return (up - down) / (2.0 * h);
}

struct CheckResult {
  double error = 0.0;
  // Points that straddled a kink (step-size estimates disagree) and were redrawn.
  int redraws = 0;
  bool smooth = true;
};

// Full elementwise check. A point is smooth when the h and h/2 estimates agree
// to `smooth_tol`; that test looks only at the objective, never at the
// analytic gradient.
inline CheckResult check_elementwise(const Objective& f, std::vector<Tensor>& inputs, double h = 1e-5,
                                     double smooth_tol = 1e-7) {
  CheckResult r;
  const double floor = resolution(f, h / 2);
  const auto n1 = numeric_grads(f, inputs, h);
  const auto n2 = numeric_grads(f, inputs, h / 2);
  for (std::size_t k = 0; k < n1.size(); ++k)
    if (relative_error(n1[k], n2[k], floor) > smooth_tol && norm(n1[k]) > 1e-9) r.smooth = false;
  const auto a = analytic_grads(f, inputs);
  for (std::size_t k = 0; k < a.size(); ++k) r.error = std::max(r.error, relative_error(a[k], n1[k], floor));
  return r;
}

inline CheckResult check_directional(const Objective& f, std::vector<Tensor>& inputs, Rng& rng, int directions = 3,
                                     double h = 1e-5, double smooth_tol = 1e-7) {
  CheckResult r;
  const double floor = resolution(f, h / 2);
  const auto a = analytic_grads(f, inputs);
  for (int d = 0; d < directions; ++d) {
    std::vector<std::vector<double>> dir;
    double along = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      std::vector<double> v(inputs[k].numel());
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = rng.normal();
        along += v[i] * a[k][i];
      }
      dir.push_back(std::move(v));
    }
    const double n1 = numeric_directional(f, inputs, dir, h);
    const double n2 = numeric_directional(f, inputs, dir, h / 2);
    if (std::abs(n1 - n2) > smooth_tol * std::max({std::abs(n1), std::abs(n2), floor})) r.smooth = false;
    r.error = std::max(r.error, relative_error({along}, {n1}, floor));
  }
  return r;
}

inline Tensor random_tensor(dpl::Shape shape, Rng& rng, double scale = 1.0, bool requires_grad = true) {
  std::vector<dpl::real> v(dpl::shape_numel(shape));
  for (auto& x : v) x = static_cast<dpl::real>(scale * rng.normal());
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

inline Tensor uniform_tensor(dpl::Shape shape, Rng& rng, double lo, double hi, bool requires_grad = true) {
  std::vector<dpl::real> v(dpl::shape_numel(shape));
  for (auto& x : v) x = static_cast<dpl::real>(rng.uniform(lo, hi));
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace dpl_test
