#include <doctest.h>

#include "grad_cases.hpp"

using namespace dpl_test;

namespace {

void run_all(const std::vector<GradCase>& cases, int points, double tol, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& gc : cases) {
    const auto out = run_case(gc, points, rng);
    INFO(gc.name << ": worst " << out.worst_error << " over " << out.points << " points, " << out.redraws
                 << " redraws");
    CHECK(out.points == points);
    CHECK(out.worst_error <= tol);
  }
}

}  // namespace

TEST_CASE("op gradients match central differences") { run_all(op_cases(), 100, 1e-6, 101); }

TEST_CASE("loss gradients match central differences") { run_all(loss_cases(), 10, 1e-6, 102); }

TEST_CASE("network gradients match central differences") { run_all(network_cases(), 3, 1e-5, 103); }

TEST_CASE("composed pipeline gradients match central differences") { run_all(pipeline_cases(), 3, 1e-5, 104); }

TEST_CASE("smoothness probe rejects a kink") {
  auto x = Tensor::from_data({1}, {1e-7}, true);
  const Objective f = [x](Tape& t) { return ops::sum(t, ops::abs(t, x)); };
  std::vector<Tensor> in{x};
  CHECK_FALSE(check_elementwise(f, in).smooth);
  x.mutable_data()[0] = 0.5;
  const auto r = check_elementwise(f, in);
  CHECK(r.smooth);
  CHECK(r.error < 1e-9);
}
