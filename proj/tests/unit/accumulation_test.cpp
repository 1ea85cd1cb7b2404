#include <doctest.h>

#include "mechanics.hpp"

using namespace dpl;
using namespace dpl_test;

TEST_CASE("accumulate x N then apply equals the summed-loss update exactly") {
  for (auto mode : {FineTuneMode::feature_selection, FineTuneMode::full})
    for (std::size_t n : {1u, 2u, 4u}) {
      CAPTURE(to_string(mode));
      CAPTURE(n);
      const auto r = check_accumulation(mode, n, 40 + n);
      CHECK(r.nonzero);
      CHECK(r.grads_identical);
      CHECK(r.params_identical);
      CHECK(r.d_c > 0);
    }
}

TEST_CASE("freeze discipline holds phase by phase") {
  for (auto mode : {FineTuneMode::feature_selection, FineTuneMode::full, FineTuneMode::frozen}) {
    CAPTURE(to_string(mode));
    const auto r = audit_freeze(mode, 12, 9);
    for (const auto& v : r.violations) FAIL_CHECK(v);
    CHECK(r.violations.empty());
    CHECK(r.f_moved);
    if (mode != FineTuneMode::frozen) {
      CHECK(r.selector_moved);
      CHECK(r.selector_applies == 3);
    }
  }
}
