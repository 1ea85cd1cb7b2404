// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scalar precision is fixed per build of the library: 32-bit for training
// runs, 64-bit (DPL_DOUBLE=1) for gradient-check suites. Each precision lives
// in its own inline namespace so both builds can be linked into one binary.

#if defined(DPL_DOUBLE) && DPL_DOUBLE
#define DPL_PRECISION_NS f64
#else
#define DPL_PRECISION_NS f32
#endif

namespace dpl::inline DPL_PRECISION_NS {

#if defined(DPL_DOUBLE) && DPL_DOUBLE
using real = double;
#else
using real = float;
#endif

}  // namespace dpl::inline DPL_PRECISION_NS
