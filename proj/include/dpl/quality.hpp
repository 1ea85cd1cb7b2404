// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dpl/image.hpp"

namespace dpl {

/// 10 log10(1 / MSE) for images in [0, 1]; +infinity when the images match.
double psnr(const Image& a, const Image& b);

/// Three-scale MS-SSIM on BT.601 luma. 11-tap Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, dyadic 2x2 mean downsampling, scale weights
/// 0.0448/0.2856/0.3001 renormalized to sum 1. Negative contrast-structure
/// terms are clamped to 0, so the result stays in [0, 1]. Needs min extent >= 32.
double ms_ssim(const Image& a, const Image& b);

/// Mean absolute difference of per-channel means.
double channel_mean_error(const Image& a, const Image& b);

}  // namespace dpl
