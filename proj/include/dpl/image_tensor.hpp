// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dpl/image.hpp"
#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS {

/// HWC image -> [3,H,W] tensor.
Tensor image_to_tensor(const Image& image, bool requires_grad = false);

/// [3,H,W] tensor -> image, clamping to [0, 1].
Image tensor_to_image(const Tensor& tensor);

}  // namespace dpl::inline DPL_PRECISION_NS
