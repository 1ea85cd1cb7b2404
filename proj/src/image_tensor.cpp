// SPDX-License-Identifier: Apache-2.0
#include "dpl/image_tensor.hpp"

#include <stdexcept>

namespace dpl::inline DPL_PRECISION_NS {

Tensor image_to_tensor(const Image& image, bool requires_grad) {
  const std::size_t H = image.height(), W = image.width(), P = H * W;
  const auto px = image.pixels();
  std::vector<real> values(3 * P);
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t c = 0; c < 3; ++c) values[c * P + i] = static_cast<real>(px[3 * i + c]);
  return Tensor::from_data({3, H, W}, std::move(values), requires_grad);
}

Image tensor_to_image(const Tensor& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != 3)
    throw std::invalid_argument("tensor_to_image: expected [3,H,W], got " + shape_to_string(tensor.shape()));
  const std::size_t H = tensor.dim(1), W = tensor.dim(2), P = H * W;
  const auto v = tensor.data();
  std::vector<float> px(3 * P);
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t c = 0; c < 3; ++c) px[3 * i + c] = static_cast<float>(v[c * P + i]);
  return Image(H, W, std::move(px));
}

}  // namespace dpl::inline DPL_PRECISION_NS
