// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "dpl/image.hpp"
#include "dpl/rng.hpp"
#include "dpl/transforms.hpp"

namespace dpl {

enum class Task { darken, colorcast, blur, textures };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view name);

/// Source/target pair: x is the degraded input, y the target.
struct ImagePair {
  Image x;
  Image y;
};

struct LabeledImage {
  Image image;
  int label = 0;
};

inline constexpr int kTextureClasses = 10;
inline constexpr std::size_t kMinSyntheticSize = 16;

/// Random procedural scene: gradient background, filled shapes and a striped
/// patch.
Image procedural_scene(std::size_t size, Rng& rng);

/// One texture of family `label` (0..9): stripes, checker, dots, radial
/// gradient, linear gradient, noise, rings, diagonal bands, blobs, grid.
Image procedural_texture(int label, std::size_t size, Rng& rng);

/// Paired data for darken / colorcast / blur. `task` must not be textures.
std::vector<ImagePair> generate_pairs(Task task, std::size_t count, std::size_t size, Rng& rng);

/// Balanced labels: sample i has label i % 10.
std::vector<LabeledImage> generate_textures(std::size_t count, std::size_t size, Rng& rng);

/// Degradation applied to a target to produce the source for `task`.
Image degrade(Task task, const Image& target, Rng& rng);

}  // namespace dpl
