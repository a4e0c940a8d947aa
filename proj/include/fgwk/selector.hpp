#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fgwk/backbone.hpp"
#include "fgwk/parameters.hpp"
#include "fgwk/tensor.hpp"

// Weakly supervised selector: a per-pixel linear classifier over one block's
// feature map, softmax-confidence ranking of the pixels and gathering of the
// top-k feature points.
namespace fgwk::selector {

// Points kept per block.
struct SelectionSchedule {
    std::array<std::size_t, kNumBlocks> k{32, 16, 8, 4};

    static SelectionSchedule full_scale() { return {{2048, 512, 128, 32}}; }

    // Throws ConfigError when some k_b is zero or exceeds the block's H*W.
    void validate(const BackboneConfig& backbone) const;
    std::size_t total() const;
};

// Per-pixel linear classifier, stored as a 1x1 convolution.
struct SelectorHead {
    Tensor weight; // [classes x channels x 1 x 1]
    Tensor bias;   // [classes]

    static SelectorHead init(std::size_t channels, std::size_t classes, Rng& rng);
    std::size_t channels() const { return weight.dim(1); }
    std::size_t classes() const { return weight.dim(0); }
    ParameterList parameters() const;
};

struct ClassScoreMap {
    Tensor scores; // [classes x H x W] per-pixel logits
    std::size_t num_classes = 0;
};

struct SelectionResult {
    // Flat pixel indices, most confident first; a permutation of [0, H*W).
    std::vector<std::size_t> sorted_indices;
    // The first k entries of sorted_indices.
    std::vector<std::size_t> chosen;
    // Confidence of each chosen point, same order as `chosen`.
    std::vector<Real> confidences;
    // [k x channels], differentiable back to the feature map. Undefined until
    // gather_points runs.
    Tensor points;
};

ClassScoreMap score_pixels(const Tensor& fmap, const SelectorHead& head);

// Max-class softmax probability of every pixel, [H x W]. Not differentiable.
Tensor pixel_confidence(const ClassScoreMap& scores);

// Descending stable sort of the confidences (ties: lower flat index first),
// keeping the first k.
SelectionResult rank_and_select(const Tensor& confidence, std::size_t k);

// Row r is the feature vector at flat position chosen[r]; [k x C].
Tensor gather_points(const Tensor& fmap, std::span<const std::size_t> chosen);

} // namespace fgwk::selector
