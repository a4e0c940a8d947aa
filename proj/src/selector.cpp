#include "fgwk/selector.hpp"

#include <algorithm>
#include <numeric>

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"

namespace fgwk::selector {

void SelectionSchedule::validate(const BackboneConfig& backbone) const {
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const std::size_t side = backbone.spatial(b);
        if (k[b] == 0 || k[b] > side * side) {
            throw ConfigError("selection[" + std::to_string(b) + "] = " + std::to_string(k[b]) +
                              " must be in [1, " + std::to_string(side * side) + "]");
        }
    }
}

std::size_t SelectionSchedule::total() const { return std::accumulate(k.begin(), k.end(), std::size_t{0}); }

SelectorHead SelectorHead::init(std::size_t channels, std::size_t classes, Rng& rng) {
    return {glorot_uniform({classes, channels, 1, 1}, channels, classes, rng), zero_parameter({classes})};
}

ParameterList SelectorHead::parameters() const { return {{"weight", weight}, {"bias", bias}}; }

ClassScoreMap score_pixels(const Tensor& fmap, const SelectorHead& head) {
    if (fmap.rank() != 3 || fmap.dim(0) != head.channels()) {
        throw DimensionError("score_pixels: head expects " + std::to_string(head.channels()) +
                             " channels, feature map is " + shape_str(fmap.shape()));
    }
    return {ops::conv2d(fmap, head.weight, head.bias, 1, 0), head.classes()};
}

Tensor pixel_confidence(const ClassScoreMap& scores) {
    NoGradGuard guard;
    const auto& s = scores.scores;
    const std::size_t classes = s.dim(0), height = s.dim(1), width = s.dim(2);
    const std::size_t plane = height * width;
    auto probs = ops::softmax(s.detach(), 0);
    std::vector<Real> best(plane, 0.0f);
    auto p = probs.data();
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            best[i] = std::max(best[i], p[c * plane + i]);
        }
    }
    return Tensor::from({height, width}, std::move(best));
}

SelectionResult rank_and_select(const Tensor& confidence, std::size_t k) {
    const std::size_t n = confidence.numel();
    if (k < 1 || k > n) {
        throw ContractError("rank_and_select: k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(n) + "]");
    }
    auto p = confidence.data();
    SelectionResult result;
    result.sorted_indices.resize(n);
    std::iota(result.sorted_indices.begin(), result.sorted_indices.end(), std::size_t{0});
    std::stable_sort(result.sorted_indices.begin(), result.sorted_indices.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    result.chosen.assign(result.sorted_indices.begin(),
                         result.sorted_indices.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto i : result.chosen) {
        result.confidences.push_back(p[i]);
    }
    return result;
}

Tensor gather_points(const Tensor& fmap, std::span<const std::size_t> chosen) {
    if (fmap.rank() != 3) {
        throw DimensionError("gather_points: expected [C x H x W], got " + shape_str(fmap.shape()));
    }
    const std::size_t channels = fmap.dim(0);
    const std::size_t plane = fmap.dim(1) * fmap.dim(2);
    for (auto i : chosen) {
        if (i >= plane) {
            throw IndexError("gather_points: index " + std::to_string(i) + " outside a map of " +
                             std::to_string(plane) + " pixels");
        }
    }
    auto pixels = ops::transpose(ops::reshape(fmap, {channels, plane}));
    return ops::gather_rows(pixels, chosen);
}

} // namespace fgwk::selector
