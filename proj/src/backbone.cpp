#include "fgwk/backbone.hpp"

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"

namespace fgwk {

void BackboneConfig::validate() const {
    if (in_channels == 0) {
        throw ConfigError("backbone.in_channels must be positive");
    }
    if (base_channels == 0) {
        throw ConfigError("backbone.base_channels must be positive");
    }
    constexpr std::size_t factor = std::size_t{1} << kNumBlocks;
    if (input_size == 0 || input_size % factor != 0) {
        throw ConfigError("backbone.input_size must be a positive multiple of " +
                          std::to_string(factor) + ", got " + std::to_string(input_size));
    }
}

Backbone::Backbone(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    std::size_t in = cfg_.in_channels;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const std::size_t out = cfg_.channels(b);
        auto& block = blocks_[b];
        block.down_weight = he_uniform({out, in, 3, 3}, in * 9, rng);
        block.down_bias = zero_parameter({out});
        block.conv_weight = he_uniform({out, out, 3, 3}, out * 9, rng);
        block.conv_bias = zero_parameter({out});
        in = out;
    }
}

FeatureMapSet Backbone::forward(const Tensor& image) const {
    const Shape expected{cfg_.in_channels, cfg_.input_size, cfg_.input_size};
    if (image.shape() != expected) {
        throw DimensionError("backbone: expected image " + shape_str(expected) + ", got " +
                             shape_str(image.shape()));
    }
    FeatureMapSet out;
    Tensor x = image;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const auto& block = blocks_[b];
        x = ops::relu(ops::conv2d(x, block.down_weight, block.down_bias, 2, 1));
        x = ops::relu(ops::conv2d(x, block.conv_weight, block.conv_bias, 1, 1));
        out.maps[b] = x;
    }
    return out;
}

ParameterList Backbone::parameters() const {
    ParameterList params;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const auto prefix = "block" + std::to_string(b);
        const auto& block = blocks_[b];
        params.push_back({prefix + ".down.weight", block.down_weight});
        params.push_back({prefix + ".down.bias", block.down_bias});
        params.push_back({prefix + ".conv.weight", block.conv_weight});
        params.push_back({prefix + ".conv.bias", block.conv_bias});
    }
    return params;
}

} // namespace fgwk
