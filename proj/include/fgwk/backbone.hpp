#pragma once

#include <array>
#include <cstddef>

#include "fgwk/parameters.hpp"
#include "fgwk/rng.hpp"
#include "fgwk/tensor.hpp"

namespace fgwk {

inline constexpr std::size_t kNumBlocks = 4;

struct BackboneConfig {
    std::size_t in_channels = 1;
    std::size_t base_channels = 16;
    std::size_t input_size = 64;

    // Throws ConfigError unless every extent is positive and input_size is a
    // multiple of 2^kNumBlocks.
    void validate() const;

    // Channels of block b (0-based): base_channels * 2^b.
    std::size_t channels(std::size_t block) const { return base_channels << block; }
    // Side of block b's map: input_size / 2^(b + 1).
    std::size_t spatial(std::size_t block) const { return input_size >> (block + 1); }
};

// One map per block, map b shaped [channels(b) x spatial(b) x spatial(b)].
struct FeatureMapSet {
    std::array<Tensor, kNumBlocks> maps;
};

// Four convolutional blocks; each is conv3x3/stride 2 -> relu -> conv3x3 ->
// relu, halving resolution and doubling channels.
class Backbone {
public:
    Backbone(const BackboneConfig& cfg, Rng& rng);

    // image: [in_channels x input_size x input_size]
    FeatureMapSet forward(const Tensor& image) const;

    const BackboneConfig& config() const { return cfg_; }
    ParameterList parameters() const;

private:
    struct Block {
        Tensor down_weight, down_bias;
        Tensor conv_weight, conv_bias;
    };

    BackboneConfig cfg_;
    std::array<Block, kNumBlocks> blocks_;
};

} // namespace fgwk
