#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fgwk/backbone.hpp"
#include "fgwk/combiner.hpp"
#include "fgwk/selector.hpp"

namespace fgwk {

struct ModelConfig {
    BackboneConfig backbone;
    selector::SelectionSchedule schedule;
    combiner::FpnConfig fpn;
    std::size_t num_classes = 4;

    void validate() const;
};

// Chosen flat indices per block; lets a caller replay a forward pass with a
// fixed selection (finite-difference checks need the selection held still).
using FrozenSelection = std::array<std::vector<std::size_t>, kNumBlocks>;

struct ForwardPass {
    FeatureMapSet features;
    std::array<selector::ClassScoreMap, kNumBlocks> pixel_scores;
    // Spatial mean of each block's pixel logits, [classes].
    std::array<Tensor, kNumBlocks> block_logits;
    std::array<selector::SelectionResult, kNumBlocks> selections;
    Tensor nodes;  // [sum k x width]
    Tensor pooled; // [width]
    Tensor logits; // [classes]

    FrozenSelection frozen_selection() const;
};

// Backbone, one selector head per block, FPN projection, graph fusion and
// prediction head.
class PluginModel {
public:
    PluginModel(const ModelConfig& cfg, std::uint64_t seed);

    // image: [in_channels x S x S]
    ForwardPass forward(const Tensor& image, const FrozenSelection* frozen = nullptr) const;

    const ModelConfig& config() const { return cfg_; }
    ParameterList parameters() const;
    void zero_grads() const;

    // Direct access for tests and explanation.
    const Backbone& backbone() const { return backbone_; }
    const std::array<selector::SelectorHead, kNumBlocks>& selector_heads() const { return heads_; }
    const combiner::FpnProjector& fpn() const { return fpn_; }
    const Tensor& gcn_weight() const { return gcn_weight_; }
    const combiner::LinearLayer& head() const { return head_; }

private:
    ModelConfig cfg_;
    Backbone backbone_;
    std::array<selector::SelectorHead, kNumBlocks> heads_;
    combiner::FpnProjector fpn_;
    Tensor gcn_weight_;
    combiner::LinearLayer head_;
};

struct BatchLoss {
    // combiner + sum of the per-block auxiliary losses, equal weights.
    Tensor total;
    Tensor combiner;
    std::array<Tensor, kNumBlocks> auxiliary;
    std::vector<ForwardPass> passes;
};

// Mean cross-entropy over the batch of the final logits, plus one
// cross-entropy per block on the spatially averaged pixel logits.
BatchLoss batch_loss(const PluginModel& model, std::span<const Tensor> images,
                     std::span<const int> labels,
                     std::span<const FrozenSelection> frozen = {});

} // namespace fgwk
