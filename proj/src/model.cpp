#include "fgwk/model.hpp"

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"

namespace fgwk {

void ModelConfig::validate() const {
    backbone.validate();
    schedule.validate(backbone);
    if (num_classes < 2) {
        throw ConfigError("num_classes must be at least 2");
    }
    if (fpn.proj_width == 0) {
        throw ConfigError("fpn_size must be positive");
    }
}

FrozenSelection ForwardPass::frozen_selection() const {
    FrozenSelection frozen;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        frozen[b] = selections[b].chosen;
    }
    return frozen;
}

namespace {

Backbone make_backbone(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    return Backbone(cfg.backbone, rng);
}

} // namespace

PluginModel::PluginModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), backbone_([&] {
          Rng rng(derive_seed(seed, 1));
          return make_backbone(cfg, rng);
      }()) {
    Rng rng(derive_seed(seed, 2));
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        heads_[b] = selector::SelectorHead::init(cfg_.backbone.channels(b), cfg_.num_classes, rng);
    }
    fpn_ = combiner::FpnProjector::init(cfg_.backbone, cfg_.fpn, rng);
    const std::size_t width = cfg_.fpn.proj_width;
    gcn_weight_ = he_uniform({width, width}, width, rng);
    head_ = combiner::LinearLayer::init(width, cfg_.num_classes, rng);
}

ForwardPass PluginModel::forward(const Tensor& image, const FrozenSelection* frozen) const {
    ForwardPass pass;
    pass.features = backbone_.forward(image);
    std::vector<Tensor> points;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const auto& fmap = pass.features.maps[b];
        pass.pixel_scores[b] = selector::score_pixels(fmap, heads_[b]);
        pass.block_logits[b] = ops::spatial_mean(pass.pixel_scores[b].scores);
        auto confidence = selector::pixel_confidence(pass.pixel_scores[b]);
        auto& selection = pass.selections[b];
        selection = selector::rank_and_select(confidence, cfg_.schedule.k[b]);
        if (frozen) {
            selection.chosen = (*frozen)[b];
            selection.confidences.clear();
            for (auto i : selection.chosen) {
                selection.confidences.push_back(confidence.data()[i]);
            }
        }
        selection.points = selector::gather_points(fmap, selection.chosen);
        points.push_back(selection.points);
    }
    pass.nodes = combiner::fpn_project(points, fpn_);
    auto graph = combiner::build_graph(pass.nodes);
    pass.pooled = combiner::pool_supernode(combiner::gcn_forward(graph, gcn_weight_));
    pass.logits = combiner::predict(pass.pooled, head_);
    return pass;
}

ParameterList PluginModel::parameters() const {
    ParameterList params;
    append_prefixed(params, "backbone", backbone_.parameters());
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        append_prefixed(params, "selector.block" + std::to_string(b), heads_[b].parameters());
    }
    append_prefixed(params, "fpn", fpn_.parameters());
    params.push_back({"gcn.weight", gcn_weight_});
    append_prefixed(params, "head", head_.parameters());
    return params;
}

void PluginModel::zero_grads() const { fgwk::zero_grads(parameters()); }

BatchLoss batch_loss(const PluginModel& model, std::span<const Tensor> images,
                     std::span<const int> labels, std::span<const FrozenSelection> frozen) {
    if (images.empty() || images.size() != labels.size()) {
        throw ContractError("batch_loss: " + std::to_string(images.size()) + " images for " +
                            std::to_string(labels.size()) + " labels");
    }
    if (!frozen.empty() && frozen.size() != images.size()) {
        throw ContractError("batch_loss: frozen selections must cover every image");
    }
    BatchLoss loss;
    std::vector<Tensor> final_rows;
    std::array<std::vector<Tensor>, kNumBlocks> block_rows;
    const std::size_t classes = model.config().num_classes;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto pass = model.forward(images[i], frozen.empty() ? nullptr : &frozen[i]);
        final_rows.push_back(ops::reshape(pass.logits, {1, classes}));
        for (std::size_t b = 0; b < kNumBlocks; ++b) {
            block_rows[b].push_back(ops::reshape(pass.block_logits[b], {1, classes}));
        }
        loss.passes.push_back(std::move(pass));
    }
    loss.combiner = ops::cross_entropy(ops::concat(final_rows, 0), labels);
    loss.total = loss.combiner;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        loss.auxiliary[b] = ops::cross_entropy(ops::concat(block_rows[b], 0), labels);
        loss.total = ops::add(loss.total, loss.auxiliary[b]);
    }
    return loss;
}

} // namespace fgwk
