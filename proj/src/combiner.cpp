#include "fgwk/combiner.hpp"

#include <cmath>

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"

namespace fgwk::combiner {

std::size_t FpnConfig::desk_width(std::size_t fpn_size) {
    switch (fpn_size) {
    case 1536:
        return 96;
    case 1024:
        return 64;
    default:
        return fpn_size;
    }
}

LinearLayer LinearLayer::init(std::size_t in, std::size_t out, Rng& rng) {
    return {glorot_uniform({in, out}, in, out, rng), zero_parameter({out})};
}

ParameterList LinearLayer::parameters() const { return {{"weight", weight}, {"bias", bias}}; }

FpnProjector FpnProjector::init(const BackboneConfig& backbone, const FpnConfig& cfg, Rng& rng) {
    if (cfg.proj_width == 0) {
        throw ConfigError("fpn_size must be positive");
    }
    FpnProjector fpn;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        fpn.blocks[b] = LinearLayer::init(backbone.channels(b), cfg.proj_width, rng);
    }
    return fpn;
}

ParameterList FpnProjector::parameters() const {
    ParameterList params;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        append_prefixed(params, "block" + std::to_string(b), blocks[b].parameters());
    }
    return params;
}

Tensor fpn_project(const std::vector<Tensor>& points_per_block, const FpnProjector& fpn) {
    if (points_per_block.size() != kNumBlocks) {
        throw DimensionError("fpn_project: expected " + std::to_string(kNumBlocks) +
                             " blocks of points, got " + std::to_string(points_per_block.size()));
    }
    std::vector<Tensor> projected;
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
        const auto& points = points_per_block[b];
        const auto& layer = fpn.blocks[b];
        if (points.rank() != 2 || points.dim(1) != layer.in_width()) {
            throw DimensionError("fpn_project: block " + std::to_string(b) + " points " +
                                 shape_str(points.shape()) + " do not match projection input width " +
                                 std::to_string(layer.in_width()));
        }
        projected.push_back(ops::linear(points, layer.weight, layer.bias));
    }
    return ops::concat(projected, 0);
}

FusionGraph build_graph(const Tensor& nodes) {
    if (nodes.rank() != 2) {
        throw DimensionError("build_graph: nodes must be [N x width], got " + shape_str(nodes.shape()));
    }
    const std::size_t n = nodes.dim(0);
    // A + I is all ones, every degree is n.
    const double degree = static_cast<double>(n);
    std::vector<double> entries(n * n, 1.0 / (std::sqrt(degree) * std::sqrt(degree)));
    std::vector<Real> adjacency(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            row_sum += entries[r * n + c];
        }
        for (std::size_t c = 0; c < n; ++c) {
            adjacency[r * n + c] = static_cast<Real>(entries[r * n + c] / row_sum);
        }
    }
    return {nodes, Tensor::from({n, n}, std::move(adjacency))};
}

Tensor gcn_forward(const FusionGraph& graph, const Tensor& weight) {
    if (weight.rank() != 2 || graph.nodes.dim(1) != weight.dim(0)) {
        throw DimensionError("gcn_forward: weight " + shape_str(weight.shape()) +
                             " does not match nodes " + shape_str(graph.nodes.shape()));
    }
    return ops::relu(ops::matmul(ops::matmul(graph.adjacency, graph.nodes), weight));
}

Tensor pool_supernode(const Tensor& fused) { return ops::mean_rows(fused); }

Tensor predict(const Tensor& pooled, const LinearLayer& head) {
    if (pooled.rank() != 1 || pooled.dim(0) != head.in_width()) {
        throw DimensionError("predict: pooled " + shape_str(pooled.shape()) +
                             " does not match head input width " + std::to_string(head.in_width()));
    }
    auto row = ops::reshape(pooled, {1, pooled.dim(0)});
    return ops::reshape(ops::linear(row, head.weight, head.bias), {head.out_width()});
}

Tensor concat_reference(const std::vector<Tensor>& points) {
    if (points.empty()) {
        throw ContractError("concat_reference: no points");
    }
    std::vector<Tensor> rows;
    for (const auto& p : points) {
        if (p.rank() == 1) {
            rows.push_back(ops::reshape(p, {1, p.dim(0)}));
        } else if (p.rank() == 2 && p.dim(0) == 1) {
            rows.push_back(p);
        } else {
            throw DimensionError("concat_reference: point " + shape_str(p.shape()) +
                                 " is not a single logit vector");
        }
    }
    return ops::concat(rows, 0);
}

} // namespace fgwk::combiner
