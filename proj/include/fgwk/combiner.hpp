#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fgwk/backbone.hpp"
#include "fgwk/parameters.hpp"
#include "fgwk/tensor.hpp"

// Fusion of the selected points: per-block FPN projection to a common
// width, one graph-convolution layer over all points, mean pooling into a
// single super node and a linear prediction head.
namespace fgwk::combiner {

struct FpnConfig {
    std::size_t proj_width = 96;

    // Maps the `fpn_size` config value to a projection width: the two sizes
    // studied at full scale (1536 default, 1024 variant) become 96 and 64;
    // any other value is taken literally.
    static std::size_t desk_width(std::size_t fpn_size);
};

struct LinearLayer {
    Tensor weight; // [in x out]
    Tensor bias;   // [out]

    static LinearLayer init(std::size_t in, std::size_t out, Rng& rng);
    std::size_t in_width() const { return weight.dim(0); }
    std::size_t out_width() const { return weight.dim(1); }
    ParameterList parameters() const;
};

struct FpnProjector {
    std::array<LinearLayer, kNumBlocks> blocks;

    static FpnProjector init(const BackboneConfig& backbone, const FpnConfig& cfg, Rng& rng);
    std::size_t width() const { return blocks[0].out_width(); }
    ParameterList parameters() const;
};

struct FusionGraph {
    Tensor nodes;     // [N x width]
    Tensor adjacency; // [N x N], rows sum to 1, self-loops included
};

// Projects each block's [k_b x C_b] points with that block's layer and
// stacks them, -> [sum k_b x width].
Tensor fpn_project(const std::vector<Tensor>& points_per_block, const FpnProjector& fpn);

// Complete graph with self-loops, D^-1/2 (A + I) D^-1/2 with A the
// all-ones off-diagonal matrix, rows then renormalized to sum 1.
FusionGraph build_graph(const Tensor& nodes);

// relu(adjacency * nodes * weight); weight is [width x width].
Tensor gcn_forward(const FusionGraph& graph, const Tensor& weight);

// Column-wise mean over nodes, [N x width] -> [width].
Tensor pool_supernode(const Tensor& fused);

// pooled [width] * W + b -> [classes]
Tensor predict(const Tensor& pooled, const LinearLayer& head);

// Row-wise stack of per-point class-logit vectors (each [C'] or [1 x C']),
// -> [N x C'].
Tensor concat_reference(const std::vector<Tensor>& points);

} // namespace fgwk::combiner
