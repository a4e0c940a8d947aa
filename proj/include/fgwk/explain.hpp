#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fgwk/image.hpp"
#include "fgwk/model.hpp"

namespace fgwk::explain {

// S x S heat values in [0, 1], row-major.
struct HeatMap {
    std::size_t size = 0;
    std::vector<double> values;
    int target_class = 0;
    std::size_t source_layer = 0;

    double at(std::size_t x, std::size_t y) const { return values[y * size + x]; }
};

// Class activation map from a feature map A [K x h x w] and the gradient of
// the class score with respect to it: w_k = mean(dA_k), cam = relu(sum_k
// w_k A_k), min-max normalized (a flat map becomes all zeros), then
// bilinearly upsampled to out_size x out_size.
HeatMap cam_from_activations(const Tensor& activations, std::span<const Real> gradient,
                             std::size_t out_size, int target_class, std::size_t layer);

// Block 1 is 16x16 on a 64 px input; the last block's cells are as wide as
// a whole patch.
inline constexpr std::size_t kDefaultCamLayer = 1;

// Grad-CAM of the final logit `target_class` over backbone block `layer`.
// Leaves the model's gradients zeroed.
HeatMap grad_cam(const PluginModel& model, const Tensor& image, int target_class,
                 std::size_t layer = kDefaultCamLayer);

// Half-pixel-center bilinear resize of an n x n grid, edges clamped.
std::vector<double> upsample_bilinear(std::span<const double> grid, std::size_t n,
                                      std::size_t out_size);

struct Localization {
    bool hit = false;
    double mass_in_patch = 0.0;
    // Heat-weighted centroid of the top-decile pixels, in pixel coordinates
    // with centers at i + 0.5.
    double centroid_x = 0.0, centroid_y = 0.0;
};

// hit: the top-decile centroid lies inside the patch dilated by 2 px.
// An all-zero map scores hit = false, mass 0.
Localization localization_score(const HeatMap& hm, const Rect& patch);

using Rgb = std::array<std::uint8_t, 3>;

// Five-stop jet: blue, cyan, green, yellow, red at 0, .25, .5, .75, 1.
Rgb colormap(double heat);

inline constexpr double kOverlayAlpha = 0.4;

// Per pixel: out = gray * (1 - a h) + colormap(h) * a h with a = 0.4, so
// cold pixels stay gray. DimensionError if sizes differ.
std::vector<std::uint8_t> overlay_rgb(const Image& gray, const HeatMap& hm);
void write_overlay(const std::filesystem::path& path, const Image& gray, const HeatMap& hm);

} // namespace fgwk::explain
