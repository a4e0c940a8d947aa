#include "fgwk/explain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"

namespace fgwk::explain {

std::vector<double> upsample_bilinear(std::span<const double> grid, std::size_t n,
                                      std::size_t out_size) {
    if (grid.size() != n * n || n == 0) {
        throw DimensionError("upsample_bilinear: grid of " + std::to_string(grid.size()) +
                             " values is not " + std::to_string(n) + "x" + std::to_string(n));
    }
    std::vector<double> out(out_size * out_size);
    const double ratio = static_cast<double>(n) / static_cast<double>(out_size);
    const double max_coord = static_cast<double>(n - 1);
    auto source = [&](std::size_t i, std::size_t& lo, std::size_t& hi, double& frac) {
        const double c = std::clamp((static_cast<double>(i) + 0.5) * ratio - 0.5, 0.0, max_coord);
        lo = static_cast<std::size_t>(std::floor(c));
        hi = std::min(lo + 1, n - 1);
        frac = c - static_cast<double>(lo);
    };
    for (std::size_t y = 0; y < out_size; ++y) {
        std::size_t y0, y1;
        double ay;
        source(y, y0, y1, ay);
        for (std::size_t x = 0; x < out_size; ++x) {
            std::size_t x0, x1;
            double ax;
            source(x, x0, x1, ax);
            const double top = (1 - ax) * grid[y0 * n + x0] + ax * grid[y0 * n + x1];
            const double bottom = (1 - ax) * grid[y1 * n + x0] + ax * grid[y1 * n + x1];
            out[y * out_size + x] = (1 - ay) * top + ay * bottom;
        }
    }
    return out;
}

HeatMap cam_from_activations(const Tensor& activations, std::span<const Real> gradient,
                             std::size_t out_size, int target_class, std::size_t layer) {
    if (activations.rank() != 3 || activations.dim(1) != activations.dim(2)) {
        throw DimensionError("grad_cam: activations must be [K x n x n], got " +
                             shape_str(activations.shape()));
    }
    if (gradient.size() != activations.numel()) {
        throw DimensionError("grad_cam: gradient size does not match the activations");
    }
    const std::size_t k = activations.dim(0), n = activations.dim(1), area = n * n;
    const auto a = activations.data();

    std::vector<double> cam(area, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double weight = 0.0;
        for (std::size_t i = 0; i < area; ++i) {
            weight += gradient[c * area + i];
        }
        weight /= static_cast<double>(area);
        for (std::size_t i = 0; i < area; ++i) {
            cam[i] += weight * a[c * area + i];
        }
    }
    for (auto& v : cam) {
        v = std::max(v, 0.0);
    }
    const auto [lo, hi] = std::minmax_element(cam.begin(), cam.end());
    const double min = *lo, range = *hi - *lo;
    for (auto& v : cam) {
        v = range > 1e-12 ? (v - min) / range : 0.0;
    }

    HeatMap hm;
    hm.size = out_size;
    hm.values = upsample_bilinear(cam, n, out_size);
    for (auto& v : hm.values) {
        v = std::clamp(v, 0.0, 1.0);
    }
    hm.target_class = target_class;
    hm.source_layer = layer;
    return hm;
}

HeatMap grad_cam(const PluginModel& model, const Tensor& image, int target_class,
                 std::size_t layer) {
    const auto& cfg = model.config();
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= cfg.num_classes) {
        throw ContractError("grad_cam: class " + std::to_string(target_class) + " not in [0, " +
                            std::to_string(cfg.num_classes) + ")");
    }
    if (layer >= kNumBlocks) {
        throw ContractError("grad_cam: no block " + std::to_string(layer));
    }
    auto pass = model.forward(image);
    const auto& activations = pass.features.maps[layer];
    auto score = ops::pick(pass.logits, static_cast<std::size_t>(target_class));
    score.backward();
    const auto gradient = activations.grad();
    model.zero_grads();
    return cam_from_activations(activations, gradient, cfg.backbone.input_size, target_class,
                                layer);
}

Localization localization_score(const HeatMap& hm, const Rect& patch) {
    Localization out;
    const auto total = std::accumulate(hm.values.begin(), hm.values.end(), 0.0);
    if (total <= 0.0) {
        return out;
    }
    double inside = 0.0;
    for (std::size_t y = 0; y < hm.size; ++y) {
        for (std::size_t x = 0; x < hm.size; ++x) {
            if (patch.contains(static_cast<double>(x), static_cast<double>(y))) {
                inside += hm.at(x, y);
            }
        }
    }
    out.mass_in_patch = inside / total;

    auto sorted = hm.values;
    const auto keep = (sorted.size() + 9) / 10;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                     sorted.end(), std::greater<>());
    const double threshold = std::max(sorted[keep - 1], 1e-300);
    double weight = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t y = 0; y < hm.size; ++y) {
        for (std::size_t x = 0; x < hm.size; ++x) {
            const double v = hm.at(x, y);
            if (v >= threshold) {
                weight += v;
                cx += v * (static_cast<double>(x) + 0.5);
                cy += v * (static_cast<double>(y) + 0.5);
            }
        }
    }
    out.centroid_x = cx / weight;
    out.centroid_y = cy / weight;
    // Continuous extent of the dilated patch, edges included.
    const auto region = patch.dilated(2);
    out.hit = out.centroid_x >= region.x && out.centroid_x <= region.x + region.w &&
              out.centroid_y >= region.y && out.centroid_y <= region.y + region.h;
    return out;
}

Rgb colormap(double heat) {
    static constexpr std::array<Rgb, 5> stops{
        Rgb{0, 0, 255}, Rgb{0, 255, 255}, Rgb{0, 255, 0}, Rgb{255, 255, 0}, Rgb{255, 0, 0}};
    const double t = std::clamp(heat, 0.0, 1.0) * 4.0;
    const auto i = std::min(static_cast<std::size_t>(t), std::size_t{3});
    const double f = t - static_cast<double>(i);
    Rgb out;
    for (std::size_t c = 0; c < 3; ++c) {
        out[c] = clamp_gray((1 - f) * stops[i][c] + f * stops[i + 1][c]);
    }
    return out;
}

std::vector<std::uint8_t> overlay_rgb(const Image& gray, const HeatMap& hm) {
    if (gray.width != hm.size || gray.height != hm.size) {
        throw DimensionError("overlay: image " + std::to_string(gray.width) + "x" +
                             std::to_string(gray.height) + " vs heatmap " +
                             std::to_string(hm.size) + "x" + std::to_string(hm.size));
    }
    std::vector<std::uint8_t> rgb(gray.pixels.size() * 3);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const double h = std::clamp(hm.values[i], 0.0, 1.0);
        const double a = kOverlayAlpha * h;
        const auto color = colormap(h);
        for (std::size_t c = 0; c < 3; ++c) {
            rgb[i * 3 + c] = clamp_gray(gray.pixels[i] * (1 - a) + color[c] * a);
        }
    }
    return rgb;
}

void write_overlay(const std::filesystem::path& path, const Image& gray, const HeatMap& hm) {
    write_ppm(path, gray.width, gray.height, overlay_rgb(gray, hm));
}

} // namespace fgwk::explain
