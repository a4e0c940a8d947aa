#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace fgwk {

// Axis-aligned pixel rectangle, [x, x + w) x [y, y + h).
struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    bool contains(double px, double py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }
    int area() const { return w * h; }
    Rect dilated(int by) const { return {x - by, y - by, w + 2 * by, h + 2 * by}; }
    // Intersection with [0, width) x [0, height); may be empty.
    Rect clipped(int width, int height) const;
    bool operator==(const Rect&) const = default;
};

// 8-bit grayscale image, row-major.
struct Image {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::uint8_t fill = 0);

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    bool operator==(const Image&) const = default;
};

std::uint8_t clamp_gray(double v);

// Bilinear sample at continuous coordinates where pixel (i, j) has its
// center at (i + 0.5, j + 0.5). Points outside the pixel-center hull
// return `fill`.
double sample_bilinear(const Image& img, double x, double y, double fill);

// Median gray level of the pixels outside `exclude`.
std::uint8_t median_outside(const Image& img, const Rect& exclude);

// Binary PGM (P5, maxval 255). IoError on file problems, FormatError on
// malformed content.
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

// Binary PPM (P6) from interleaved RGB bytes.
void write_ppm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb);

} // namespace fgwk
