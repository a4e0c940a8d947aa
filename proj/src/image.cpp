#include "fgwk/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "fgwk/errors.hpp"

namespace fgwk {

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in) {
    std::string token;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) {
                return token;
            }
            continue;
        }
        token.push_back(c);
    }
    return token;
}

std::size_t header_number(std::istream& in, const std::filesystem::path& path, const char* what) {
    const auto token = header_token(in);
    try {
        std::size_t used = 0;
        const auto value = std::stoul(token, &used);
        if (used != token.size()) {
            throw std::invalid_argument(token);
        }
        return value;
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad PGM " + what + " '" + token + "'");
    }
}

} // namespace

Rect Rect::clipped(int width, int height) const {
    const int x0 = std::max(x, 0), y0 = std::max(y, 0);
    const int x1 = std::min(x + w, width), y1 = std::min(y + h, height);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

Image::Image(std::size_t w, std::size_t h, std::uint8_t fill)
    : width(w), height(h), pixels(w * h, fill) {}

std::uint8_t clamp_gray(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double sample_bilinear(const Image& img, double x, double y, double fill) {
    const double fx = x - 0.5, fy = y - 0.5;
    const double max_x = static_cast<double>(img.width - 1);
    const double max_y = static_cast<double>(img.height - 1);
    constexpr double eps = 1e-9;
    if (fx < -eps || fy < -eps || fx > max_x + eps || fy > max_y + eps) {
        return fill;
    }
    const double cx = std::clamp(fx, 0.0, max_x), cy = std::clamp(fy, 0.0, max_y);
    const auto x0 = static_cast<std::size_t>(std::floor(cx));
    const auto y0 = static_cast<std::size_t>(std::floor(cy));
    const std::size_t x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
    const double ax = cx - static_cast<double>(x0), ay = cy - static_cast<double>(y0);
    const double top = (1 - ax) * img.at(x0, y0) + ax * img.at(x1, y0);
    const double bottom = (1 - ax) * img.at(x0, y1) + ax * img.at(x1, y1);
    return (1 - ay) * top + ay * bottom;
}

std::uint8_t median_outside(const Image& img, const Rect& exclude) {
    std::vector<std::uint8_t> values;
    values.reserve(img.pixels.size());
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            if (!exclude.contains(static_cast<double>(x), static_cast<double>(y))) {
                values.push_back(img.at(x, y));
            }
        }
    }
    if (values.empty()) {
        return 0;
    }
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    if (header_token(in) != "P5") {
        throw FormatError(path.string() + ": not a binary PGM");
    }
    const auto width = header_number(in, path, "width");
    const auto height = header_number(in, path, "height");
    const auto maxval = header_number(in, path, "maxval");
    if (width == 0 || height == 0 || maxval != 255) {
        throw FormatError(path.string() + ": unsupported PGM geometry or maxval");
    }
    Image img(width, height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw FormatError(path.string() + ": truncated pixel data");
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != width * height * 3) {
        throw ContractError("write_ppm: pixel buffer does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "P6\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace fgwk
