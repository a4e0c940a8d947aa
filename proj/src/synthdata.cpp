#include "fgwk/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "fgwk/errors.hpp"

namespace fgwk::synth {

namespace {

constexpr std::uint64_t kOriginalStream = 1000;
constexpr std::uint64_t kShuffleStream = 5000;
constexpr std::uint64_t kDownsampleStream = 6000;
constexpr std::uint64_t kAugmentStream = 7000;

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw FormatError("manifest: bad " + what + " '" + s + "'");
    }
    return v;
}

long long parse_int(const std::string& s, const std::string& what) {
    long long v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw FormatError("manifest: bad " + what + " '" + s + "'");
    }
    return v;
}

std::string padded(std::size_t v, int width) {
    std::string s = std::to_string(v);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) {
            return fields;
        }
        start = tab + 1;
    }
}

// Additive patterns inside the patch, one per class.
void draw_patch(std::vector<double>& canvas, std::size_t size, const Rect& r, int label, double scale,
                Rng& rng) {
    const double cx = r.center_x(), cy = r.center_y();
    const double half = r.w / 2.0;
    switch (label) {
    case 0: { // dense speckle
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                if (rng.bernoulli(0.35)) {
                    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
                    canvas[static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)] +=
                        sign * rng.uniform(45.0, 75.0);
                }
            }
        }
        break;
    }
    case 1: { // thin dark discontinuity line
        const double phi = rng.uniform(0.0, std::numbers::pi);
        const double offset = rng.uniform(-1.0, 1.0) * scale;
        const double depth = rng.uniform(60.0, 75.0);
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                const double u = x + 0.5 - cx, v = y + 0.5 - cy;
                const double d = std::abs(-std::sin(phi) * u + std::cos(phi) * v - offset) / scale;
                canvas[static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)] -=
                    depth * std::clamp(1.5 - d, 0.0, 1.0);
            }
        }
        break;
    }
    case 2: { // bright blob
        const double radius = rng.uniform(3.0, 4.5) * scale;
        const double bx = cx + rng.uniform(-1.5, 1.5) * scale;
        const double by = cy + rng.uniform(-1.5, 1.5) * scale;
        const double height = rng.uniform(90.0, 120.0);
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                const double d = std::hypot(x + 0.5 - bx, y + 0.5 - by);
                canvas[static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)] +=
                    height * std::clamp(radius + 0.5 - d, 0.0, 1.0);
            }
        }
        break;
    }
    default: { // soft gradient
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amplitude = rng.uniform(35.0, 50.0);
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                const double proj = (x + 0.5 - cx) * std::cos(phi) + (y + 0.5 - cy) * std::sin(phi);
                canvas[static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)] +=
                    amplitude * std::clamp(proj / half, -1.0, 1.0);
            }
        }
        break;
    }
    }
}

LabeledSample expand_copy(const LabeledSample& src, const std::string& split) {
    LabeledSample s = src;
    s.split = split;
    return s;
}

// All sources first, then augmented copies cycling through them, up to
// `target` samples.
void fill_split(std::vector<LabeledSample>& into, const std::vector<LabeledSample>& sources,
                std::size_t target, const std::string& split, const DatasetSpec& spec,
                std::uint64_t stream) {
    const std::size_t n = sources.size();
    for (std::size_t i = 0; i < std::min(n, target); ++i) {
        into.push_back(expand_copy(sources[i], split));
    }
    for (std::size_t k = 0; k + n < target; ++k) {
        const auto& src = sources[k % n];
        Rng rng(derive_seed(derive_seed(spec.seed, stream), k));
        auto aug = augment(src, sample_augment(spec.augment, rng));
        aug.id = src.id + "-a" + padded(k, 4);
        aug.split = split;
        into.push_back(std::move(aug));
    }
}

const char* provenance_name(Provenance p) { return p == Provenance::Original ? "original" : "augmented"; }

} // namespace

bool AugmentParams::is_identity() const {
    return rotation_deg == 0.0 && shift_x == 0.0 && shift_y == 0.0 && zoom == 1.0 && !hflip &&
           brightness == 1.0;
}

AugmentParams sample_augment(const AugmentRanges& ranges, Rng& rng) {
    AugmentParams p;
    p.rotation_deg = rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg);
    p.shift_x = rng.uniform(-ranges.max_shift_frac, ranges.max_shift_frac);
    p.shift_y = rng.uniform(-ranges.max_shift_frac, ranges.max_shift_frac);
    p.zoom = rng.uniform(ranges.min_zoom, ranges.max_zoom);
    p.hflip = rng.bernoulli(ranges.hflip_prob);
    p.brightness = rng.uniform(ranges.min_brightness, ranges.max_brightness);
    return p;
}

void DatasetSpec::validate() const {
    const std::size_t c = classes.size();
    if (c != kNumClasses) {
        throw ConfigError("classes: need exactly " + std::to_string(kNumClasses) +
                          " class names (one per patch pattern), got " + std::to_string(c));
    }
    std::set<std::string> seen;
    for (const auto& name : classes) {
        const bool safe = !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
        });
        if (!safe || !seen.insert(name).second) {
            throw ConfigError("classes: names must be unique, non-empty and [A-Za-z0-9_-], got '" +
                              name + "'");
        }
    }
    if (originals_per_class.size() != c || test2_per_class.size() != c) {
        throw ConfigError("originals_per_class and test2_per_class need one entry per class");
    }
    if (image_size < 16 || image_size % 16 != 0) {
        throw ConfigError("image_size must be a positive multiple of 16, got " +
                          std::to_string(image_size));
    }
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("val_fraction must lie strictly between 0 and 1");
    }
    if (!(test1_source_fraction > 0.0 && test1_source_fraction < 1.0)) {
        throw ConfigError("test1_source_fraction must lie strictly between 0 and 1");
    }
    if (patch_size == 0 ||
        static_cast<double>(patch_size * patch_size) > 0.04 * static_cast<double>(image_size * image_size)) {
        throw ConfigError("patch area must be positive and at most 4% of the image");
    }
    if (patch_radius < 0.0 || patch_radius + patch_size / 2.0 > image_size / 2.0) {
        throw ConfigError("patch_radius keeps the patch outside the image");
    }
    for (std::size_t k = 0; k < c; ++k) {
        if (test2_per_class[k] == 0 || test2_per_class[k] > test1_per_class) {
            throw ConfigError("test2 count of class " + classes[k] +
                              " must be positive and at most test1_per_class");
        }
    }
    if (train_count() == 0 || val_count() == 0) {
        throw ConfigError("train_per_class too small for the validation fraction");
    }
    const auto& a = augment;
    if (a.max_rotation_deg < 0 || a.max_shift_frac < 0 || a.min_zoom <= 0 || a.min_zoom > a.max_zoom ||
        a.hflip_prob < 0 || a.hflip_prob > 1 || a.min_brightness <= 0 ||
        a.min_brightness > a.max_brightness) {
        throw ConfigError("invalid augmentation ranges");
    }
}

std::size_t DatasetSpec::train_count() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(train_per_class) * (1.0 - val_fraction)));
}

std::size_t DatasetSpec::val_count() const { return train_per_class - train_count(); }

LabeledSample render_original(const DatasetSpec& spec, int label, std::size_t index) {
    const std::size_t size = spec.image_size;
    const double s = static_cast<double>(size) / 64.0;
    const double extent = static_cast<double>(size);
    Rng rng(derive_seed(derive_seed(spec.seed, kOriginalStream + static_cast<std::uint64_t>(label)), index));

    std::vector<double> canvas(size * size, rng.uniform(80.0, 100.0));

    struct Wave {
        double amp, kx, ky, phase;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 4; ++i) {
        const double freq = 2.0 * std::numbers::pi / (extent * rng.uniform(0.3, 0.8));
        const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
        waves.push_back({rng.uniform(3.0, 7.0), freq * std::cos(dir), freq * std::sin(dir),
                         rng.uniform(0.0, 2.0 * std::numbers::pi)});
    }

    struct Band {
        double x0, angle, half_width, intensity;
    };
    std::vector<Band> bands;
    for (int side : {-1, 1}) {
        bands.push_back({extent / 2 + side * rng.uniform(8.0, 16.0) * s, rng.uniform(-0.35, 0.35),
                         rng.uniform(5.0, 8.0) * s, rng.uniform(50.0, 80.0)});
    }

    struct Ellipse {
        double cx, cy, rx, ry, intensity;
    };
    std::vector<Ellipse> carpals;
    for (int i = 0; i < 3; ++i) {
        carpals.push_back({rng.uniform(0.3, 0.7) * extent, rng.uniform(0.1, 0.3) * extent,
                           rng.uniform(4.0, 7.0) * s, rng.uniform(4.0, 7.0) * s, rng.uniform(30.0, 60.0)});
    }

    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double v = 0.0;
            for (const auto& w : waves) {
                v += w.amp * std::sin(w.kx * px + w.ky * py + w.phase);
            }
            for (const auto& b : bands) {
                // Distance to a line through (x0, size/2) tilted by `angle` from vertical.
                const double d = std::abs((px - b.x0) * std::cos(b.angle) -
                                          (py - extent / 2) * std::sin(b.angle));
                const double t = d / b.half_width;
                if (t < 1.0) {
                    v += b.intensity * std::sqrt(1.0 - t * t);
                }
            }
            for (const auto& e : carpals) {
                const double q = std::pow((px - e.cx) / e.rx, 2) + std::pow((py - e.cy) / e.ry, 2);
                if (q < 1.0) {
                    v += e.intensity * std::sqrt(1.0 - q);
                }
            }
            canvas[y * size + x] += v + 4.0 * rng.normal();
        }
    }

    double pcx = 0.0, pcy = 0.0;
    do {
        pcx = rng.uniform(-spec.patch_radius, spec.patch_radius) * s;
        pcy = rng.uniform(-spec.patch_radius, spec.patch_radius) * s;
    } while (std::hypot(pcx, pcy) > spec.patch_radius * s);
    const int p = static_cast<int>(spec.patch_size);
    Rect patch{static_cast<int>(std::lround(extent / 2 + pcx - p / 2.0)),
               static_cast<int>(std::lround(extent / 2 + pcy - p / 2.0)), p, p};
    patch.x = std::clamp(patch.x, 0, static_cast<int>(size) - p);
    patch.y = std::clamp(patch.y, 0, static_cast<int>(size) - p);
    draw_patch(canvas, size, patch, label, s, rng);

    LabeledSample out;
    out.id = spec.classes[static_cast<std::size_t>(label)] + "-" + padded(index, 4);
    out.source_id = out.id;
    out.label = label;
    out.patch = patch;
    out.image = Image(size, size);
    for (std::size_t i = 0; i < canvas.size(); ++i) {
        out.image.pixels[i] = clamp_gray(canvas[i]);
    }
    return out;
}

void augment_point(const AugmentParams& params, std::size_t size, double x, double y, double& out_x,
                   double& out_y) {
    const double c = static_cast<double>(size) / 2.0;
    if (params.hflip) {
        x = static_cast<double>(size) - x;
    }
    const double theta = params.rotation_deg * std::numbers::pi / 180.0;
    const double dx = (x - c) * params.zoom, dy = (y - c) * params.zoom;
    out_x = c + std::cos(theta) * dx - std::sin(theta) * dy + params.shift_x * static_cast<double>(size);
    out_y = c + std::sin(theta) * dx + std::cos(theta) * dy + params.shift_y * static_cast<double>(size);
}

LabeledSample augment(const LabeledSample& sample, const AugmentParams& params) {
    const Image& src = sample.image;
    const std::size_t size = src.width;
    if (src.height != size) {
        throw DimensionError("augment expects square images");
    }
    const double c = static_cast<double>(size) / 2.0;
    const double theta = params.rotation_deg * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double fill = median_outside(src, sample.patch);

    LabeledSample out = sample;
    out.provenance = Provenance::Augmented;
    out.augment = params;
    out.image = Image(size, size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double qx = x + 0.5 - c - params.shift_x * static_cast<double>(size);
            const double qy = y + 0.5 - c - params.shift_y * static_cast<double>(size);
            double sx = c + (cos_t * qx + sin_t * qy) / params.zoom;
            const double sy = c + (-sin_t * qx + cos_t * qy) / params.zoom;
            if (params.hflip) {
                sx = static_cast<double>(size) - sx;
            }
            out.image.at(x, y) = clamp_gray(sample_bilinear(src, sx, sy, fill) * params.brightness);
        }
    }

    const Rect& r = sample.patch;
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (double px : {static_cast<double>(r.x), static_cast<double>(r.x + r.w)}) {
        for (double py : {static_cast<double>(r.y), static_cast<double>(r.y + r.h)}) {
            double tx = 0, ty = 0;
            augment_point(params, size, px, py, tx, ty);
            min_x = std::min(min_x, tx);
            min_y = std::min(min_y, ty);
            max_x = std::max(max_x, tx);
            max_y = std::max(max_y, ty);
        }
    }
    const int x0 = static_cast<int>(std::floor(min_x + 1e-9));
    const int y0 = static_cast<int>(std::floor(min_y + 1e-9));
    const int x1 = static_cast<int>(std::ceil(max_x - 1e-9));
    const int y1 = static_cast<int>(std::ceil(max_y - 1e-9));
    out.patch = Rect{x0, y0, x1 - x0, y1 - y0}.clipped(static_cast<int>(size), static_cast<int>(size));
    return out;
}

std::vector<LabeledSample>& Splits::by_name(const std::string& split) {
    return const_cast<std::vector<LabeledSample>&>(std::as_const(*this).by_name(split));
}

const std::vector<LabeledSample>& Splits::by_name(const std::string& split) const {
    if (split == "train") {
        return train;
    }
    if (split == "val") {
        return val;
    }
    if (split == "test1") {
        return test1;
    }
    if (split == "test2") {
        return test2;
    }
    throw FormatError("unknown split '" + split + "'");
}

std::vector<LabeledSample> downsample(const std::vector<LabeledSample>& samples, int label,
                                      std::size_t target, std::uint64_t seed) {
    std::vector<std::size_t> of_class;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label == label) {
            of_class.push_back(i);
        }
    }
    if (of_class.size() <= target) {
        return samples;
    }
    Rng rng(derive_seed(seed, kDownsampleStream + static_cast<std::uint64_t>(label)));
    rng.shuffle(of_class.begin(), of_class.end());
    std::vector<bool> keep(samples.size(), true);
    for (std::size_t i = target; i < of_class.size(); ++i) {
        keep[of_class[i]] = false;
    }
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) {
            out.push_back(samples[i]);
        }
    }
    return out;
}

SourceCounts source_counts(const DatasetSpec& spec, int label, std::size_t originals) {
    const auto k = static_cast<std::size_t>(label);
    SourceCounts c;
    c.test2 = spec.test2_per_class.at(k);
    const std::string name = spec.classes.at(k);
    if (originals < c.test2 + 3) {
        throw ConfigError("class " + name + " has " + std::to_string(originals) +
                          " originals; needs at least " + std::to_string(c.test2 + 3));
    }
    const std::size_t rest = originals - c.test2;
    c.test1 = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(rest) * spec.test1_source_fraction)));
    const std::size_t trainval = rest - c.test1;
    c.val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(trainval) * spec.val_fraction)));
    if (c.val >= trainval) {
        throw ConfigError("class " + name + " has too few originals for separate train and val sources");
    }
    c.train = trainval - c.val;
    return c;
}

Splits curate(const std::vector<LabeledSample>& originals, const DatasetSpec& spec) {
    spec.validate();
    for (const auto& s : originals) {
        if (s.provenance != Provenance::Original) {
            throw ContractError("curate expects originals only, got " + s.id);
        }
    }
    Splits splits;
    const auto num_classes = static_cast<int>(spec.classes.size());
    auto pool = originals;
    for (int label = 0; label < num_classes; ++label) {
        pool = downsample(pool, label, spec.max_originals_per_class, spec.seed);
    }
    for (int label = 0; label < num_classes; ++label) {
        std::vector<LabeledSample> sources;
        for (const auto& s : pool) {
            if (s.label == label) {
                sources.push_back(s);
            }
        }
        const auto counts = source_counts(spec, label, sources.size());
        Rng rng(derive_seed(spec.seed, kShuffleStream + static_cast<std::uint64_t>(label)));
        rng.shuffle(sources.begin(), sources.end());

        auto take = [&, offset = std::size_t{0}](std::size_t n) mutable {
            std::vector<LabeledSample> part(sources.begin() + static_cast<std::ptrdiff_t>(offset),
                                            sources.begin() + static_cast<std::ptrdiff_t>(offset + n));
            offset += n;
            return part;
        };
        auto test2 = take(counts.test2);
        auto test1 = take(counts.test1);
        auto val = take(counts.val);
        auto train = take(counts.train);
        const auto stream = [&](std::uint64_t split) {
            return kAugmentStream + 16 * static_cast<std::uint64_t>(label) + split;
        };
        for (const auto& s : test2) {
            splits.test2.push_back(expand_copy(s, "test2"));
        }
        fill_split(splits.test1, test1, spec.test1_per_class, "test1", spec, stream(1));
        fill_split(splits.val, val, spec.val_count(), "val", spec, stream(2));
        fill_split(splits.train, train, spec.train_count(), "train", spec, stream(3));
    }
    return splits;
}

Splits build_corpus(const DatasetSpec& spec) {
    spec.validate();
    std::vector<LabeledSample> originals;
    for (std::size_t label = 0; label < spec.classes.size(); ++label) {
        for (std::size_t i = 0; i < spec.originals_per_class[label]; ++i) {
            originals.push_back(render_original(spec, static_cast<int>(label), i));
        }
    }
    return curate(originals, spec);
}

Image mask_patch(const Image& img, const Rect& patch, int dilation) {
    const Rect region = patch.dilated(dilation);
    const auto fill = median_outside(img, region);
    Image out = img;
    const Rect clip = region.clipped(static_cast<int>(img.width), static_cast<int>(img.height));
    for (int y = clip.y; y < clip.y + clip.h; ++y) {
        for (int x = clip.x; x < clip.x + clip.w; ++x) {
            out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = fill;
        }
    }
    return out;
}

std::filesystem::path write_corpus(const Splits& splits, const DatasetSpec& spec,
                                   const std::filesystem::path& dir,
                                   const std::string& config_snapshot) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    std::ostringstream manifest;
    manifest << "# fgwk synthetic corpus\n";
    manifest << "# seed\t" << spec.seed << '\n';
    manifest << "# classes\t";
    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        manifest << (k ? "," : "") << spec.classes[k];
    }
    manifest << '\n';
    manifest << "# config\t" << config_snapshot << '\n';
    manifest << "sample_id\tsplit\tclass\tlabel\tpatch_x\tpatch_y\tpatch_w\tpatch_h\tprovenance\t"
                "source_id\trotation_deg\tshift_x\tshift_y\tzoom\thflip\tbrightness\n";
    for (const auto& split : kSplitNames) {
        for (const auto& s : splits.by_name(split)) {
            const auto& cls = spec.classes.at(static_cast<std::size_t>(s.label));
            const auto folder = dir / split / cls;
            fs::create_directories(folder, ec);
            if (ec) {
                throw IoError("cannot create " + folder.string() + ": " + ec.message());
            }
            write_pgm(folder / (s.id + ".pgm"), s.image);
            const auto& a = s.augment;
            manifest << s.id << '\t' << split << '\t' << cls << '\t' << s.label << '\t' << s.patch.x
                     << '\t' << s.patch.y << '\t' << s.patch.w << '\t' << s.patch.h << '\t'
                     << provenance_name(s.provenance) << '\t' << s.source_id << '\t'
                     << format_double(a.rotation_deg) << '\t' << format_double(a.shift_x) << '\t'
                     << format_double(a.shift_y) << '\t' << format_double(a.zoom) << '\t'
                     << (a.hflip ? 1 : 0) << '\t' << format_double(a.brightness) << '\n';
        }
    }
    const auto path = dir / "manifest.tsv";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << manifest.str();
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
    return path;
}

CorpusManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.tsv";
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    CorpusManifest m;
    bool header_seen = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) {
            continue;
        }
        if (line.starts_with("# ")) {
            const auto fields = split_tabs(line.substr(2));
            if (fields.size() < 2) {
                continue;
            }
            if (fields[0] == "seed") {
                m.seed = static_cast<std::uint64_t>(parse_int(fields[1], "seed"));
            } else if (fields[0] == "classes") {
                std::stringstream names(fields[1]);
                for (std::string name; std::getline(names, name, ',');) {
                    m.classes.push_back(name);
                }
            } else if (fields[0] == "config") {
                m.config_snapshot = line.substr(2 + fields[0].size() + 1);
            }
            continue;
        }
        const auto f = split_tabs(line);
        if (!header_seen) {
            if (f.empty() || f[0] != "sample_id") {
                throw FormatError(path.string() + ": missing column header");
            }
            header_seen = true;
            continue;
        }
        if (f.size() != 16) {
            throw FormatError(path.string() + ": expected 16 columns, got " + std::to_string(f.size()));
        }
        LabeledSample s;
        s.id = f[0];
        s.split = f[1];
        s.label = static_cast<int>(parse_int(f[3], "label"));
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= m.classes.size() ||
            m.classes[static_cast<std::size_t>(s.label)] != f[2]) {
            throw FormatError(path.string() + ": label/class mismatch for " + s.id);
        }
        s.patch = {static_cast<int>(parse_int(f[4], "patch_x")), static_cast<int>(parse_int(f[5], "patch_y")),
                   static_cast<int>(parse_int(f[6], "patch_w")), static_cast<int>(parse_int(f[7], "patch_h"))};
        if (f[8] == "original") {
            s.provenance = Provenance::Original;
        } else if (f[8] == "augmented") {
            s.provenance = Provenance::Augmented;
        } else {
            throw FormatError(path.string() + ": bad provenance '" + f[8] + "'");
        }
        s.source_id = f[9];
        s.augment.rotation_deg = parse_double(f[10], "rotation_deg");
        s.augment.shift_x = parse_double(f[11], "shift_x");
        s.augment.shift_y = parse_double(f[12], "shift_y");
        s.augment.zoom = parse_double(f[13], "zoom");
        s.augment.hflip = parse_int(f[14], "hflip") != 0;
        s.augment.brightness = parse_double(f[15], "brightness");
        m.samples.push_back(std::move(s));
    }
    if (!header_seen || m.classes.empty()) {
        throw FormatError(path.string() + ": not a corpus manifest");
    }
    return m;
}

std::vector<LabeledSample> load_split(const std::filesystem::path& dir, const std::string& split) {
    if (std::find(kSplitNames.begin(), kSplitNames.end(), split) == kSplitNames.end()) {
        throw FormatError("unknown split '" + split + "'");
    }
    auto manifest = read_manifest(dir);
    std::vector<LabeledSample> out;
    for (auto& s : manifest.samples) {
        if (s.split != split) {
            continue;
        }
        s.image = read_pgm(dir / split / manifest.classes[static_cast<std::size_t>(s.label)] / (s.id + ".pgm"));
        out.push_back(std::move(s));
    }
    return out;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

} // namespace fgwk::synth
