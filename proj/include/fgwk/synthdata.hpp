#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fgwk/image.hpp"
#include "fgwk/rng.hpp"

// Synthetic fine-grained corpus: a shared "wrist" background (bands and
// low-frequency texture) whose class is carried only by a small patch
// pattern, plus augmentation, curation into splits and on-disk layout.
namespace fgwk::synth {

inline constexpr std::size_t kNumClasses = 4;

// Ranges every augmentation parameter is drawn from.
struct AugmentRanges {
    double max_rotation_deg = 15.0;
    double max_shift_frac = 0.10;
    double min_zoom = 0.9;
    double max_zoom = 1.1;
    double hflip_prob = 0.5;
    double min_brightness = 0.8;
    double max_brightness = 1.2;
};

struct AugmentParams {
    double rotation_deg = 0.0;
    double shift_x = 0.0; // fraction of the image width
    double shift_y = 0.0;
    double zoom = 1.0;
    bool hflip = false;
    double brightness = 1.0;

    bool is_identity() const;
};

AugmentParams sample_augment(const AugmentRanges& ranges, Rng& rng);

struct DatasetSpec {
    // Analogs of bone anomaly, fracture, metal and soft tissue.
    std::vector<std::string> classes{"boneanomaly", "fracture", "metal", "softtissue"};
    std::size_t image_size = 64;
    // Originals rendered per class; classes above `max_originals_per_class`
    // are downsampled before splitting.
    std::vector<std::size_t> originals_per_class{140, 200, 140, 140};
    std::size_t max_originals_per_class = 140;
    // Train + val images per class after augmentation.
    std::size_t train_per_class = 500;
    std::size_t test1_per_class = 120;
    // Original-only challenging split, small and imbalanced.
    std::vector<std::size_t> test2_per_class{17, 25, 15, 23};
    double val_fraction = 0.2;
    // Share of the non-test-2 originals reserved as test-1 sources.
    double test1_source_fraction = 0.2;
    std::size_t patch_size = 12;
    // Maximum distance of the patch center from the image center.
    double patch_radius = 20.0;
    AugmentRanges augment;
    std::uint64_t seed = 2024;

    // ConfigError on any violated invariant.
    void validate() const;
    std::size_t train_count() const;
    std::size_t val_count() const;
};

enum class Provenance { Original, Augmented };

struct LabeledSample {
    std::string id;
    std::string source_id; // id of the original it derives from
    std::string split;
    int label = 0;
    Image image;
    Rect patch;
    Provenance provenance = Provenance::Original;
    AugmentParams augment;
};

// Renders original `index` of class `label`; a pure function of
// (spec, label, index).
LabeledSample render_original(const DatasetSpec& spec, int label, std::size_t index);

// Warps the image (flip, zoom, rotation, shift about the image center),
// scales brightness, and maps the patch to the bounding box of its
// transformed corners clipped to the frame. Pixels from outside the
// source take the median gray level of the source background.
LabeledSample augment(const LabeledSample& sample, const AugmentParams& params);

// Maps a point through the augmentation's geometric part.
void augment_point(const AugmentParams& params, std::size_t size, double x, double y, double& out_x,
                   double& out_y);

struct Splits {
    std::vector<LabeledSample> train, val, test1, test2;

    std::vector<LabeledSample>& by_name(const std::string& split);
    const std::vector<LabeledSample>& by_name(const std::string& split) const;
};

inline const std::vector<std::string> kSplitNames{"train", "val", "test1", "test2"};

// Keeps `target` of the given class's samples (chosen by a seeded shuffle,
// original order preserved) and every sample of other classes.
std::vector<LabeledSample> downsample(const std::vector<LabeledSample>& samples, int label,
                                      std::size_t target, std::uint64_t seed);

// Per class: downsample originals, shuffle them, reserve test-2 originals,
// then test-1 sources, then split the rest by source into val and train;
// test-1, train and val are filled up to their targets with augmented
// copies of their own sources. ConfigError when a class has too few
// originals for every split to receive at least one source.
Splits curate(const std::vector<LabeledSample>& originals, const DatasetSpec& spec);

// Source counts curate() assigns to one class with `originals` images.
struct SourceCounts {
    std::size_t test2 = 0, test1 = 0, val = 0, train = 0;
};
SourceCounts source_counts(const DatasetSpec& spec, int label, std::size_t originals);

// Renders all originals and curates them.
Splits build_corpus(const DatasetSpec& spec);

// Fills the patch, dilated by `dilation` pixels, with the median gray level
// of the rest of the image.
Image mask_patch(const Image& img, const Rect& patch, int dilation = 1);

// corpus/<split>/<class>/<id>.pgm plus manifest.tsv, whose header embeds
// the seed and `config_snapshot`. Returns the manifest path.
std::filesystem::path write_corpus(const Splits& splits, const DatasetSpec& spec,
                                   const std::filesystem::path& dir,
                                   const std::string& config_snapshot);

struct CorpusManifest {
    std::uint64_t seed = 0;
    std::string config_snapshot;
    std::vector<std::string> classes;
    std::vector<LabeledSample> samples; // images not loaded
};

// FormatError on a malformed manifest, IoError when it cannot be read.
CorpusManifest read_manifest(const std::filesystem::path& dir);

// Samples of one split with their images. FormatError for an unknown split.
std::vector<LabeledSample> load_split(const std::filesystem::path& dir, const std::string& split);

// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

} // namespace fgwk::synth
