#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fgwk/ensemble.hpp"
#include "fgwk/model.hpp"
#include "fgwk/synthdata.hpp"
#include "fgwk/train.hpp"

namespace fgwk {

// Everything a run needs, read from one JSON file. Keys are documented in
// the README; unknown or mistyped keys are ConfigErrors naming the key.
struct RunConfig {
    std::uint64_t seed = 2024;
    std::filesystem::path corpus_dir = "corpus";
    synth::DatasetSpec data;

    std::size_t base_channels = 16;
    selector::SelectionSchedule selections;
    std::size_t fpn_size = 1536;         // base and lion variants
    std::size_t variant_fpn_size = 1024; // lionfpn variant

    optim::SgdConfig sgd{0.01, 0.9, 0.0, 1.0};
    optim::LionConfig lion{5e-4, 0.9, 0.99, 0.0};

    std::size_t batch_size = 16;
    std::size_t epochs = 30;

    // ConfigError naming the offending key.
    void validate() const;

    ModelConfig model_config(ensemble::VariantId variant) const;
    train::TrainSettings train_settings(ensemble::VariantId variant) const;
    std::uint64_t init_seed(ensemble::VariantId variant) const;

    // Canonical JSON text of every field; parse(to_json()) == *this.
    std::string to_json() const;
    static RunConfig parse(const std::string& json_text);
};

// Reads `path`, then FGWK_SEED from the environment, then each "key=value"
// override (dotted key path, JSON value or bare string), and validates.
// IoError if the file cannot be read, FormatError on malformed JSON.
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {},
                      std::optional<std::uint64_t> seed_override = std::nullopt);

} // namespace fgwk
