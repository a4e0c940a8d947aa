#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fgwk/config.hpp"

namespace fgwk {

// Binary layout, all integers little-endian:
//   "FGWK" | u16 version | u32 n + n bytes config JSON
//   | u32 n + n bytes metadata JSON | u32 tensor count
//   | per tensor: u16 n + name | u8 rank | u32 dims[rank] | f32 values
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::string variant;
    std::size_t epoch = 0; // epoch the weights come from; 0 = initial
    std::uint64_t seed = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TensorRecord {
    std::string name;
    Shape shape;
    std::vector<float> values;
};

struct Checkpoint {
    std::uint16_t version = kCheckpointVersion;
    std::string config_json;
    CheckpointMeta meta;
    std::vector<TensorRecord> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const PluginModel& model,
                     const std::string& config_json, const CheckpointMeta& meta);

// IoError if unreadable; FormatError on bad magic, version or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies tensors into the model by name. FormatError naming the first
// missing, extra or misshaped tensor.
void load_parameters(const PluginModel& model, const Checkpoint& ckpt);

struct LoadedModel {
    RunConfig config;
    ensemble::VariantId variant;
    CheckpointMeta meta;
    PluginModel model;
};

// Rebuilds the model described by the checkpoint's config and variant.
LoadedModel load_model(const std::filesystem::path& path);

} // namespace fgwk
