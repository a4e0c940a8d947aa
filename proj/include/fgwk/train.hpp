#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fgwk/ensemble.hpp"
#include "fgwk/evalkit.hpp"
#include "fgwk/model.hpp"
#include "fgwk/optim.hpp"
#include "fgwk/synthdata.hpp"

namespace fgwk::train {

// [1 x H x W] tensor of (gray - 128) / 64.
Tensor to_tensor(const Image& img);

// Images and labels held as model inputs.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<int> labels;
    std::vector<std::string> ids;

    std::size_t size() const { return images.size(); }
};

Dataset make_dataset(const std::vector<synth::LabeledSample>& samples);

struct Evaluation {
    std::vector<ensemble::Prediction> predictions;
    evalkit::ConfusionMatrix confusion{1};
    double loss = 0.0; // mean cross-entropy of the final logits
    double accuracy = 0.0;
};

// Softmax prediction for one image, ties to the lower class.
ensemble::Prediction predict(const PluginModel& model, const Tensor& image);
Evaluation evaluate(const PluginModel& model, const Dataset& data);

struct TrainSettings {
    std::size_t batch_size = 16;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    optim::OptimizerConfig optimizer;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

using ParameterState = std::vector<std::vector<Real>>;

ParameterState snapshot(const PluginModel& model);
// DimensionError if the state does not match the model's parameters.
void restore(const PluginModel& model, const ParameterState& state);

struct TrainResult {
    std::vector<EpochRecord> history;
    // Epoch of the best validation accuracy (earliest on ties); 0 means the
    // initial weights, kept when no epoch runs.
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
    ParameterState best_state;
};

// Mini-batch training with a per-epoch shuffle drawn from the seed. The
// model is left holding its best-validation weights. `on_epoch` runs after
// every epoch.
TrainResult fit(const PluginModel& model, const Dataset& train, const Dataset& val,
                const TrainSettings& settings,
                const std::function<void(const EpochRecord&)>& on_epoch = {});

} // namespace fgwk::train
