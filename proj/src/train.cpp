#include "fgwk/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgwk/errors.hpp"

namespace fgwk::train {

Tensor to_tensor(const Image& img) {
    std::vector<Real> values(img.pixels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = (static_cast<Real>(img.pixels[i]) - Real{128}) / Real{64};
    }
    return Tensor::from({1, img.height, img.width}, std::move(values));
}

Dataset make_dataset(const std::vector<synth::LabeledSample>& samples) {
    Dataset out;
    for (const auto& s : samples) {
        out.images.push_back(to_tensor(s.image));
        out.labels.push_back(s.label);
        out.ids.push_back(s.id);
    }
    return out;
}

ensemble::Prediction predict(const PluginModel& model, const Tensor& image) {
    NoGradGuard guard;
    const auto pass = model.forward(image);
    const auto logits = pass.logits.data();
    const double top = *std::max_element(logits.begin(), logits.end());
    ensemble::Prediction p;
    p.confidence.resize(logits.size());
    double total = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        p.confidence[c] = std::exp(static_cast<double>(logits[c]) - top);
        total += p.confidence[c];
    }
    for (auto& v : p.confidence) {
        v /= total;
    }
    p.label = static_cast<int>(std::max_element(p.confidence.begin(), p.confidence.end()) -
                               p.confidence.begin());
    return p;
}

Evaluation evaluate(const PluginModel& model, const Dataset& data) {
    Evaluation out;
    out.confusion = evalkit::ConfusionMatrix(model.config().num_classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto p = predict(model, data.images[i]);
        out.loss -= std::log(std::max(p.confidence[static_cast<std::size_t>(data.labels[i])], 1e-300));
        out.confusion.accumulate(data.labels[i], p.label);
        out.predictions.push_back(std::move(p));
    }
    if (data.size() > 0) {
        out.loss /= static_cast<double>(data.size());
        out.accuracy = static_cast<double>(out.confusion.trace()) / static_cast<double>(data.size());
    }
    return out;
}

ParameterState snapshot(const PluginModel& model) {
    ParameterState state;
    for (const auto& p : model.parameters()) {
        const auto values = p.tensor.data();
        state.emplace_back(values.begin(), values.end());
    }
    return state;
}

void restore(const PluginModel& model, const ParameterState& state) {
    const auto params = model.parameters();
    if (params.size() != state.size()) {
        throw DimensionError("restore: " + std::to_string(state.size()) + " tensors for " +
                             std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto tensor = params[i].tensor;
        auto values = tensor.data();
        if (values.size() != state[i].size()) {
            throw DimensionError("restore: size mismatch for " + params[i].name);
        }
        std::copy(state[i].begin(), state[i].end(), values.begin());
    }
}

TrainResult fit(const PluginModel& model, const Dataset& train, const Dataset& val,
                const TrainSettings& settings,
                const std::function<void(const EpochRecord&)>& on_epoch) {
    if (settings.batch_size == 0) {
        throw ConfigError("batch_size must be positive");
    }
    if (settings.epochs > 0 && (train.size() == 0 || val.size() == 0)) {
        throw ContractError("fit: empty training or validation set");
    }
    auto optimizer = optim::make_optimizer(settings.optimizer, model.parameters());

    TrainResult result;
    result.best_state = snapshot(model);
    std::vector<std::size_t> order(train.size());
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(settings.seed, epoch));
        rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
            const auto end = std::min(order.size(), start + settings.batch_size);
            images.clear();
            labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                images.push_back(train.images[order[i]]);
                labels.push_back(train.labels[order[i]]);
            }
            auto loss = batch_loss(model, images, labels);
            optimizer->zero_grads();
            loss.total.backward();
            optimizer->step();
            loss_sum += static_cast<double>(loss.total.item()) * static_cast<double>(end - start);
        }

        const auto eval = evaluate(model, val);
        EpochRecord record{epoch, loss_sum / static_cast<double>(train.size()), eval.loss,
                           eval.accuracy};
        result.history.push_back(record);
        if (result.best_epoch == 0 || eval.accuracy > result.best_val_accuracy) {
            result.best_epoch = epoch;
            result.best_val_accuracy = eval.accuracy;
            result.best_state = snapshot(model);
        }
        if (on_epoch) {
            on_epoch(record);
        }
    }
    restore(model, result.best_state);
    return result;
}

} // namespace fgwk::train
