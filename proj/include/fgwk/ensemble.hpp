#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fgwk/evalkit.hpp"
#include "fgwk/optim.hpp"

namespace fgwk::ensemble {

enum class VariantId { Base, Lion, LionFpn };

inline constexpr std::array<VariantId, 3> kAllVariants{VariantId::Base, VariantId::Lion,
                                                       VariantId::LionFpn};

// "base", "lion", "lionfpn"
std::string to_string(VariantId id);
// ConfigError on anything else.
VariantId parse_variant(const std::string& name);

// Base: SGD and the default FPN width; Lion: LION and the default width;
// LionFpn: LION and the variant width.
struct ModelVariant {
    VariantId id;
    optim::OptimizerKind optimizer;
    std::size_t fpn_size; // full-scale value, mapped to a desk width by the combiner
};

ModelVariant variant_spec(VariantId id);

// One member's output for one sample.
struct Prediction {
    int label = 0;
    std::vector<double> confidence; // softmax probabilities, one per class
};

struct VoteRecord {
    std::array<Prediction, 3> votes;
    int final_label = 0;
    // Set when all three voters disagree and the summed confidences decide.
    bool tie_broken = false;
};

// Majority of three: a label with two or more votes wins. A three-way split
// goes to the argmax of the summed confidence vectors, lowest class index
// on equal sums. ContractError unless exactly three voters with equal class
// counts and labels inside range.
VoteRecord vote(const std::vector<Prediction>& voters);

using Predictor = std::function<Prediction(std::size_t sample)>;

struct Sample {
    std::string id;
    int label = 0;
};

struct EnsembleReport {
    std::vector<VoteRecord> records;
    std::array<evalkit::ConfusionMatrix, 3> members{evalkit::ConfusionMatrix(1),
                                                     evalkit::ConfusionMatrix(1),
                                                     evalkit::ConfusionMatrix(1)};
    evalkit::ConfusionMatrix ensemble{1};
};

// Runs the three predictors (Base, Lion, LionFpn order) over every sample
// and votes.
EnsembleReport ensemble_eval(const std::vector<Sample>& samples,
                             const std::array<Predictor, 3>& predictors, std::size_t classes);

// Columns sample_id,pred_base,pred_lion,pred_lionfpn,final,tie_broken,true_label.
void write_vote_csv(std::ostream& out, const std::vector<Sample>& samples,
                    const std::vector<VoteRecord>& records);

} // namespace fgwk::ensemble
