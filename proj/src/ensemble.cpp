#include "fgwk/ensemble.hpp"

#include <ostream>

#include "fgwk/errors.hpp"

namespace fgwk::ensemble {

std::string to_string(VariantId id) {
    switch (id) {
    case VariantId::Base:
        return "base";
    case VariantId::Lion:
        return "lion";
    case VariantId::LionFpn:
        return "lionfpn";
    }
    return "unknown";
}

VariantId parse_variant(const std::string& name) {
    for (auto id : kAllVariants) {
        if (to_string(id) == name) {
            return id;
        }
    }
    throw ConfigError("unknown variant '" + name + "' (expected base, lion or lionfpn)");
}

ModelVariant variant_spec(VariantId id) {
    switch (id) {
    case VariantId::Base:
        return {id, optim::OptimizerKind::Sgd, 1536};
    case VariantId::Lion:
        return {id, optim::OptimizerKind::Lion, 1536};
    case VariantId::LionFpn:
        return {id, optim::OptimizerKind::Lion, 1024};
    }
    throw ContractError("invalid variant id");
}

VoteRecord vote(const std::vector<Prediction>& voters) {
    if (voters.size() != 3) {
        throw ContractError("vote needs exactly 3 voters, got " + std::to_string(voters.size()));
    }
    const std::size_t classes = voters[0].confidence.size();
    for (const auto& v : voters) {
        if (v.confidence.size() != classes || classes == 0) {
            throw ContractError("voters disagree on the number of classes");
        }
        if (v.label < 0 || static_cast<std::size_t>(v.label) >= classes) {
            throw ContractError("vote label " + std::to_string(v.label) + " outside [0, " +
                                std::to_string(classes) + ")");
        }
    }
    VoteRecord record;
    std::copy(voters.begin(), voters.end(), record.votes.begin());
    const int a = voters[0].label, b = voters[1].label, c = voters[2].label;
    if (a == b || a == c) {
        record.final_label = a;
    } else if (b == c) {
        record.final_label = b;
    } else {
        std::vector<double> summed(classes, 0.0);
        for (const auto& v : voters) {
            for (std::size_t k = 0; k < classes; ++k) {
                summed[k] += v.confidence[k];
            }
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < classes; ++k) {
            if (summed[k] > summed[best]) {
                best = k;
            }
        }
        record.final_label = static_cast<int>(best);
        record.tie_broken = true;
    }
    return record;
}

EnsembleReport ensemble_eval(const std::vector<Sample>& samples,
                             const std::array<Predictor, 3>& predictors, std::size_t classes) {
    EnsembleReport report;
    for (auto& m : report.members) {
        m = evalkit::ConfusionMatrix(classes);
    }
    report.ensemble = evalkit::ConfusionMatrix(classes);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::vector<Prediction> voters;
        for (std::size_t m = 0; m < 3; ++m) {
            voters.push_back(predictors[m](i));
            report.members[m].accumulate(samples[i].label, voters.back().label);
        }
        auto record = vote(voters);
        report.ensemble.accumulate(samples[i].label, record.final_label);
        report.records.push_back(std::move(record));
    }
    return report;
}

void write_vote_csv(std::ostream& out, const std::vector<Sample>& samples,
                    const std::vector<VoteRecord>& records) {
    if (samples.size() != records.size()) {
        throw ContractError("write_vote_csv: " + std::to_string(samples.size()) + " samples for " +
                            std::to_string(records.size()) + " records");
    }
    out << "sample_id,pred_base,pred_lion,pred_lionfpn,final,tie_broken,true_label\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& r = records[i];
        out << samples[i].id << ',' << r.votes[0].label << ',' << r.votes[1].label << ','
            << r.votes[2].label << ',' << r.final_label << ',' << (r.tie_broken ? 1 : 0) << ','
            << samples[i].label << '\n';
    }
}

} // namespace fgwk::ensemble
