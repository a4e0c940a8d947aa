#include "fgwk/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fgwk/errors.hpp"

namespace fgwk::app {

namespace {

std::string provenance_header(const std::string& title, std::uint64_t seed,
                              const std::string& config_json) {
    std::ostringstream out;
    out << "# " << title << '\n' << "# seed\t" << seed << '\n' << "# config\t" << config_json << '\n';
    return out.str();
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

void check_split(const std::string& split) {
    if (std::find(synth::kSplitNames.begin(), synth::kSplitNames.end(), split) ==
        synth::kSplitNames.end()) {
        throw ConfigError("unknown split '" + split + "' (train, val, test1, test2)");
    }
}

void check_same(const std::string& field, const std::string& a, const std::string& b,
                const std::string& context) {
    if (a != b) {
        throw FormatError(context + ": incompatible " + field + " (" + a + " vs " + b + ")");
    }
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out += (i ? "," : "") + parts[i];
    }
    return out;
}

// Corpus image side length, read from the first image of the manifest.
std::size_t corpus_image_size(const fs::path& data_dir, const synth::CorpusManifest& manifest) {
    if (manifest.samples.empty()) {
        throw FormatError(data_dir.string() + ": corpus manifest lists no samples");
    }
    const auto& s = manifest.samples.front();
    return read_pgm(data_dir / s.split / manifest.classes.at(static_cast<std::size_t>(s.label)) /
                    (s.id + ".pgm"))
        .width;
}

} // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw IoError("failed writing " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

GenerateResult cmd_generate(const RunConfig& cfg, std::ostream& log) {
    for (const auto& split : synth::kSplitNames) {
        std::error_code ec;
        fs::remove_all(cfg.corpus_dir / split, ec);
    }
    const auto splits = synth::build_corpus(cfg.data);
    // The corpus does not depend on where it is written.
    auto snapshot = cfg;
    snapshot.corpus_dir = ".";
    GenerateResult result;
    result.manifest = synth::write_corpus(splits, cfg.data, cfg.corpus_dir, snapshot.to_json());
    result.manifest_hash = synth::file_hash(result.manifest);
    for (std::size_t i = 0; i < synth::kSplitNames.size(); ++i) {
        result.split_sizes[i] = splits.by_name(synth::kSplitNames[i]).size();
    }
    log << "corpus " << cfg.corpus_dir.string() << ": train " << result.split_sizes[0] << ", val "
        << result.split_sizes[1] << ", test1 " << result.split_sizes[2] << ", test2 "
        << result.split_sizes[3] << "; manifest hash " << std::hex << std::setw(16)
        << std::setfill('0') << result.manifest_hash << std::dec << std::setfill(' ') << '\n';
    return result;
}

std::vector<synth::LabeledSample> load_samples(const fs::path& data_dir, const std::string& split,
                                               bool mask_patch) {
    check_split(split);
    auto samples = synth::load_split(data_dir, split);
    if (mask_patch) {
        for (auto& s : samples) {
            s.image = synth::mask_patch(s.image, s.patch);
        }
    }
    return samples;
}

TrainOutput cmd_train(const RunConfig& cfg, ensemble::VariantId variant, const fs::path& out_dir,
                      std::ostream& log) {
    const auto manifest = synth::read_manifest(cfg.corpus_dir);
    if (manifest.classes != cfg.data.classes) {
        throw ConfigError("corpus " + cfg.corpus_dir.string() + " has classes " +
                          join(manifest.classes) + " but the config lists " +
                          join(cfg.data.classes));
    }
    if (const auto size = corpus_image_size(cfg.corpus_dir, manifest); size != cfg.data.image_size) {
        throw ConfigError("corpus " + cfg.corpus_dir.string() + " has " + std::to_string(size) +
                          " px images but data.image_size is " + std::to_string(cfg.data.image_size));
    }
    const auto train_set = train::make_dataset(synth::load_split(cfg.corpus_dir, "train"));
    const auto val_set = train::make_dataset(synth::load_split(cfg.corpus_dir, "val"));

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    const auto name = ensemble::to_string(variant);
    TrainOutput out;
    out.checkpoint = out_dir / (name + ".ckpt");
    out.log_csv = out_dir / (name + "_log.csv");

    std::ofstream csv(out.log_csv);
    if (!csv) {
        throw IoError("cannot write " + out.log_csv.string());
    }
    csv << provenance_header("fgwk training log, variant " + name, cfg.seed, cfg.to_json());
    csv << "epoch,train_loss,val_loss,val_accuracy\n" << std::flush;

    PluginModel model(cfg.model_config(variant), cfg.init_seed(variant));
    log << name << ": " << train_set.size() << " train / " << val_set.size() << " val images, "
        << cfg.epochs << " epochs\n";
    out.result = train::fit(model, train_set, val_set, cfg.train_settings(variant),
                            [&](const train::EpochRecord& r) {
                                csv << r.epoch << ',' << format_double(r.train_loss) << ','
                                    << format_double(r.val_loss) << ','
                                    << format_double(r.val_accuracy) << '\n'
                                    << std::flush;
                                log << name << " epoch " << r.epoch << ": train loss "
                                    << std::fixed << std::setprecision(4) << r.train_loss
                                    << ", val loss " << r.val_loss << ", val acc "
                                    << r.val_accuracy << std::defaultfloat << '\n'
                                    << std::flush;
                            });
    if (!csv) {
        throw IoError("failed writing " + out.log_csv.string());
    }

    CheckpointMeta meta;
    meta.variant = name;
    meta.epoch = out.result.best_epoch;
    meta.seed = cfg.seed;
    if (meta.epoch > 0) {
        const auto& best = out.result.history[meta.epoch - 1];
        meta.train_loss = best.train_loss;
        meta.val_loss = best.val_loss;
        meta.val_accuracy = best.val_accuracy;
    }
    auto tmp = out.checkpoint;
    tmp += ".tmp";
    save_checkpoint(tmp, model, cfg.to_json(), meta);
    fs::rename(tmp, out.checkpoint);
    log << name << ": kept epoch " << meta.epoch << " (val acc " << meta.val_accuracy << ") -> "
        << out.checkpoint.string() << '\n';
    return out;
}

void check_corpus_compatible(const LoadedModel& model, const fs::path& data_dir) {
    const auto manifest = synth::read_manifest(data_dir);
    const auto context = "checkpoint vs corpus " + data_dir.string();
    check_same("num_classes", std::to_string(model.config.data.classes.size()),
               std::to_string(manifest.classes.size()), context);
    check_same("classes", join(model.config.data.classes), join(manifest.classes), context);
    check_same("image_size", std::to_string(model.config.data.image_size),
               std::to_string(corpus_image_size(data_dir, manifest)), context);
}

EvalOutput cmd_eval(const fs::path& checkpoint, const fs::path& data_dir, const std::string& split,
                    bool mask_patch, const fs::path& out_csv, std::ostream& log) {
    const auto loaded = load_model(checkpoint);
    check_corpus_compatible(loaded, data_dir);
    const auto data = train::make_dataset(load_samples(data_dir, split, mask_patch));

    EvalOutput out;
    out.evaluation = train::evaluate(loaded.model, data);
    out.metrics = evalkit::per_class_metrics(out.evaluation.confusion);
    const std::vector<evalkit::ConfigMetrics> table{{loaded.meta.variant, out.metrics}};

    std::ostringstream csv;
    csv << provenance_header("fgwk evaluation, split " + split + (mask_patch ? " (masked)" : ""),
                             loaded.meta.seed, loaded.config.to_json());
    evalkit::write_metrics_csv(csv, table, loaded.config.data.classes);
    write_file_atomic(out_csv, csv.str());
    log << render_metrics_table(table, loaded.config.data.classes);
    return out;
}

EnsembleOutput cmd_ensemble_eval(const std::array<fs::path, 3>& checkpoints, const fs::path& data_dir,
                                 const std::string& split, const fs::path& out_csv,
                                 const fs::path& metrics_csv, std::ostream& log) {
    std::vector<LoadedModel> members;
    for (const auto& path : checkpoints) {
        members.push_back(load_model(path));
    }
    for (std::size_t i = 1; i < members.size(); ++i) {
        const auto context = checkpoints[0].string() + " vs " + checkpoints[i].string();
        const auto& a = members[0].config;
        const auto& b = members[i].config;
        check_same("num_classes", std::to_string(a.data.classes.size()),
                   std::to_string(b.data.classes.size()), context);
        check_same("image_size", std::to_string(a.data.image_size), std::to_string(b.data.image_size),
                   context);
        check_same("classes", join(a.data.classes), join(b.data.classes), context);
    }
    check_corpus_compatible(members[0], data_dir);

    const auto samples = load_samples(data_dir, split, false);
    const auto data = train::make_dataset(samples);
    std::vector<ensemble::Sample> ids;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ids.push_back({data.ids[i], data.labels[i]});
    }
    std::array<ensemble::Predictor, 3> predictors;
    for (std::size_t m = 0; m < 3; ++m) {
        predictors[m] = [&, m](std::size_t i) { return train::predict(members[m].model, data.images[i]); };
    }

    EnsembleOutput out;
    const auto& classes = members[0].config.data.classes;
    out.report = ensemble::ensemble_eval(ids, predictors, classes.size());
    std::vector<evalkit::ConfigMetrics> table;
    for (std::size_t m = 0; m < 3; ++m) {
        out.member_names[m] = members[m].meta.variant;
        table.push_back({out.member_names[m], evalkit::per_class_metrics(out.report.members[m])});
    }
    table.push_back({"ensemble", evalkit::per_class_metrics(out.report.ensemble)});

    const auto header = provenance_header("fgwk ensemble evaluation, split " + split,
                                          members[0].meta.seed, members[0].config.to_json());
    std::ostringstream votes, metrics;
    votes << header;
    ensemble::write_vote_csv(votes, ids, out.report.records);
    metrics << header;
    evalkit::write_metrics_csv(metrics, table, classes);
    write_file_atomic(out_csv, votes.str());
    write_file_atomic(metrics_csv, metrics.str());
    log << render_metrics_table(table, classes);
    return out;
}

std::vector<ExplainRow> cmd_explain(const fs::path& checkpoint, const fs::path& data_dir,
                                    const std::string& split, std::size_t limit,
                                    const fs::path& out_dir, std::ostream& log, std::size_t layer) {
    if (layer >= kNumBlocks) {
        throw ConfigError("explain: no backbone block " + std::to_string(layer));
    }
    const auto loaded = load_model(checkpoint);
    check_corpus_compatible(loaded, data_dir);
    auto samples = load_samples(data_dir, split, false);
    if (limit > 0 && samples.size() > limit) {
        samples.resize(limit);
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }

    std::vector<ExplainRow> rows;
    std::ostringstream csv;
    csv << provenance_header("fgwk Grad-CAM localization, split " + split + ", block " + std::to_string(layer),
                             loaded.meta.seed,
                             loaded.config.to_json());
    csv << "sample_id,true_label,predicted,correct,hit,mass_in_patch,centroid_x,centroid_y\n";
    for (const auto& s : samples) {
        const auto image = train::to_tensor(s.image);
        const auto pred = train::predict(loaded.model, image);
        const auto hm = explain::grad_cam(loaded.model, image, pred.label, layer);
        ExplainRow row{s.id, s.label, pred.label, explain::localization_score(hm, s.patch)};
        explain::write_overlay(out_dir / (s.id + ".ppm"), s.image, hm);
        csv << row.sample_id << ',' << row.true_label << ',' << row.predicted << ','
            << (row.true_label == row.predicted) << ',' << row.localization.hit << ','
            << format_double(row.localization.mass_in_patch) << ','
            << format_double(row.localization.centroid_x) << ','
            << format_double(row.localization.centroid_y) << '\n';
        rows.push_back(std::move(row));
    }
    write_file_atomic(out_dir / "localization.csv", csv.str());
    std::size_t correct = 0, hits = 0;
    for (const auto& r : rows) {
        if (r.true_label == r.predicted) {
            ++correct;
            hits += r.localization.hit;
        }
    }
    log << rows.size() << " overlays in " << out_dir.string() << "; " << hits << " of " << correct
        << " correctly classified samples localized inside the patch\n";
    return rows;
}

} // namespace fgwk::app
