#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fgwk/checkpoint.hpp"
#include "fgwk/config.hpp"
#include "fgwk/ensemble.hpp"
#include "fgwk/evalkit.hpp"
#include "fgwk/explain.hpp"
#include "fgwk/train.hpp"

// Subcommand bodies shared by the command-line tool and the tests. Each
// writes its artifacts, reports progress on `log`, and throws fgwk::Error
// subclasses on failure.
namespace fgwk::app {

namespace fs = std::filesystem;

struct GenerateResult {
    fs::path manifest;
    std::uint64_t manifest_hash = 0;
    std::array<std::size_t, 4> split_sizes{}; // train, val, test1, test2
};

GenerateResult cmd_generate(const RunConfig& cfg, std::ostream& log);

struct TrainOutput {
    fs::path checkpoint;
    fs::path log_csv;
    train::TrainResult result;
};

// Trains one variant on the corpus at cfg.corpus_dir and writes
// <out_dir>/<variant>.ckpt (best validation epoch) and <variant>_log.csv.
TrainOutput cmd_train(const RunConfig& cfg, ensemble::VariantId variant, const fs::path& out_dir,
                      std::ostream& log);

// Samples of one split, optionally with the patch masked out.
std::vector<synth::LabeledSample> load_samples(const fs::path& data_dir, const std::string& split,
                                               bool mask_patch);

// FormatError naming the field when a checkpoint cannot score this corpus.
void check_corpus_compatible(const LoadedModel& model, const fs::path& data_dir);

struct EvalOutput {
    train::Evaluation evaluation;
    evalkit::Metrics metrics;
};

EvalOutput cmd_eval(const fs::path& checkpoint, const fs::path& data_dir, const std::string& split,
                    bool mask_patch, const fs::path& out_csv, std::ostream& log);

struct EnsembleOutput {
    ensemble::EnsembleReport report;
    std::array<std::string, 3> member_names;
};

// Votes the three checkpoints (given in base, lion, lionfpn column order)
// and writes the per-sample vote CSV to `out_csv` and the four-config
// metrics table (three members then "ensemble") to `metrics_csv`.
EnsembleOutput cmd_ensemble_eval(const std::array<fs::path, 3>& checkpoints, const fs::path& data_dir,
                                 const std::string& split, const fs::path& out_csv,
                                 const fs::path& metrics_csv, std::ostream& log);

struct ExplainRow {
    std::string sample_id;
    int true_label = 0;
    int predicted = 0;
    explain::Localization localization;
};

// Grad-CAM of the predicted class over backbone block `layer` for the first
// `limit` samples of the split (0 = all): <out_dir>/<id>.ppm overlays and
// localization.csv.
std::vector<ExplainRow> cmd_explain(const fs::path& checkpoint, const fs::path& data_dir,
                                    const std::string& split, std::size_t limit,
                                    const fs::path& out_dir, std::ostream& log,
                                    std::size_t layer = explain::kDefaultCamLayer);

// Writes via a temporary file renamed into place, so a failed command
// leaves no partial file behind.
void write_file_atomic(const fs::path& path, const std::string& content);

} // namespace fgwk::app
