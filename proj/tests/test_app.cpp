#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fgwk/commands.hpp"
#include "fgwk/errors.hpp"

using namespace fgwk;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(FGWK_SOURCE_DIR) / "configs";

class AppTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               (std::string("fgwk_app_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("FGWK_SEED");
    }
    void TearDown() override { fs::remove_all(dir_); }

    RunConfig tiny(std::vector<std::string> overrides = {}) const {
        overrides.push_back("corpus_dir=\"" + (dir_ / "corpus").string() + "\"");
        return load_config(kConfigs / "tiny.json", overrides);
    }

    fs::path dir_;
    std::ostringstream log_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> data_lines(const fs::path& csv) {
    std::vector<std::string> out;
    std::istringstream in(slurp(csv));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            out.push_back(line);
        }
    }
    return out;
}

} // namespace

TEST_F(AppTest, ShippedConfigsLoadAndValidate) {
    for (const auto* name : {"default.json", "tiny.json", "fullscale.json"}) {
        EXPECT_NO_THROW(load_config(kConfigs / name)) << name;
    }
    const auto cfg = load_config(kConfigs / "default.json");
    EXPECT_EQ(cfg.epochs, 30u);
    EXPECT_EQ(cfg.batch_size, 16u);
    EXPECT_EQ(cfg.data.seed, cfg.seed);
    EXPECT_EQ(cfg.model_config(ensemble::VariantId::Base).fpn.proj_width, 96u);
    EXPECT_EQ(cfg.model_config(ensemble::VariantId::LionFpn).fpn.proj_width, 64u);
    EXPECT_EQ(cfg.train_settings(ensemble::VariantId::Base).optimizer.kind, optim::OptimizerKind::Sgd);
    EXPECT_EQ(cfg.train_settings(ensemble::VariantId::Lion).optimizer.kind, optim::OptimizerKind::Lion);
    const auto full = load_config(kConfigs / "fullscale.json");
    EXPECT_EQ(full.epochs, 100u);
    EXPECT_EQ(full.selections.k, (selector::SelectionSchedule::full_scale().k));
    EXPECT_DOUBLE_EQ(full.lion.lr, 5e-6);
    EXPECT_DOUBLE_EQ(full.sgd.lr, 5e-4);
}

TEST_F(AppTest, ConfigJsonRoundTrip) {
    const auto cfg = tiny({"optimizer.lion.lr=0.125", "data.val_fraction=0.25"});
    const auto again = RunConfig::parse(cfg.to_json());
    EXPECT_EQ(again.to_json(), cfg.to_json());
    EXPECT_DOUBLE_EQ(again.lion.lr, 0.125);
    EXPECT_DOUBLE_EQ(again.data.val_fraction, 0.25);
}

TEST_F(AppTest, OverridesAndSeedPrecedence) {
    EXPECT_EQ(tiny().seed, 2024u);
    setenv("FGWK_SEED", "77", 1);
    EXPECT_EQ(tiny().seed, 77u);
    EXPECT_EQ(tiny().data.seed, 77u);
    EXPECT_EQ(load_config(kConfigs / "tiny.json", {}, 5).seed, 5u);
    setenv("FGWK_SEED", "-3", 1);
    EXPECT_THROW(tiny(), ConfigError);
    unsetenv("FGWK_SEED");
    EXPECT_EQ(tiny({"training.epochs=7"}).epochs, 7u);
}

TEST_F(AppTest, ConfigErrorsNameTheKey) {
    auto message = [&](std::vector<std::string> overrides) {
        try {
            tiny(std::move(overrides));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message({"data.classes=[\"a\",\"b\",\"c\"]"}).find("classes"), std::string::npos);
    EXPECT_NE(message({"data.classes=[\"a\",\"b\",\"c\",\"\"]"}).find("classes"), std::string::npos);
    EXPECT_NE(message({"training.epochs=-1"}).find("training.epochs"), std::string::npos);
    EXPECT_NE(message({"optimizer.lion.beta1=\"x\""}).find("optimizer.lion.beta1"), std::string::npos);
    EXPECT_NE(message({"model.selections=[1,2]"}).find("model.selections"), std::string::npos);
    EXPECT_NE(message({"model.selections=[5000,8,4,2]"}).find("model."), std::string::npos);
    EXPECT_NE(message({"optimizer.adam.lr=1"}).find("optimizer.adam"), std::string::npos);
    EXPECT_NE(message({"optimizer.sgd.lr=0"}).find("optimizer.sgd"), std::string::npos);
    EXPECT_NE(message({"data.val_fraction=1.5"}).find("data.val_fraction"), std::string::npos);
    EXPECT_THROW(tiny({"novalue"}), ConfigError);
}

TEST_F(AppTest, MalformedOrMissingConfigFile) {
    EXPECT_THROW(load_config(dir_ / "missing.json"), IoError);
    std::ofstream(dir_ / "bad.json") << "{\"seed\": ";
    EXPECT_THROW(load_config(dir_ / "bad.json"), FormatError);
}

TEST_F(AppTest, GenerateIsDeterministicAndFast) {
    const auto cfg = tiny();
    const auto start = std::chrono::steady_clock::now();
    const auto a = app::cmd_generate(cfg, log_);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(seconds, 5.0);
    EXPECT_EQ(a.split_sizes, (std::array<std::size_t, 4>{32, 8, 24, 6}));
    auto other = cfg;
    other.corpus_dir = dir_ / "corpus2";
    EXPECT_EQ(app::cmd_generate(other, log_).manifest_hash, a.manifest_hash);
    other.seed = other.data.seed = cfg.seed + 1;
    EXPECT_NE(app::cmd_generate(other, log_).manifest_hash, a.manifest_hash);
    // The manifest records seed and config.
    const auto manifest = synth::read_manifest(cfg.corpus_dir);
    EXPECT_EQ(manifest.seed, cfg.seed);
    auto located = RunConfig::parse(manifest.config_snapshot);
    EXPECT_EQ(located.corpus_dir, ".");
    located.corpus_dir = cfg.corpus_dir;
    EXPECT_EQ(located.to_json(), cfg.to_json());
}

TEST_F(AppTest, ZeroEpochsKeepsInitialWeights) {
    const auto cfg = tiny({"training.epochs=0"});
    app::cmd_generate(cfg, log_);
    const auto out = app::cmd_train(cfg, ensemble::VariantId::Lion, dir_ / "runs", log_);
    EXPECT_EQ(data_lines(out.log_csv), (std::vector<std::string>{"epoch,train_loss,val_loss,val_accuracy"}));
    const auto loaded = load_model(out.checkpoint);
    EXPECT_EQ(loaded.meta.epoch, 0u);
    PluginModel fresh(cfg.model_config(ensemble::VariantId::Lion), cfg.init_seed(ensemble::VariantId::Lion));
    EXPECT_EQ(train::snapshot(loaded.model), train::snapshot(fresh));
}

TEST_F(AppTest, TrainingIsDeterministic) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    const auto a = app::cmd_train(cfg, ensemble::VariantId::Base, dir_ / "a", log_);
    const auto b = app::cmd_train(cfg, ensemble::VariantId::Base, dir_ / "b", log_);
    EXPECT_EQ(slurp(a.log_csv), slurp(b.log_csv));
    EXPECT_EQ(slurp(a.checkpoint), slurp(b.checkpoint));
    EXPECT_EQ(data_lines(a.log_csv).size(), 1 + cfg.epochs);
}

TEST_F(AppTest, CheckpointRoundTripIsBitIdentical) {
    const auto cfg = tiny({"training.epochs=1"});
    app::cmd_generate(cfg, log_);
    PluginModel model(cfg.model_config(ensemble::VariantId::LionFpn), 31);
    CheckpointMeta meta{"lionfpn", 3, cfg.seed, 1.5, 0.25, 0.75};
    save_checkpoint(dir_ / "m.ckpt", model, cfg.to_json(), meta);
    const auto loaded = load_model(dir_ / "m.ckpt");
    EXPECT_EQ(train::snapshot(loaded.model), train::snapshot(model));
    EXPECT_EQ(loaded.config.to_json(), cfg.to_json());
    EXPECT_EQ(loaded.variant, ensemble::VariantId::LionFpn);
    EXPECT_EQ(loaded.meta.epoch, 3u);
    EXPECT_EQ(loaded.meta.val_accuracy, 0.75);

    const auto data = train::make_dataset(synth::load_split(cfg.corpus_dir, "test1"));
    const auto before = train::evaluate(model, data);
    const auto after = train::evaluate(loaded.model, data);
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(before.predictions[i].label, after.predictions[i].label);
        EXPECT_EQ(before.predictions[i].confidence, after.predictions[i].confidence);
    }
    save_checkpoint(dir_ / "again.ckpt", loaded.model, loaded.config.to_json(), loaded.meta);
    EXPECT_EQ(slurp(dir_ / "m.ckpt"), slurp(dir_ / "again.ckpt"));
}

TEST_F(AppTest, CorruptCheckpoints) {
    const auto cfg = tiny();
    PluginModel model(cfg.model_config(ensemble::VariantId::Base), 1);
    save_checkpoint(dir_ / "m.ckpt", model, cfg.to_json(), {"base", 0, 0, 0, 0, 0});
    const auto bytes = slurp(dir_ / "m.ckpt");
    EXPECT_EQ(bytes.substr(0, 4), "FGWK");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir_ / name, std::ios::binary) << content;
        return dir_ / name;
    };
    EXPECT_THROW(read_checkpoint(write("magic.ckpt", "FGWX" + bytes.substr(4))), FormatError);
    EXPECT_THROW(read_checkpoint(write("version.ckpt", bytes.substr(0, 4) + '\x02' + bytes.substr(5))),
                 FormatError);
    EXPECT_THROW(read_checkpoint(write("short.ckpt", bytes.substr(0, bytes.size() - 3))), FormatError);
    EXPECT_THROW(read_checkpoint(write("long.ckpt", bytes + "x")), FormatError);
    EXPECT_THROW(read_checkpoint(dir_ / "none.ckpt"), IoError);

    // A checkpoint of a different width does not fit.
    PluginModel narrow(cfg.model_config(ensemble::VariantId::LionFpn), 1);
    auto ckpt = read_checkpoint(dir_ / "m.ckpt");
    if (cfg.model_config(ensemble::VariantId::LionFpn).fpn.proj_width !=
        cfg.model_config(ensemble::VariantId::Base).fpn.proj_width) {
        EXPECT_THROW(load_parameters(narrow, ckpt), FormatError);
    }
    ckpt.tensors.pop_back();
    EXPECT_THROW(load_parameters(model, ckpt), FormatError);
}

TEST_F(AppTest, TrainRejectsMismatchedCorpus) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    auto renamed = tiny({"data.classes=[\"a\",\"b\",\"c\",\"d\"]"});
    EXPECT_THROW(app::cmd_train(renamed, ensemble::VariantId::Base, dir_ / "runs", log_), ConfigError);
    auto smaller = tiny({"data.image_size=32", "data.patch_size=6", "data.patch_radius=8"});
    EXPECT_THROW(app::cmd_train(smaller, ensemble::VariantId::Base, dir_ / "runs", log_), ConfigError);
    auto missing = tiny();
    missing.corpus_dir = dir_ / "nowhere";
    EXPECT_THROW(app::cmd_train(missing, ensemble::VariantId::Base, dir_ / "runs", log_), IoError);
}

TEST_F(AppTest, EnsembleOfCopiesEqualsSingleEval) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    const auto trained = app::cmd_train(cfg, ensemble::VariantId::Lion, dir_ / "runs", log_);
    const auto single = app::cmd_eval(trained.checkpoint, cfg.corpus_dir, "test1", false,
                                      dir_ / "eval.csv", log_);
    const auto ens = app::cmd_ensemble_eval({trained.checkpoint, trained.checkpoint, trained.checkpoint},
                                            cfg.corpus_dir, "test1", dir_ / "votes.csv",
                                            dir_ / "metrics.csv", log_);
    EXPECT_EQ(ens.report.ensemble.trace(), single.evaluation.confusion.trace());
    for (std::size_t i = 0; i < ens.report.records.size(); ++i) {
        EXPECT_EQ(ens.report.records[i].final_label, single.evaluation.predictions[i].label);
        EXPECT_FALSE(ens.report.records[i].tie_broken);
    }
    // 24 samples + header; 4 configs x (4 classes + summary) + header.
    EXPECT_EQ(data_lines(dir_ / "votes.csv").size(), 25u);
    EXPECT_EQ(data_lines(dir_ / "metrics.csv").size(), 21u);
    EXPECT_EQ(data_lines(dir_ / "eval.csv").size(), 6u);
}

TEST_F(AppTest, IncompatibleCheckpointsNameTheField) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    PluginModel model(cfg.model_config(ensemble::VariantId::Base), 1);
    save_checkpoint(dir_ / "a.ckpt", model, cfg.to_json(), {"base", 0, 0, 0, 0, 0});
    const auto small_cfg = tiny({"data.image_size=32", "data.patch_size=6", "data.patch_radius=8",
                                 "model.selections=[16,8,4,1]"});
    PluginModel small(small_cfg.model_config(ensemble::VariantId::Base), 1);
    save_checkpoint(dir_ / "b.ckpt", small, small_cfg.to_json(), {"base", 0, 0, 0, 0, 0});
    const auto renamed_cfg = tiny({"data.classes=[\"a\",\"b\",\"c\",\"d\"]"});
    save_checkpoint(dir_ / "c.ckpt", model, renamed_cfg.to_json(), {"base", 0, 0, 0, 0, 0});

    auto message = [&](std::array<fs::path, 3> models) {
        try {
            app::cmd_ensemble_eval(models, cfg.corpus_dir, "test1", dir_ / "v.csv", dir_ / "m.csv", log_);
        } catch (const FormatError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message({dir_ / "a.ckpt", dir_ / "b.ckpt", dir_ / "a.ckpt"}).find("image_size"), std::string::npos);
    EXPECT_NE(message({dir_ / "a.ckpt", dir_ / "a.ckpt", dir_ / "c.ckpt"}).find("classes"), std::string::npos);
    EXPECT_NE(message({dir_ / "c.ckpt", dir_ / "c.ckpt", dir_ / "c.ckpt"}).find("classes"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "v.csv"));
    EXPECT_THROW(app::cmd_eval(dir_ / "b.ckpt", cfg.corpus_dir, "test1", false, dir_ / "e.csv", log_),
                 FormatError);
    EXPECT_THROW(app::cmd_eval(dir_ / "a.ckpt", cfg.corpus_dir, "holdout", false, dir_ / "e.csv", log_),
                 ConfigError);
}

TEST_F(AppTest, ExplainOneImage) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    PluginModel model(cfg.model_config(ensemble::VariantId::Lion), 2);
    save_checkpoint(dir_ / "m.ckpt", model, cfg.to_json(), {"lion", 0, 0, 0, 0, 0});
    const auto rows = app::cmd_explain(dir_ / "m.ckpt", cfg.corpus_dir, "test2", 1, dir_ / "heat", log_);
    ASSERT_EQ(rows.size(), 1u);
    std::size_t overlays = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "heat")) {
        overlays += e.path().extension() == ".ppm";
    }
    EXPECT_EQ(overlays, 1u);
    EXPECT_EQ(data_lines(dir_ / "heat" / "localization.csv").size(), 2u);
    EXPECT_EQ(slurp(dir_ / "heat" / (rows[0].sample_id + ".ppm")).substr(0, 2), "P6");
    EXPECT_NE(slurp(dir_ / "heat" / "localization.csv").find("block 1"), std::string::npos);
    EXPECT_THROW(app::cmd_explain(dir_ / "m.ckpt", cfg.corpus_dir, "test2", 1, dir_ / "heat", log_, 4),
                 ConfigError);
}

TEST_F(AppTest, MaskedEvaluationMasksEveryPatch) {
    const auto cfg = tiny();
    app::cmd_generate(cfg, log_);
    const auto plain = app::load_samples(cfg.corpus_dir, "test2", false);
    const auto masked = app::load_samples(cfg.corpus_dir, "test2", true);
    ASSERT_EQ(plain.size(), masked.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        EXPECT_EQ(masked[i].image, synth::mask_patch(plain[i].image, plain[i].patch));
    }
}

TEST(Training, MemorizesATinyBatch) {
    synth::DatasetSpec spec;
    std::vector<synth::LabeledSample> samples;
    for (int label = 0; label < 4; ++label) {
        for (std::size_t i = 0; i < 2; ++i) {
            samples.push_back(synth::render_original(spec, label, i));
        }
    }
    const auto data = train::make_dataset(samples);
    ModelConfig cfg;
    cfg.backbone = {1, 8, 64};
    cfg.fpn.proj_width = 32;
    PluginModel model(cfg, 3);
    train::TrainSettings settings;
    settings.epochs = 60;
    settings.batch_size = 8;
    settings.optimizer.kind = optim::OptimizerKind::Lion;
    settings.optimizer.lr = 1e-3;
    const auto result = train::fit(model, data, data, settings);
    EXPECT_EQ(result.best_val_accuracy, 1.0);
    EXPECT_EQ(train::evaluate(model, data).accuracy, 1.0);
}
