#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fgwk/commands.hpp"
#include "fgwk/errors.hpp"

using namespace fgwk;

int main(int argc, char** argv) {
    CLI::App app{"fgwk: fine-grained recognition on a synthetic corpus"};
    app.require_subcommand(1);

    std::string config_path = "configs/default.json";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    auto add_config_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run config")->capture_default_str();
        cmd->add_option("--set", overrides, "Override a config key, e.g. --set training.epochs=5");
        cmd->add_option("--seed", seed, "Override the config seed (after FGWK_SEED)");
    };

    std::string data_dir, out, variant, model;
    std::string eval_split = "test1", ensemble_split = "test1", explain_split = "test2";
    std::vector<std::string> models;
    std::string metrics_out;
    std::size_t limit = 0;
    std::size_t layer = explain::kDefaultCamLayer;
    bool mask = false;

    auto* generate = app.add_subcommand("generate", "Render and curate the synthetic corpus");
    add_config_options(generate);
    generate->add_option("--out", out, "Corpus directory (default: corpus_dir from the config)");

    auto* train_cmd = app.add_subcommand("train", "Train one variant");
    add_config_options(train_cmd);
    train_cmd->add_option("--variant", variant, "base, lion or lionfpn")
        ->required()
        ->check(CLI::IsMember({"base", "lion", "lionfpn"}));
    train_cmd->add_option("--data", data_dir, "Corpus directory (default: corpus_dir from the config)");
    train_cmd->add_option("--out", out, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Per-class metrics of one checkpoint");
    eval->add_option("--model", model, "Checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data_dir, "Corpus directory")->required();
    eval->add_option("--split", eval_split, "Split to score")->capture_default_str();
    eval->add_flag("--mask", mask, "Mask the ground-truth patch before scoring");
    eval->add_option("--out", out, "Metrics CSV")->required();

    auto* ens = app.add_subcommand("ensemble-eval", "Majority vote of three checkpoints");
    ens->add_option("--models", models, "base, lion and lionfpn checkpoints")
        ->required()
        ->expected(3)
        ->check(CLI::ExistingFile);
    ens->add_option("--data", data_dir, "Corpus directory")->required();
    ens->add_option("--split", ensemble_split, "Split to score")->capture_default_str();
    ens->add_option("--out", out, "Per-sample vote CSV")->required();
    ens->add_option("--metrics", metrics_out, "Metrics CSV (default: <out stem>_metrics.csv)");

    auto* expl = app.add_subcommand("explain", "Grad-CAM overlays and localization scores");
    expl->add_option("--model", model, "Checkpoint")->required()->check(CLI::ExistingFile);
    expl->add_option("--data", data_dir, "Corpus directory")->required();
    expl->add_option("--split", explain_split, "Split to explain")->capture_default_str();
    expl->add_option("--limit", limit, "Explain only the first N samples (0 = all)");
    expl->add_option("--layer", layer, "Backbone block the heat map is taken from (0-3)")->capture_default_str();
    expl->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            auto cfg = load_config(config_path, overrides, seed);
            if (!out.empty()) {
                cfg.corpus_dir = out;
            }
            app::cmd_generate(cfg, std::cout);
        } else if (train_cmd->parsed()) {
            auto cfg = load_config(config_path, overrides, seed);
            if (!data_dir.empty()) {
                cfg.corpus_dir = data_dir;
            }
            app::cmd_train(cfg, ensemble::parse_variant(variant), out, std::cout);
        } else if (eval->parsed()) {
            app::cmd_eval(model, data_dir, eval_split, mask, out, std::cout);
        } else if (ens->parsed()) {
            std::filesystem::path out_path = out;
            if (metrics_out.empty()) {
                metrics_out = (out_path.parent_path() / (out_path.stem().string() + "_metrics.csv")).string();
            }
            app::cmd_ensemble_eval({models[0], models[1], models[2]}, data_dir, ensemble_split, out_path,
                                   metrics_out, std::cout);
        } else if (expl->parsed()) {
            app::cmd_explain(model, data_dir, explain_split, limit, out, std::cout, layer);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
