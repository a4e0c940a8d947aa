#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "fgwk/commands.hpp"
#include "fgwk/optim.hpp"
#include "fgwk/rng.hpp"
#include "fgwk/selector.hpp"
#include "metric_cases.hpp"
#include "op_cases.hpp"

using namespace fgwk;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

std::string pct(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << 100.0 * v << '%';
    return s.str();
}

Verdict gradient_integrity(const fs::path& pipeline_helper) {
    const auto start = Clock::now();
    double worst = 0.0;
    std::string worst_op;
    for (const auto& c : testing::op_cases()) {
        const double err = testing::worst_rel_error(c);
        if (err >= worst) {
            worst = err;
            worst_op = c.name;
        }
    }
    const auto ops_count = testing::op_cases().size();

    // The full-model check runs in double precision, in its own process.
    double pipeline = -1.0;
    if (FILE* pipe = popen(pipeline_helper.string().c_str(), "r")) {
        if (std::fscanf(pipe, "%lf", &pipeline) != 1) {
            pipeline = -1.0;
        }
        if (pclose(pipe) != 0) {
            pipeline = -1.0;
        }
    }
    const double elapsed = seconds_since(start);
    Verdict v;
    v.pass = worst < testing::kOpTolerance && pipeline >= 0.0 && pipeline < 5e-3 && elapsed < 120.0;
    v.detail = std::to_string(ops_count) + " ops x " + std::to_string(testing::kOpSeeds) +
               " seeds, worst " + fmt(worst) + " (" + worst_op + "); pipeline " +
               (pipeline < 0 ? std::string("helper failed") : fmt(pipeline)) + "; " + fmt(elapsed, 3) + " s";
    return v;
}

std::vector<std::size_t> brute_force_top_k(std::span<const Real> p, std::size_t k) {
    // k largest by (confidence, -index).
    std::vector<std::size_t> out;
    std::vector<bool> taken(p.size(), false);
    for (std::size_t round = 0; round < k; ++round) {
        std::size_t best = p.size();
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!taken[i] && (best == p.size() || p[i] > p[best])) {
                best = i;
            }
        }
        taken[best] = true;
        out.push_back(best);
    }
    return out;
}

Verdict selector_oracle() {
    Rng rng(2024);
    std::size_t matched = 0;
    const std::size_t trials = 200;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t h = 1 + rng.below(16), w = 1 + rng.below(16), c = 1 + rng.below(32);
        auto fmap = testing::random_tensor({c, h, w}, 10'000 + t);
        auto head = selector::SelectorHead::init(c, 4, rng);
        if (t % 4 == 3) {
            // Collapsed head: every pixel scores the bias, all confidences tie.
            auto weight = head.weight;
            std::fill(weight.data().begin(), weight.data().end(), Real(0));
        }
        const auto conf = selector::pixel_confidence(selector::score_pixels(fmap, head));
        const std::size_t k = 1 + rng.below(h * w);
        const auto r = selector::rank_and_select(conf, k);
        matched += r.chosen == brute_force_top_k(conf.data(), k);
    }
    return {matched == trials, std::to_string(matched) + "/" + std::to_string(trials) + " maps match"};
}

Verdict lion_law() {
    Rng rng(7);
    const optim::LionConfig cfg{0.0125, 0.9, 0.99, 0.0};
    const auto lr = static_cast<Real>(cfg.lr);
    std::size_t bad = 0, coords = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Real> w(8), g(8), mu(8), update(8);
        for (std::size_t i = 0; i < 8; ++i) {
            w[i] = static_cast<Real>(rng.normal());
            g[i] = i == 7 ? Real(0) : static_cast<Real>(rng.normal());
            mu[i] = i == 7 ? Real(0) : static_cast<Real>(rng.normal());
        }
        optim::lion_update(w, g, mu, cfg, update);
        for (auto u : update) {
            bad += !(std::abs(u) == lr || u == Real(0));
            ++coords;
        }
    }
    std::vector<Real> w{0, 0}, g{2, -3}, mu{0, 0};
    optim::lion_step(w, g, mu, {0.01, 0.9, 0.99, 0.0});
    const double hand = std::max(std::abs(w[0] + 0.01), std::abs(w[1] - 0.01));
    return {bad == 0 && hand <= 1e-7,
            std::to_string(coords - bad) + "/" + std::to_string(coords) + " coordinates of magnitude lr or 0; hand example off by " +
                fmt(hand)};
}

Verdict majority_law() {
    Rng rng(3);
    std::size_t patterns = 0, ok = 0;
    auto probs = [&] {
        std::vector<double> p(4);
        double total = 0.0;
        for (auto& v : p) {
            v = rng.uniform() + 1e-3;
            total += v;
        }
        for (auto& v : p) {
            v /= total;
        }
        return p;
    };
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            for (int c = 0; c < 4; ++c) {
                ++patterns;
                const std::vector<ensemble::Prediction> voters{{a, probs()}, {b, probs()}, {c, probs()}};
                const int labels[] = {a, b, c};
                int expected = -1;
                for (int k = 0; k < 4; ++k) {
                    if (std::count(labels, labels + 3, k) >= 2) {
                        expected = k;
                    }
                }
                if (expected < 0) {
                    std::vector<double> sums(4, 0.0);
                    for (const auto& v : voters) {
                        for (int k = 0; k < 4; ++k) {
                            sums[k] += v.confidence[k];
                        }
                    }
                    expected = static_cast<int>(std::max_element(sums.begin(), sums.end()) - sums.begin());
                }
                bool good = true;
                std::vector<int> order{0, 1, 2};
                do {
                    const auto r = ensemble::vote({voters[order[0]], voters[order[1]], voters[order[2]]});
                    good = good && r.final_label == expected;
                } while (std::next_permutation(order.begin(), order.end()));
                ok += good;
            }
        }
    }
    return {ok == patterns, std::to_string(ok) + "/" + std::to_string(patterns) + " vote patterns (all orders)"};
}

bool metric_hand_cases(std::string& detail) {
    std::size_t good = 0;
    const auto cases = testing::hand_metric_cases();
    for (const auto& c : cases) {
        const auto m = evalkit::per_class_metrics(testing::build_matrix(c));
        auto close = [](const std::optional<double>& a, const std::optional<double>& b) {
            return a.has_value() == b.has_value() && (!a || std::abs(*a - *b) <= 1e-6);
        };
        bool ok = m.per_class.size() == c.expected.size() && std::abs(m.accuracy - c.accuracy) <= 1e-6;
        for (std::size_t k = 0; ok && k < c.expected.size(); ++k) {
            ok = close(m.per_class[k].sensitivity, c.expected[k].sensitivity) &&
                 close(m.per_class[k].specificity, c.expected[k].specificity) &&
                 close(m.per_class[k].precision, c.expected[k].precision);
        }
        good += ok;
    }
    detail = std::to_string(good) + "/" + std::to_string(cases.size()) + " hand matrices";
    return good == cases.size();
}

// 4 configs x 4 classes x 3 metrics in the ensemble metrics CSV.
bool metrics_layout(const fs::path& csv, const std::vector<std::string>& classes, std::string& detail) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    while (!line.empty() && line[0] == '#') {
        std::getline(in, line);
    }
    if (line != "config,class,sensitivity,specificity,precision,accuracy") {
        detail = "bad header";
        return false;
    }
    std::map<std::string, std::set<std::string>> seen;
    std::size_t cells = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream s(line);
        std::string cell;
        while (std::getline(s, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() >= 5 && f[1] != "all") {
            seen[f[0]].insert(f[1]);
            cells += 3;
        }
    }
    const std::set<std::string> want_classes(classes.begin(), classes.end());
    bool ok = seen.size() == 4 && cells == 4 * classes.size() * 3;
    for (const auto* config : {"base", "lion", "lionfpn", "ensemble"}) {
        ok = ok && seen[config] == want_classes;
    }
    detail = std::to_string(seen.size()) + " configs, " + std::to_string(cells) + " metric cells";
    return ok;
}

struct EndToEnd {
    std::array<double, 3> test1{};
    std::array<double, 3> masked{};
    std::array<double, 3> hit_rate{};
    std::array<std::size_t, 3> explained{};
    double ensemble = 0.0;
    std::size_t majority_violations = 0;
    std::size_t agreements = 0;
    double train_seconds = 0.0;
    fs::path metrics_csv;
    std::vector<std::string> classes;
};

EndToEnd run_end_to_end(const RunConfig& cfg, const fs::path& work) {
    std::ostringstream log;
    EndToEnd r;
    r.classes = cfg.data.classes;
    app::cmd_generate(cfg, log);
    std::array<fs::path, 3> ckpts;
    const auto start = Clock::now();
    for (std::size_t i = 0; i < 3; ++i) {
        const auto variant = ensemble::kAllVariants[i];
        ckpts[i] = app::cmd_train(cfg, variant, work / "runs", std::cerr).checkpoint;
    }
    r.train_seconds = seconds_since(start);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto name = ckpts[i].stem().string();
        r.test1[i] = app::cmd_eval(ckpts[i], cfg.corpus_dir, "test1", false, work / ("eval_" + name + ".csv"), log)
                         .evaluation.accuracy;
        r.masked[i] = app::cmd_eval(ckpts[i], cfg.corpus_dir, "test1", true,
                                    work / ("eval_masked_" + name + ".csv"), log)
                          .evaluation.accuracy;
        const auto rows = app::cmd_explain(ckpts[i], cfg.corpus_dir, "test2", 0, work / ("explain_" + name), log);
        std::size_t correct = 0, hits = 0;
        for (const auto& row : rows) {
            if (row.predicted == row.true_label) {
                ++correct;
                hits += row.localization.hit;
            }
        }
        r.explained[i] = correct;
        r.hit_rate[i] = correct == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(correct);
    }
    r.metrics_csv = work / "ensemble_metrics.csv";
    const auto ens = app::cmd_ensemble_eval(ckpts, cfg.corpus_dir, "test1", work / "ensemble_votes.csv",
                                            r.metrics_csv, log);
    r.ensemble = static_cast<double>(ens.report.ensemble.trace()) / static_cast<double>(ens.report.ensemble.total());
    for (const auto& rec : ens.report.records) {
        for (int k = 0; k < 4; ++k) {
            const auto votes = std::count_if(rec.votes.begin(), rec.votes.end(),
                                             [k](const auto& p) { return p.label == k; });
            if (votes >= 2) {
                ++r.agreements;
                r.majority_violations += rec.final_label != k;
            }
        }
    }
    return r;
}

Verdict determinism(const RunConfig& tiny, const fs::path& work) {
    std::ostringstream log;
    auto a = tiny, b = tiny;
    a.corpus_dir = work / "corpus_a";
    b.corpus_dir = work / "corpus_b";
    const auto ha = app::cmd_generate(a, log).manifest_hash;
    const auto hb = app::cmd_generate(b, log).manifest_hash;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const auto ta = app::cmd_train(a, ensemble::VariantId::LionFpn, work / "runs_a", log);
    const auto tb = app::cmd_train(b, ensemble::VariantId::LionFpn, work / "runs_b", log);
    auto body = [&](const fs::path& p) {
        // Drop the header lines, which record the corpus location.
        auto text = slurp(p);
        return text.substr(text.find("epoch,"));
    };
    const bool curves = body(ta.log_csv) == body(tb.log_csv);

    const auto loaded = load_model(ta.checkpoint);
    const auto direct = train::snapshot(loaded.model);
    save_checkpoint(work / "again.ckpt", loaded.model, loaded.config.to_json(), loaded.meta);
    const auto reloaded = load_model(work / "again.ckpt");
    const bool params = train::snapshot(reloaded.model) == direct;
    const auto data = train::make_dataset(synth::load_split(a.corpus_dir, "test1"));
    const auto e1 = train::evaluate(loaded.model, data), e2 = train::evaluate(reloaded.model, data);
    bool same_eval = e1.loss == e2.loss;
    for (std::size_t i = 0; i < data.size(); ++i) {
        same_eval = same_eval && e1.predictions[i].label == e2.predictions[i].label &&
                    e1.predictions[i].confidence == e2.predictions[i].confidence;
    }
    return {ha == hb && curves && params && same_eval,
            std::string("manifest hash ") + (ha == hb ? "equal" : "differs") + ", curves " +
                (curves ? "equal" : "differ") + ", parameters " + (params ? "bit-identical" : "differ") +
                ", evaluation " + (same_eval ? "identical" : "differs")};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"acceptance checks, one PASS/FAIL line per criterion"};
    fs::path config = fs::path(FGWK_SOURCE_DIR) / "configs" / "default.json";
    fs::path tiny_config = fs::path(FGWK_SOURCE_DIR) / "configs" / "tiny.json";
    fs::path helper = FGWK_PIPELINE_HELPER;
    fs::path work;
    std::vector<int> only;
    cli.add_option("--config", config, "Run config for the end-to-end criteria")->capture_default_str();
    cli.add_option("--tiny-config", tiny_config, "Run config for the determinism criterion")->capture_default_str();
    cli.add_option("--work", work, "Keep artifacts here (default: a temporary directory)");
    cli.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(cli, argc, argv);

    const bool temporary = work.empty();
    if (temporary) {
        work = fs::temp_directory_path() / ("fgwk_acceptance_" + std::to_string(::getpid()));
    }
    fs::remove_all(work);
    fs::create_directories(work);
    auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

    std::map<int, Verdict> verdicts;
    try {
        if (wanted(1)) verdicts[1] = gradient_integrity(helper);
        if (wanted(2)) verdicts[2] = selector_oracle();
        if (wanted(3)) verdicts[3] = lion_law();
        if (wanted(4)) verdicts[4] = majority_law();
        if (wanted(9)) {
            auto tiny = load_config(tiny_config);
            verdicts[9] = determinism(tiny, work / "determinism");
        }
        if (wanted(5) || wanted(6) || wanted(7) || wanted(8)) {
            auto cfg = load_config(config);
            cfg.corpus_dir = work / "e2e" / "corpus";
            const auto r = run_end_to_end(cfg, work / "e2e");
            const auto min_member = *std::min_element(r.test1.begin(), r.test1.end());
            const auto max_member = *std::max_element(r.test1.begin(), r.test1.end());
            const bool floor = min_member >= 0.85;
            const bool ensemble_law = r.ensemble >= min_member && r.majority_violations == 0;
            verdicts[5] = {floor && ensemble_law && cfg.epochs <= 30 && r.train_seconds < 1800.0,
                           "test1 base " + pct(r.test1[0]) + ", lion " + pct(r.test1[1]) + ", lionfpn " +
                               pct(r.test1[2]) + ", ensemble " + pct(r.ensemble) + " (" +
                               (r.ensemble >= max_member ? "" : "not ") + "above every member), " +
                               std::to_string(r.majority_violations) + "/" + std::to_string(r.agreements) +
                               " majority violations, training " + fmt(r.train_seconds / 60.0, 3) + " min"};
            verdicts[6] = {*std::max_element(r.masked.begin(), r.masked.end()) <= 0.40,
                           "masked test1 base " + pct(r.masked[0]) + ", lion " + pct(r.masked[1]) + ", lionfpn " +
                               pct(r.masked[2])};
            std::string hits;
            bool all_hit = true;
            for (std::size_t i = 0; i < 3; ++i) {
                hits += (i ? ", " : "") + ensemble::to_string(ensemble::kAllVariants[i]) + " " +
                        pct(r.hit_rate[i]) + " of " + std::to_string(r.explained[i]);
                all_hit = all_hit && r.explained[i] > 0 && r.hit_rate[i] >= 0.60;
            }
            verdicts[7] = {all_hit, "test2 centroid in patch: " + hits};
            std::string hand, layout;
            const bool hand_ok = metric_hand_cases(hand);
            const bool layout_ok = metrics_layout(r.metrics_csv, r.classes, layout);
            verdicts[8] = {hand_ok && layout_ok, hand + "; " + layout};
        }
    } catch (const std::exception& e) {
        std::cerr << "acceptance aborted: " << e.what() << '\n';
        return 2;
    }
    if (temporary) {
        fs::remove_all(work);
    }

    bool all = true;
    for (const auto& [n, v] : verdicts) {
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << '\n';
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
