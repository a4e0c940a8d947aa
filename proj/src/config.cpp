#include "fgwk/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fgwk/errors.hpp"

namespace fgwk {

using nlohmann::json;

namespace {

// Reads known keys out of one JSON object and rejects the rest.
class Fields {
public:
    Fields(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) {
            throw ConfigError(name_or_root() + ": expected an object");
        }
    }

    void get(const std::string& key, std::size_t& out) {
        if (const auto* v = take(key)) {
            if (!v->is_number_unsigned()) {
                throw ConfigError(prefix_ + key + ": expected a non-negative integer");
            }
            out = v->get<std::size_t>();
        }
    }

    void get(const std::string& key, double& out) {
        if (const auto* v = take(key)) {
            if (!v->is_number()) {
                throw ConfigError(prefix_ + key + ": expected a number");
            }
            out = v->get<double>();
        }
    }

    void get(const std::string& key, std::string& out) {
        if (const auto* v = take(key)) {
            if (!v->is_string()) {
                throw ConfigError(prefix_ + key + ": expected a string");
            }
            out = v->get<std::string>();
        }
    }

    void get(const std::string& key, std::vector<std::string>& out) {
        if (const auto* v = take(key)) {
            if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_string(); })) {
                throw ConfigError(prefix_ + key + ": expected an array of strings");
            }
            out = v->get<std::vector<std::string>>();
        }
    }

    void get(const std::string& key, std::vector<std::size_t>& out) {
        if (const auto* v = take(key)) {
            if (!v->is_array() ||
                !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number_unsigned(); })) {
                throw ConfigError(prefix_ + key + ": expected an array of non-negative integers");
            }
            out = v->get<std::vector<std::size_t>>();
        }
    }

    template <typename Fn>
    void object(const std::string& key, Fn&& read) {
        if (const auto* v = take(key)) {
            Fields sub(*v, prefix_ + key + ".");
            read(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!used_.contains(key)) {
                throw ConfigError("unknown config key " + prefix_ + key);
            }
        }
    }

private:
    const json* take(const std::string& key) {
        used_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string name_or_root() const {
        return prefix_.empty() ? "config" : prefix_.substr(0, prefix_.size() - 1);
    }

    const json& obj_;
    std::string prefix_;
    std::set<std::string> used_;
};

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are read as size_t");

void read_config(Fields& f, RunConfig& cfg) {
    f.get("seed", cfg.seed);
    std::string corpus = cfg.corpus_dir.string();
    f.get("corpus_dir", corpus);
    cfg.corpus_dir = corpus;
    f.object("data", [&](Fields& d) {
        auto& s = cfg.data;
        d.get("classes", s.classes);
        d.get("image_size", s.image_size);
        d.get("originals_per_class", s.originals_per_class);
        d.get("max_originals_per_class", s.max_originals_per_class);
        d.get("train_per_class", s.train_per_class);
        d.get("test1_per_class", s.test1_per_class);
        d.get("test2_per_class", s.test2_per_class);
        d.get("val_fraction", s.val_fraction);
        d.get("test1_source_fraction", s.test1_source_fraction);
        d.get("patch_size", s.patch_size);
        d.get("patch_radius", s.patch_radius);
        d.object("augment", [&](Fields& a) {
            a.get("max_rotation_deg", s.augment.max_rotation_deg);
            a.get("max_shift_frac", s.augment.max_shift_frac);
            a.get("min_zoom", s.augment.min_zoom);
            a.get("max_zoom", s.augment.max_zoom);
            a.get("hflip_prob", s.augment.hflip_prob);
            a.get("min_brightness", s.augment.min_brightness);
            a.get("max_brightness", s.augment.max_brightness);
        });
    });
    f.object("model", [&](Fields& m) {
        m.get("base_channels", cfg.base_channels);
        std::vector<std::size_t> k(cfg.selections.k.begin(), cfg.selections.k.end());
        m.get("selections", k);
        if (k.size() != kNumBlocks) {
            throw ConfigError("model.selections: expected " + std::to_string(kNumBlocks) + " entries");
        }
        std::copy(k.begin(), k.end(), cfg.selections.k.begin());
        m.get("fpn_size", cfg.fpn_size);
        m.get("variant_fpn_size", cfg.variant_fpn_size);
    });
    f.object("optimizer", [&](Fields& o) {
        o.object("sgd", [&](Fields& s) {
            s.get("lr", cfg.sgd.lr);
            s.get("momentum", cfg.sgd.momentum);
            s.get("weight_decay", cfg.sgd.weight_decay);
            s.get("clip_norm", cfg.sgd.clip_norm);
        });
        o.object("lion", [&](Fields& l) {
            l.get("lr", cfg.lion.lr);
            l.get("beta1", cfg.lion.beta1);
            l.get("beta2", cfg.lion.beta2);
            l.get("weight_decay", cfg.lion.weight_decay);
        });
    });
    f.object("training", [&](Fields& t) {
        t.get("batch_size", cfg.batch_size);
        t.get("epochs", cfg.epochs);
    });
}

json to_json_value(const RunConfig& cfg) {
    const auto& s = cfg.data;
    const auto& a = s.augment;
    json j;
    j["seed"] = cfg.seed;
    j["corpus_dir"] = cfg.corpus_dir.string();
    j["data"] = {{"classes", s.classes},
                 {"image_size", s.image_size},
                 {"originals_per_class", s.originals_per_class},
                 {"max_originals_per_class", s.max_originals_per_class},
                 {"train_per_class", s.train_per_class},
                 {"test1_per_class", s.test1_per_class},
                 {"test2_per_class", s.test2_per_class},
                 {"val_fraction", s.val_fraction},
                 {"test1_source_fraction", s.test1_source_fraction},
                 {"patch_size", s.patch_size},
                 {"patch_radius", s.patch_radius},
                 {"augment",
                  {{"max_rotation_deg", a.max_rotation_deg},
                   {"max_shift_frac", a.max_shift_frac},
                   {"min_zoom", a.min_zoom},
                   {"max_zoom", a.max_zoom},
                   {"hflip_prob", a.hflip_prob},
                   {"min_brightness", a.min_brightness},
                   {"max_brightness", a.max_brightness}}}};
    j["model"] = {{"base_channels", cfg.base_channels},
                  {"selections", cfg.selections.k},
                  {"fpn_size", cfg.fpn_size},
                  {"variant_fpn_size", cfg.variant_fpn_size}};
    j["optimizer"] = {{"sgd",
                       {{"lr", cfg.sgd.lr},
                        {"momentum", cfg.sgd.momentum},
                        {"weight_decay", cfg.sgd.weight_decay},
                        {"clip_norm", cfg.sgd.clip_norm}}},
                      {"lion",
                       {{"lr", cfg.lion.lr},
                        {"beta1", cfg.lion.beta1},
                        {"beta2", cfg.lion.beta2},
                        {"weight_decay", cfg.lion.weight_decay}}}};
    j["training"] = {{"batch_size", cfg.batch_size}, {"epochs", cfg.epochs}};
    return j;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(what + ": " + e.what());
    }
}

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not key=value");
    }
    const auto key = assignment.substr(0, eq);
    const auto text = assignment.substr(eq + 1);
    json* node = &root;
    std::stringstream parts(key);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (part.empty() || !node->is_object()) {
            throw ConfigError("override key " + key + " does not name a config field");
        }
        node = &(*node)[part];
    }
    const auto value = json::parse(text, nullptr, false);
    *node = value.is_discarded() ? json(text) : value;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw ConfigError(what + ": '" + text + "' is not a non-negative integer seed");
    }
    return value;
}

std::size_t variant_index(ensemble::VariantId v) { return static_cast<std::size_t>(v); }

} // namespace

void RunConfig::validate() const {
    auto prefixed = [](const std::string& prefix, auto&& check) {
        try {
            check();
        } catch (const ConfigError& e) {
            throw ConfigError(prefix + e.what());
        }
    };
    prefixed("data.", [&] { data.validate(); });
    prefixed("optimizer.sgd.", [&] { sgd.validate(); });
    prefixed("optimizer.lion.", [&] { lion.validate(); });
    if (base_channels == 0) {
        throw ConfigError("model.base_channels must be positive");
    }
    if (fpn_size == 0 || variant_fpn_size == 0) {
        throw ConfigError("model.fpn_size and model.variant_fpn_size must be positive");
    }
    prefixed("model.", [&] {
        for (auto v : ensemble::kAllVariants) {
            model_config(v).validate();
        }
    });
    if (batch_size == 0) {
        throw ConfigError("training.batch_size must be positive");
    }
}

ModelConfig RunConfig::model_config(ensemble::VariantId variant) const {
    ModelConfig m;
    m.backbone = {1, base_channels, data.image_size};
    m.schedule = selections;
    m.fpn.proj_width = combiner::FpnConfig::desk_width(
        variant == ensemble::VariantId::LionFpn ? variant_fpn_size : fpn_size);
    m.num_classes = data.classes.size();
    return m;
}

train::TrainSettings RunConfig::train_settings(ensemble::VariantId variant) const {
    train::TrainSettings t;
    t.batch_size = batch_size;
    t.epochs = epochs;
    t.seed = derive_seed(seed, 200 + variant_index(variant));
    auto& o = t.optimizer;
    o.kind = ensemble::variant_spec(variant).optimizer;
    if (o.kind == optim::OptimizerKind::Sgd) {
        o.lr = sgd.lr;
        o.momentum = sgd.momentum;
        o.weight_decay = sgd.weight_decay;
        o.clip_norm = sgd.clip_norm;
    } else {
        o.lr = lion.lr;
        o.beta1 = lion.beta1;
        o.beta2 = lion.beta2;
        o.weight_decay = lion.weight_decay;
    }
    return t;
}

std::uint64_t RunConfig::init_seed(ensemble::VariantId variant) const {
    return derive_seed(seed, 100 + variant_index(variant));
}

std::string RunConfig::to_json() const { return to_json_value(*this).dump(); }

RunConfig RunConfig::parse(const std::string& json_text) {
    const auto j = parse_json(json_text, "config");
    RunConfig cfg;
    Fields root(j, "");
    read_config(root, cfg);
    root.finish();
    cfg.data.seed = cfg.seed;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    auto j = parse_json(text.str(), path.string());
    if (!j.is_object()) {
        throw ConfigError(path.string() + ": expected a JSON object");
    }
    if (const char* env = std::getenv("FGWK_SEED"); env != nullptr && *env != '\0') {
        j["seed"] = parse_seed(env, "FGWK_SEED");
    }
    for (const auto& o : overrides) {
        apply_override(j, o);
    }
    if (seed_override) {
        j["seed"] = *seed_override;
    }
    auto cfg = RunConfig::parse(j.dump());
    cfg.validate();
    return cfg;
}

} // namespace fgwk
