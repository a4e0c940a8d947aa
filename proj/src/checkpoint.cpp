#include "fgwk/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>

#include <json.hpp>

#include "fgwk/errors.hpp"

namespace fgwk {

namespace {

class Writer {
public:
    template <typename T>
    void uint(T value) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes_.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
        }
    }
    void text(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
    const std::vector<char>& bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
};

class Reader {
public:
    Reader(std::vector<char> bytes, std::string source)
        : bytes_(std::move(bytes)), source_(std::move(source)) {}

    template <typename T>
    T uint(const char* what) {
        need(sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    float f32(const char* what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }
    bool at_end() const { return pos_ == bytes_.size(); }
    [[noreturn]] void fail(const std::string& msg) const { throw FormatError(source_ + ": " + msg); }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            fail(std::string("truncated while reading ") + what);
        }
    }

    std::vector<char> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const std::filesystem::path& path, const PluginModel& model,
                     const std::string& config_json, const CheckpointMeta& meta) {
    const nlohmann::json meta_json{{"variant", meta.variant},       {"epoch", meta.epoch},
                                   {"seed", meta.seed},             {"train_loss", meta.train_loss},
                                   {"val_loss", meta.val_loss},     {"val_accuracy", meta.val_accuracy}};
    const auto meta_text = meta_json.dump();
    Writer w;
    w.text("FGWK");
    w.uint<std::uint16_t>(kCheckpointVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(config_json.size()));
    w.text(config_json);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(meta_text.size()));
    w.text(meta_text);
    const auto params = model.parameters();
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.uint<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
        w.text(p.name);
        const auto& shape = p.tensor.shape();
        w.uint<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
        for (auto d : shape) {
            w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
        }
        for (auto v : p.tensor.data()) {
            w.f32(static_cast<float>(v));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read checkpoint " + path.string());
    }
    Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}), path.string());
    if (r.text(4, "magic") != "FGWK") {
        r.fail("not a checkpoint (bad magic)");
    }
    Checkpoint ckpt;
    ckpt.version = r.uint<std::uint16_t>("version");
    if (ckpt.version != kCheckpointVersion) {
        r.fail("unsupported checkpoint version " + std::to_string(ckpt.version));
    }
    ckpt.config_json = r.text(r.uint<std::uint32_t>("config length"), "config");
    const auto meta_text = r.text(r.uint<std::uint32_t>("metadata length"), "metadata");
    try {
        const auto m = nlohmann::json::parse(meta_text);
        ckpt.meta.variant = m.at("variant").get<std::string>();
        ckpt.meta.epoch = m.at("epoch").get<std::size_t>();
        ckpt.meta.seed = m.at("seed").get<std::uint64_t>();
        ckpt.meta.train_loss = m.at("train_loss").get<double>();
        ckpt.meta.val_loss = m.at("val_loss").get<double>();
        ckpt.meta.val_accuracy = m.at("val_accuracy").get<double>();
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("bad metadata: ") + e.what());
    }
    const auto count = r.uint<std::uint32_t>("tensor count");
    for (std::uint32_t t = 0; t < count; ++t) {
        TensorRecord rec;
        rec.name = r.text(r.uint<std::uint16_t>("name length"), "tensor name");
        const auto rank = r.uint<std::uint8_t>("rank");
        std::size_t numel = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            rec.shape.push_back(r.uint<std::uint32_t>("shape"));
            numel *= rec.shape.back();
        }
        rec.values.reserve(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            rec.values.push_back(r.f32("tensor values"));
        }
        ckpt.tensors.push_back(std::move(rec));
    }
    if (!r.at_end()) {
        r.fail("trailing bytes after the last tensor");
    }
    return ckpt;
}

void load_parameters(const PluginModel& model, const Checkpoint& ckpt) {
    std::map<std::string, const TensorRecord*> by_name;
    for (const auto& rec : ckpt.tensors) {
        by_name[rec.name] = &rec;
    }
    const auto params = model.parameters();
    for (const auto& p : params) {
        const auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            throw FormatError("checkpoint lacks tensor " + p.name);
        }
        if (it->second->shape != p.tensor.shape()) {
            throw FormatError("checkpoint tensor " + p.name + " has shape " +
                              shape_str(it->second->shape) + ", model expects " +
                              shape_str(p.tensor.shape()));
        }
    }
    if (by_name.size() != params.size()) {
        throw FormatError("checkpoint holds " + std::to_string(by_name.size()) +
                          " tensors, model has " + std::to_string(params.size()));
    }
    for (const auto& p : params) {
        auto tensor = p.tensor;
        const auto& values = by_name.at(p.name)->values;
        std::copy(values.begin(), values.end(), tensor.data().begin());
    }
}

LoadedModel load_model(const std::filesystem::path& path) {
    auto ckpt = read_checkpoint(path);
    RunConfig cfg;
    ensemble::VariantId variant;
    try {
        cfg = RunConfig::parse(ckpt.config_json);
        cfg.validate();
        variant = ensemble::parse_variant(ckpt.meta.variant);
    } catch (const ConfigError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    LoadedModel loaded{cfg, variant, ckpt.meta, PluginModel(cfg.model_config(variant), 0)};
    load_parameters(loaded.model, ckpt);
    return loaded;
}

} // namespace fgwk
