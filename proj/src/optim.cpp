#include "fgwk/optim.hpp"

#include <cmath>

#include "fgwk/errors.hpp"

namespace fgwk::optim {

namespace {

void check_sizes(const char* op, std::size_t w, std::size_t other, const char* what) {
    if (w != other) {
        throw ContractError(std::string(op) + ": parameter has " + std::to_string(w) +
                            " elements but " + what + " has " + std::to_string(other));
    }
}

Real sign(double v) { return v > 0.0 ? Real(1) : (v < 0.0 ? Real(-1) : Real(0)); }

void check_unit_interval(const char* name, double v) {
    if (!(v >= 0.0 && v < 1.0)) {
        throw ConfigError(std::string(name) + " must lie in [0, 1), got " + std::to_string(v));
    }
}

} // namespace

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "lion"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "sgd") {
        return OptimizerKind::Sgd;
    }
    if (name == "lion") {
        return OptimizerKind::Lion;
    }
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd or lion)");
}

void LionConfig::validate() const {
    if (!(lr > 0.0)) {
        throw ConfigError("lion lr must be positive");
    }
    check_unit_interval("beta1", beta1);
    check_unit_interval("beta2", beta2);
    if (weight_decay < 0.0) {
        throw ConfigError("weight_decay must be non-negative");
    }
}

void SgdConfig::validate() const {
    if (!(lr > 0.0)) {
        throw ConfigError("sgd lr must be positive");
    }
    check_unit_interval("momentum", momentum);
    if (weight_decay < 0.0) {
        throw ConfigError("weight_decay must be non-negative");
    }
    if (clip_norm < 0.0) {
        throw ConfigError("clip_norm must be non-negative");
    }
}

void lion_update(std::span<const Real> w, std::span<const Real> g, std::span<const Real> mu,
                 const LionConfig& cfg, std::span<Real> update) {
    check_sizes("lion_update", w.size(), g.size(), "gradient");
    check_sizes("lion_update", w.size(), mu.size(), "momentum");
    check_sizes("lion_update", w.size(), update.size(), "update");
    const auto lr = static_cast<Real>(cfg.lr);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double c = cfg.beta1 * mu[i] + (1.0 - cfg.beta1) * g[i];
        if (cfg.weight_decay == 0.0) {
            update[i] = lr * sign(c);
        } else {
            update[i] = static_cast<Real>(cfg.lr * (sign(c) + cfg.weight_decay * w[i]));
        }
    }
}

void lion_step(std::span<Real> w, std::span<const Real> g, std::span<Real> mu,
               const LionConfig& cfg) {
    std::vector<Real> update(w.size());
    lion_update(w, g, mu, cfg, update);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= update[i];
        mu[i] = static_cast<Real>(cfg.beta2 * mu[i] + (1.0 - cfg.beta2) * g[i]);
    }
}

void sgd_step(std::span<Real> w, std::span<const Real> g, std::span<Real> velocity,
              const SgdConfig& cfg) {
    check_sizes("sgd_step", w.size(), g.size(), "gradient");
    const bool use_momentum = cfg.momentum > 0.0;
    if (use_momentum) {
        check_sizes("sgd_step", w.size(), velocity.size(), "velocity");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        double d = g[i];
        if (cfg.weight_decay != 0.0) {
            d += cfg.weight_decay * w[i];
        }
        if (use_momentum) {
            velocity[i] = static_cast<Real>(cfg.momentum * velocity[i] + d);
            d = velocity[i];
        }
        w[i] = static_cast<Real>(w[i] - cfg.lr * d);
    }
}

Optimizer::Optimizer(ParameterList params) : params_(std::move(params)) {
    for (const auto& p : params_) {
        if (!p.tensor.is_leaf() || !p.tensor.requires_grad()) {
            throw ContractError("optimizer parameter '" + p.name + "' is not a trainable leaf");
        }
    }
}

void Optimizer::zero_grads() const { fgwk::zero_grads(params_); }

std::size_t Optimizer::state_size() const { return state_.size(); }

Lion::Lion(ParameterList params, const LionConfig& cfg) : Optimizer(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (const auto& p : params_) {
        state_.emplace_back(p.tensor.numel(), Real(0));
    }
}

void Lion::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor t = params_[i].tensor;
        const auto g = t.grad();
        lion_step(t.data(), g, state_[i], cfg_);
    }
    ++steps_;
}

Sgd::Sgd(ParameterList params, const SgdConfig& cfg) : Optimizer(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.momentum > 0.0) {
        for (const auto& p : params_) {
            state_.emplace_back(p.tensor.numel(), Real(0));
        }
    }
}

void Sgd::step() {
    std::vector<std::vector<Real>> grads;
    double squared = 0.0;
    for (const auto& p : params_) {
        grads.push_back(p.tensor.grad());
        for (auto v : grads.back()) {
            squared += static_cast<double>(v) * v;
        }
    }
    const double norm = std::sqrt(squared);
    if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) {
        const auto factor = static_cast<Real>(cfg_.clip_norm / norm);
        for (auto& g : grads) {
            for (auto& v : g) {
                v *= factor;
            }
        }
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor t = params_[i].tensor;
        const auto& g = grads[i];
        std::span<Real> velocity;
        if (!state_.empty()) {
            velocity = state_[i];
        }
        sgd_step(t.data(), g, velocity, cfg_);
    }
    ++steps_;
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& cfg, ParameterList params) {
    if (cfg.kind == OptimizerKind::Lion) {
        return std::make_unique<Lion>(std::move(params), cfg.lion());
    }
    return std::make_unique<Sgd>(std::move(params), cfg.sgd());
}

} // namespace fgwk::optim
