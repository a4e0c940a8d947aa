#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fgwk/parameters.hpp"

namespace fgwk::optim {

enum class OptimizerKind { Sgd, Lion };

std::string to_string(OptimizerKind kind);
// "sgd" or "lion"; ConfigError otherwise.
OptimizerKind parse_optimizer_kind(const std::string& name);

struct LionConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 0.0;

    // Learning rate used for the full-size model.
    static LionConfig full_scale() { return {5e-6, 0.9, 0.99, 0.0}; }
    void validate() const;
};

struct SgdConfig {
    double lr = 5e-4;
    double momentum = 0.0;
    double weight_decay = 0.0;
    // Cap on the global L2 norm of the gradients, rescaled before the
    // update; 0 disables.
    double clip_norm = 0.0;

    static SgdConfig full_scale() { return {5e-4, 0.0, 0.0}; }
    void validate() const;
};

// The amount LION subtracts from w: lr * (sign(c) + weight_decay * w) with
// c = beta1 * mu + (1 - beta1) * g and sign(0) = 0. Written into `update`.
void lion_update(std::span<const Real> w, std::span<const Real> g, std::span<const Real> mu,
                 const LionConfig& cfg, std::span<Real> update);

// One LION step on a single tensor: w -= update, then
// mu = beta2 * mu + (1 - beta2) * g. Shape mismatch throws ContractError.
void lion_step(std::span<Real> w, std::span<const Real> g, std::span<Real> mu,
               const LionConfig& cfg);

// w -= lr * (g + weight_decay * w), through a velocity buffer when
// momentum > 0 (v = momentum * v + g'; w -= lr * v). `velocity` may be empty
// when momentum is 0.
void sgd_step(std::span<Real> w, std::span<const Real> g, std::span<Real> velocity,
              const SgdConfig& cfg);

class Optimizer {
public:
    explicit Optimizer(ParameterList params);
    virtual ~Optimizer() = default;

    // Applies one update from the gradients currently held by the parameters.
    virtual void step() = 0;
    void zero_grads() const;

    // Auxiliary buffers per parameter tensor.
    virtual std::size_t buffers_per_parameter() const = 0;
    std::size_t state_size() const;
    std::size_t steps() const { return steps_; }
    const ParameterList& parameters() const { return params_; }

protected:
    ParameterList params_;
    std::vector<std::vector<Real>> state_;
    std::size_t steps_ = 0;
};

class Lion : public Optimizer {
public:
    Lion(ParameterList params, const LionConfig& cfg);
    void step() override;
    std::size_t buffers_per_parameter() const override { return 1; }
    const LionConfig& config() const { return cfg_; }
    std::span<const Real> momentum(std::size_t index) const { return state_.at(index); }

private:
    LionConfig cfg_;
};

class Sgd : public Optimizer {
public:
    Sgd(ParameterList params, const SgdConfig& cfg);
    void step() override;
    std::size_t buffers_per_parameter() const override { return cfg_.momentum > 0.0 ? 1 : 0; }
    const SgdConfig& config() const { return cfg_; }

private:
    SgdConfig cfg_;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Lion;
    double lr = 1e-4;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double momentum = 0.0;
    double clip_norm = 0.0; // SGD only

    LionConfig lion() const { return {lr, beta1, beta2, weight_decay}; }
    SgdConfig sgd() const { return {lr, momentum, weight_decay, clip_norm}; }
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& cfg, ParameterList params);

} // namespace fgwk::optim
