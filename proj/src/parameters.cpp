#include "fgwk/parameters.hpp"

#include <cmath>

namespace fgwk {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<Real> values(shape_numel(shape));
    for (auto& v : values) {
        v = static_cast<Real>(rng.uniform(-limit, limit));
    }
    return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<Real> values(shape_numel(shape));
    for (auto& v : values) {
        v = static_cast<Real>(rng.uniform(-limit, limit));
    }
    return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor zero_parameter(Shape shape) { return Tensor::zeros(std::move(shape), true); }

void zero_grads(const ParameterList& params) {
    for (const auto& p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
}

void append_prefixed(ParameterList& into, const std::string& prefix, const ParameterList& params) {
    for (const auto& p : params) {
        into.push_back({prefix + "." + p.name, p.tensor});
    }
}

} // namespace fgwk
