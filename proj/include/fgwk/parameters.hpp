#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fgwk/rng.hpp"
#include "fgwk/tensor.hpp"

namespace fgwk {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

// Leaf tensor requiring grad, uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Leaf tensor requiring grad, uniform in +-sqrt(6 / fan_in); for layers
// followed by relu.
Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Leaf tensor requiring grad, all zeros.
Tensor zero_parameter(Shape shape);

void zero_grads(const ParameterList& params);

// Prepends "<prefix>." to every name.
void append_prefixed(ParameterList& into, const std::string& prefix, const ParameterList& params);

} // namespace fgwk
