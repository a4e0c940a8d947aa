#include "fgwk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fgwk/errors.hpp"

namespace fgwk {

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
    for (auto extent : shape) {
        if (extent == 0) {
            throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
        }
    }
}

} // namespace

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "x" : "") << shape[i];
    }
    out << ']';
    return out.str();
}

namespace detail {

std::span<Real> grad_buffer(TensorImpl& t) {
    if (t.grad.size() != t.data.size()) {
        t.grad.assign(t.data.size(), 0.0f);
    }
    return t.grad;
}

void accumulate_grad(TensorImpl& t, std::span<const Real> values) {
    auto g = grad_buffer(t);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += values[i];
    }
}

template <typename Range>
Tensor make_result_impl(Shape shape, std::vector<Real> values, const Range& inputs,
                        BackwardFn backward) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& in : inputs) {
            any = any || (in.defined() && in.requires_grad());
        }
        if (any) {
            auto node = std::make_shared<Node>();
            for (const auto& in : inputs) {
                node->inputs.push_back(in.impl());
            }
            node->backward = std::move(backward);
            impl->node = std::move(node);
            impl->requires_grad = true;
        }
    }
    return Tensor(std::move(impl));
}

Tensor make_result(Shape shape, std::vector<Real> values, std::initializer_list<Tensor> inputs,
                   BackwardFn backward) {
    return make_result_impl(std::move(shape), std::move(values), inputs, std::move(backward));
}

Tensor make_result(Shape shape, std::vector<Real> values, const std::vector<Tensor>& inputs,
                   BackwardFn backward) {
    return make_result_impl(std::move(shape), std::move(values), inputs, std::move(backward));
}

} // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
    check_shape(shape);
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->data.assign(shape_numel(shape), value);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
    check_shape(shape);
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_str(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= impl_->shape.size()) {
        throw IndexError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(impl_->shape));
    }
    return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<Real> Tensor::data() { return impl_->data; }
std::span<const Real> Tensor::data() const { return impl_->data; }

Real Tensor::item() const {
    if (numel() != 1) {
        throw ContractError("item() on tensor of shape " + shape_str(shape()));
    }
    return impl_->data[0];
}

Real Tensor::at(std::initializer_list<std::size_t> index) const {
    const auto& shape = impl_->shape;
    if (index.size() != shape.size()) {
        throw IndexError("index rank mismatch for " + shape_str(shape));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape[axis]) {
            throw IndexError("index out of range for " + shape_str(shape));
        }
        flat = flat * shape[axis] + i;
        ++axis;
    }
    return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
    if (!is_leaf()) {
        throw ContractError("requires_grad can only be changed on leaf tensors");
    }
    impl_->requires_grad = flag;
}

bool Tensor::has_grad() const { return impl_->grad.size() == impl_->data.size(); }

std::vector<Real> Tensor::grad() const {
    if (!has_grad()) {
        return std::vector<Real>(numel(), 0.0f);
    }
    return impl_->grad;
}

std::span<Real> Tensor::grad_span() { return detail::grad_buffer(*impl_); }

void Tensor::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

bool Tensor::is_leaf() const { return impl_->node == nullptr; }

Tensor Tensor::clone() const {
    auto t = from(shape(), impl_->data, false);
    t.impl_->requires_grad = is_leaf() && impl_->requires_grad;
    return t;
}

Tensor Tensor::detach() const { return from(shape(), impl_->data, false); }

void Tensor::backward() const {
    if (numel() != 1) {
        throw ContractError("backward() needs a scalar root, got shape " + shape_str(shape()));
    }
    if (!impl_->requires_grad) {
        return;
    }
    if (!impl_->node) {
        detail::accumulate_grad(*impl_, std::vector<Real>{1.0f});
        return;
    }

    // Iterative post-order DFS gives a topological order (inputs first).
    std::vector<detail::TensorImpl*> order;
    std::unordered_set<detail::TensorImpl*> visited;
    std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
    stack.emplace_back(impl_.get(), 0);
    visited.insert(impl_.get());
    while (!stack.empty()) {
        auto& [t, next] = stack.back();
        if (t->node && next < t->node->inputs.size()) {
            auto* in = t->node->inputs[next++].get();
            if (in->requires_grad && !visited.contains(in)) {
                visited.insert(in);
                stack.emplace_back(in, 0);
            }
        } else {
            order.push_back(t);
            stack.pop_back();
        }
    }

    for (auto* t : order) {
        if (t->node) {
            t->grad.assign(t->data.size(), 0.0f);
        }
    }
    impl_->grad[0] = 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->node) {
            (*it)->node->backward(**it);
        }
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

} // namespace fgwk
