#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fgwk {

// Element type of every tensor. A double build exists for gradient checks
// whose finite differences need more than float32 resolution.
#ifdef FGWK_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

namespace detail {

struct Node;

struct TensorImpl {
    Shape shape;
    std::vector<Real> data;
    // Empty until the first gradient reaches this tensor.
    std::vector<Real> grad;
    bool requires_grad = false;
    // Null for leaves.
    std::shared_ptr<Node> node;
};

using BackwardFn = std::function<void(const TensorImpl& out)>;

struct Node {
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    // Reads out.grad and accumulates into the inputs that require grad.
    BackwardFn backward;
};

// Adds `values` into t.grad, allocating it on first use.
void accumulate_grad(TensorImpl& t, std::span<const Real> values);
std::span<Real> grad_buffer(TensorImpl& t);

} // namespace detail

// Dense row-major float32 array with optional reverse-mode gradient.
//
// Tensor is a shared handle: copies alias the same storage, which is how
// parameters are shared between a model and its optimizer. Use clone() for
// an independent copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, Real value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
    static Tensor scalar(Real value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;

    std::span<Real> data();
    std::span<const Real> data() const;
    Real item() const;
    Real at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const;
    void set_requires_grad(bool flag);
    bool has_grad() const;
    // Gradient values; all zeros if nothing has been accumulated yet.
    std::vector<Real> grad() const;
    std::span<Real> grad_span();
    void zero_grad();

    // Reverse-mode sweep from this scalar. Non-leaf gradients are recomputed
    // from scratch on every call; leaf gradients accumulate.
    void backward() const;

    // New leaf sharing nothing with this tensor.
    Tensor clone() const;
    // New leaf holding the same values, cut from the graph.
    Tensor detach() const;

    bool is_leaf() const;
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    // Used by op implementations.
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_mode_enabled();

namespace detail {

// Builds an op result; records a graph node when grad mode is on and any
// input requires grad.
Tensor make_result(Shape shape, std::vector<Real> values, std::initializer_list<Tensor> inputs,
                   BackwardFn backward);
Tensor make_result(Shape shape, std::vector<Real> values, const std::vector<Tensor>& inputs,
                   BackwardFn backward);

} // namespace detail

} // namespace fgwk
