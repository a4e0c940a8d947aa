#include "fgwk/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "fgwk/errors.hpp"

namespace fgwk::ops {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

using detail::TensorImpl;

TensorImpl& input(const TensorImpl& out, std::size_t i) { return *out.node->inputs[i]; }

std::span<Real> grad_of(TensorImpl& t) { return detail::grad_buffer(t); }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (!t.defined() || t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             " tensor, got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

// C (+)= op(A) * op(B), all row-major.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
    const auto M = static_cast<Eigen::Index>(m);
    const auto N = static_cast<Eigen::Index>(n);
    const auto K = static_cast<Eigen::Index>(k);
    MutMap C(c, M, N);
    auto run = [&](const auto& lhs, const auto& rhs) {
        if (accumulate) {
            C.noalias() += lhs * rhs;
        } else {
            C.noalias() = lhs * rhs;
        }
    };
    if (!trans_a && !trans_b) {
        run(ConstMap(a, M, K), ConstMap(b, K, N));
    } else if (trans_a && !trans_b) {
        run(ConstMap(a, K, M).transpose(), ConstMap(b, K, N));
    } else if (!trans_a && trans_b) {
        run(ConstMap(a, M, K), ConstMap(b, N, K).transpose());
    } else {
        run(ConstMap(a, K, M).transpose(), ConstMap(b, N, K).transpose());
    }
}

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
    if (axis >= shape.size()) {
        throw IndexError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(shape));
    }
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) {
        s.outer *= shape[i];
    }
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        s.inner *= shape[i];
    }
    return s;
}

struct ConvGeometry {
    std::size_t channels, height, width;
    std::size_t out_channels, kernel, stride, pad;
    std::size_t out_height, out_width;
};

void im2col(const ConvGeometry& g, const Real* x, Real* cols) {
    const std::size_t plane = g.out_height * g.out_width;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                Real* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * plane;
                for (std::size_t oy = 0; oy < g.out_height; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    Real* dst = row + oy * g.out_width;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
                        std::fill(dst, dst + g.out_width, 0.0f);
                        continue;
                    }
                    const Real* src = x + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                        static_cast<std::ptrdiff_t>(g.pad);
                        dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width))
                                      ? 0.0f
                                      : src[ix];
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeometry& g, const Real* cols, Real* dx) {
    const std::size_t plane = g.out_height * g.out_width;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                const Real* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * plane;
                for (std::size_t oy = 0; oy < g.out_height; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
                        continue;
                    }
                    Real* dst = dx + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    const Real* src = row + oy * g.out_width;
                    for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                        static_cast<std::ptrdiff_t>(g.pad);
                        if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width)) {
                            dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<Real> out(m * n);
    gemm(false, false, m, n, k, a.data().data(), b.data().data(), out.data(), false);
    return detail::make_result({m, n}, std::move(out), {a, b}, [m, k, n](const TensorImpl& o) {
        auto& ta = input(o, 0);
        auto& tb = input(o, 1);
        if (ta.requires_grad) {
            gemm(false, true, m, k, n, o.grad.data(), tb.data.data(), grad_of(ta).data(), true);
        }
        if (tb.requires_grad) {
            gemm(true, false, k, n, m, ta.data.data(), o.grad.data(), grad_of(tb).data(), true);
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<Real> out(a.numel());
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] + y[i];
    }
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](const TensorImpl& o) {
        for (std::size_t i = 0; i < 2; ++i) {
            if (input(o, i).requires_grad) {
                detail::accumulate_grad(input(o, i), o.grad);
            }
        }
    });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
    require_rank(a, 2, "add_row_bias");
    require_rank(bias, 1, "add_row_bias");
    if (bias.dim(0) != a.dim(1)) {
        throw DimensionError("add_row_bias: bias " + shape_str(bias.shape()) +
                             " does not match rows of " + shape_str(a.shape()));
    }
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<Real> out(a.data().begin(), a.data().end());
    auto b = bias.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] += b[c];
        }
    }
    return detail::make_result(a.shape(), std::move(out), {a, bias}, [rows, cols](const TensorImpl& o) {
        if (input(o, 0).requires_grad) {
            detail::accumulate_grad(input(o, 0), o.grad);
        }
        if (input(o, 1).requires_grad) {
            auto g = grad_of(input(o, 1));
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    g[c] += o.grad[r * cols + c];
                }
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<Real> out(a.numel());
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] * y[i];
    }
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](const TensorImpl& o) {
        auto& ta = input(o, 0);
        auto& tb = input(o, 1);
        if (ta.requires_grad) {
            auto g = grad_of(ta);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i] * tb.data[i];
            }
        }
        if (tb.requires_grad) {
            auto g = grad_of(tb);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i] * ta.data[i];
            }
        }
    });
}

Tensor scale(const Tensor& a, Real factor) {
    std::vector<Real> out(a.data().begin(), a.data().end());
    for (auto& v : out) {
        v *= factor;
    }
    return detail::make_result(a.shape(), std::move(out), {a}, [factor](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += factor * o.grad[i];
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<Real> out(a.data().begin(), a.data().end());
    for (auto& v : out) {
        v = v > 0.0f ? v : 0.0f;
    }
    return detail::make_result(a.shape(), std::move(out), {a}, [](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (o.data[i] > 0.0f) {
                g[i] += o.grad[i];
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (Real v : a.data()) {
        total += v;
    }
    return detail::make_result({1}, {static_cast<Real>(total)}, {a}, [](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (auto& v : g) {
            v += o.grad[0];
        }
    });
}

Tensor mean(const Tensor& a) {
    return scale(sum(a), 1.0f / static_cast<Real>(a.numel()));
}

Tensor mean_rows(const Tensor& a) {
    require_rank(a, 2, "mean_rows");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<double> acc(cols, 0.0);
    auto x = a.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            acc[c] += x[r * cols + c];
        }
    }
    std::vector<Real> out(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        out[c] = static_cast<Real>(acc[c] / static_cast<double>(rows));
    }
    return detail::make_result({cols}, std::move(out), {a}, [rows, cols](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        const Real inv = 1.0f / static_cast<Real>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += o.grad[c] * inv;
            }
        }
    });
}

Tensor spatial_mean(const Tensor& x) {
    require_rank(x, 3, "spatial_mean");
    const std::size_t channels = x.dim(0);
    const std::size_t plane = x.dim(1) * x.dim(2);
    return mean_rows(transpose(reshape(x, {channels, plane})));
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                             shape_str(shape));
    }
    std::vector<Real> out(a.data().begin(), a.data().end());
    return detail::make_result(std::move(shape), std::move(out), {a}, [](const TensorImpl& o) {
        detail::accumulate_grad(input(o, 0), o.grad);
    });
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<Real> out(a.numel());
    auto x = a.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    return detail::make_result({cols, rows}, std::move(out), {a}, [rows, cols](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += o.grad[c * rows + r];
            }
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) {
        throw ContractError("concat: no tensors given");
    }
    const Shape& first = parts.front().shape();
    const auto base = split_axis(first, axis, "concat");
    std::vector<std::size_t> extents;
    std::size_t total = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) {
            ok = (i == axis) || s[i] == first[i];
        }
        if (!ok) {
            throw DimensionError("concat: " + shape_str(s) + " incompatible with " +
                                 shape_str(first) + " along axis " + std::to_string(axis));
        }
        extents.push_back(s[axis]);
        total += s[axis];
    }
    Shape out_shape = first;
    out_shape[axis] = total;
    std::vector<Real> out(shape_numel(out_shape));
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        auto src = parts[p].data();
        const std::size_t chunk = extents[p] * base.inner;
        for (std::size_t o = 0; o < base.outer; ++o) {
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                        out.begin() + static_cast<std::ptrdiff_t>(o * total * base.inner + offset));
        }
        offset += chunk;
    }
    const std::size_t outer = base.outer, inner = base.inner;
    return detail::make_result(
        std::move(out_shape), std::move(out), parts, [extents, total, outer, inner](const TensorImpl& o) {
            std::size_t offset = 0;
            for (std::size_t p = 0; p < extents.size(); ++p) {
                const std::size_t chunk = extents[p] * inner;
                auto& t = input(o, p);
                if (t.requires_grad) {
                    auto g = grad_of(t);
                    for (std::size_t q = 0; q < outer; ++q) {
                        const Real* src = o.grad.data() + q * total * inner + offset;
                        for (std::size_t i = 0; i < chunk; ++i) {
                            g[q * chunk + i] += src[i];
                        }
                    }
                }
                offset += chunk;
            }
        });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    require_rank(a, 2, "gather_rows");
    if (rows.empty()) {
        throw ContractError("gather_rows: empty index set");
    }
    const std::size_t n = a.dim(0), width = a.dim(1);
    std::vector<std::size_t> index(rows.begin(), rows.end());
    std::vector<Real> out(index.size() * width);
    auto x = a.data();
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (index[r] >= n) {
            throw IndexError("gather_rows: row " + std::to_string(index[r]) + " out of range for " +
                             shape_str(a.shape()));
        }
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(index[r] * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(r * width));
    }
    const std::size_t k = index.size();
    return detail::make_result({k, width}, std::move(out), {a},
                               [index = std::move(index), width](const TensorImpl& o) {
                                   auto g = grad_of(input(o, 0));
                                   for (std::size_t r = 0; r < index.size(); ++r) {
                                       for (std::size_t c = 0; c < width; ++c) {
                                           g[index[r] * width + c] += o.grad[r * width + c];
                                       }
                                   }
                               });
}

Tensor pick(const Tensor& a, std::size_t flat_index) {
    if (flat_index >= a.numel()) {
        throw IndexError("pick: index " + std::to_string(flat_index) + " out of range for " +
                         shape_str(a.shape()));
    }
    return detail::make_result({1}, {a.data()[flat_index]}, {a}, [flat_index](const TensorImpl& o) {
        grad_of(input(o, 0))[flat_index] += o.grad[0];
    });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    const auto s = split_axis(x.shape(), axis, "softmax");
    std::vector<Real> out(x.numel());
    auto in = x.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.extent * s.inner + i;
            Real peak = -std::numeric_limits<Real>::infinity();
            for (std::size_t d = 0; d < s.extent; ++d) {
                peak = std::max(peak, in[base + d * s.inner]);
            }
            double total = 0.0;
            for (std::size_t d = 0; d < s.extent; ++d) {
                total += std::exp(static_cast<double>(in[base + d * s.inner] - peak));
            }
            for (std::size_t d = 0; d < s.extent; ++d) {
                out[base + d * s.inner] = static_cast<Real>(
                    std::exp(static_cast<double>(in[base + d * s.inner] - peak)) / total);
            }
        }
    }
    return detail::make_result(x.shape(), std::move(out), {x}, [s](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (std::size_t q = 0; q < s.outer; ++q) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = q * s.extent * s.inner + i;
                double dot = 0.0;
                for (std::size_t d = 0; d < s.extent; ++d) {
                    const auto at = base + d * s.inner;
                    dot += static_cast<double>(o.grad[at]) * o.data[at];
                }
                for (std::size_t d = 0; d < s.extent; ++d) {
                    const auto at = base + d * s.inner;
                    g[at] += static_cast<Real>(o.data[at] * (o.grad[at] - dot));
                }
            }
        }
    });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
    const auto s = split_axis(x.shape(), axis, "log_softmax");
    std::vector<Real> out(x.numel());
    auto in = x.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.extent * s.inner + i;
            Real peak = -std::numeric_limits<Real>::infinity();
            for (std::size_t d = 0; d < s.extent; ++d) {
                peak = std::max(peak, in[base + d * s.inner]);
            }
            double total = 0.0;
            for (std::size_t d = 0; d < s.extent; ++d) {
                total += std::exp(static_cast<double>(in[base + d * s.inner] - peak));
            }
            const double log_total = std::log(total) + peak;
            for (std::size_t d = 0; d < s.extent; ++d) {
                out[base + d * s.inner] =
                    static_cast<Real>(static_cast<double>(in[base + d * s.inner]) - log_total);
            }
        }
    }
    return detail::make_result(x.shape(), std::move(out), {x}, [s](const TensorImpl& o) {
        auto g = grad_of(input(o, 0));
        for (std::size_t q = 0; q < s.outer; ++q) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = q * s.extent * s.inner + i;
                double total = 0.0;
                for (std::size_t d = 0; d < s.extent; ++d) {
                    total += o.grad[base + d * s.inner];
                }
                for (std::size_t d = 0; d < s.extent; ++d) {
                    const auto at = base + d * s.inner;
                    g[at] += static_cast<Real>(o.grad[at] -
                                                std::exp(static_cast<double>(o.data[at])) * total);
                }
            }
        }
    });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    require_rank(logits, 2, "cross_entropy");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != batch) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for logits " + shape_str(logits.shape()));
    }
    std::vector<int> target(labels.begin(), labels.end());
    for (int label : target) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw IndexError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                             std::to_string(classes) + ")");
        }
    }
    auto z = logits.data();
    std::vector<Real> probs(z.size());
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const Real* row = z.data() + b * classes;
        const Real peak = *std::max_element(row, row + classes);
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            total += std::exp(static_cast<double>(row[c] - peak));
        }
        for (std::size_t c = 0; c < classes; ++c) {
            probs[b * classes + c] =
                static_cast<Real>(std::exp(static_cast<double>(row[c] - peak)) / total);
        }
        loss += std::log(total) + peak - row[target[b]];
    }
    loss /= static_cast<double>(batch);
    return detail::make_result(
        {1}, {static_cast<Real>(loss)}, {logits},
        [probs = std::move(probs), target = std::move(target), batch, classes](const TensorImpl& o) {
            auto g = grad_of(input(o, 0));
            const Real factor = o.grad[0] / static_cast<Real>(batch);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t c = 0; c < classes; ++c) {
                    const Real onehot = static_cast<int>(c) == target[b] ? 1.0f : 0.0f;
                    g[b * classes + c] += factor * (probs[b * classes + c] - onehot);
                }
            }
        });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad) {
    require_rank(x, 3, "conv2d");
    require_rank(weight, 4, "conv2d");
    if (stride == 0) {
        throw ContractError("conv2d: stride must be at least 1");
    }
    if (weight.dim(1) != x.dim(0) || weight.dim(2) != weight.dim(3)) {
        throw DimensionError("conv2d: weight " + shape_str(weight.shape()) +
                             " incompatible with input " + shape_str(x.shape()));
    }
    ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), weight.dim(0), weight.dim(2), stride, pad, 0, 0};
    if (g.kernel > g.height + 2 * pad || g.kernel > g.width + 2 * pad) {
        throw DimensionError("conv2d: kernel " + shape_str(weight.shape()) +
                             " larger than padded input " + shape_str(x.shape()));
    }
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
        throw DimensionError("conv2d: bias " + shape_str(bias.shape()) + " for " +
                             std::to_string(g.out_channels) + " output channels");
    }
    g.out_height = (g.height + 2 * pad - g.kernel) / stride + 1;
    g.out_width = (g.width + 2 * pad - g.kernel) / stride + 1;
    const std::size_t plane = g.out_height * g.out_width;
    const std::size_t patch = g.channels * g.kernel * g.kernel;

    auto cols = std::make_shared<std::vector<Real>>(patch * plane);
    im2col(g, x.data().data(), cols->data());
    std::vector<Real> out(g.out_channels * plane);
    gemm(false, false, g.out_channels, plane, patch, weight.data().data(), cols->data(), out.data(),
         false);
    if (bias.defined()) {
        auto b = bias.data();
        for (std::size_t c = 0; c < g.out_channels; ++c) {
            for (std::size_t p = 0; p < plane; ++p) {
                out[c * plane + p] += b[c];
            }
        }
    }

    const bool has_bias = bias.defined();
    std::vector<Tensor> inputs{x, weight};
    if (has_bias) {
        inputs.push_back(bias);
    }
    return detail::make_result(
        {g.out_channels, g.out_height, g.out_width}, std::move(out), inputs,
        [g, cols, has_bias, plane, patch](const TensorImpl& o) {
            auto& tx = input(o, 0);
            auto& tw = input(o, 1);
            if (tw.requires_grad) {
                gemm(false, true, g.out_channels, patch, plane, o.grad.data(), cols->data(),
                     grad_of(tw).data(), true);
            }
            if (tx.requires_grad) {
                std::vector<Real> dcols(patch * plane);
                gemm(true, false, patch, plane, g.out_channels, tw.data.data(), o.grad.data(),
                     dcols.data(), false);
                col2im_add(g, dcols.data(), grad_of(tx).data());
            }
            if (has_bias && input(o, 2).requires_grad) {
                auto gb = grad_of(input(o, 2));
                for (std::size_t c = 0; c < g.out_channels; ++c) {
                    double total = 0.0;
                    for (std::size_t p = 0; p < plane; ++p) {
                        total += o.grad[c * plane + p];
                    }
                    gb[c] += static_cast<Real>(total);
                }
            }
        });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t pad) {
    return conv2d(x, weight, Tensor(), stride, pad);
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    return add_row_bias(matmul(x, weight), bias);
}

} // namespace fgwk::ops
