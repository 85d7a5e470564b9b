#pragma once

#include "affect/common.hpp"

#include <vector>

namespace affect {
namespace nn {

/// Parameter tensor paired with its gradient accumulator.
template <typename S>
struct Tensor {
    MatX<S> value;
    MatX<S> grad;

    void resize(Eigen::Index rows, Eigen::Index cols) {
        value.setZero(rows, cols);
        grad.setZero(rows, cols);
    }
    void zero_grad() { grad.setZero(); }
};

/// Feature maps are stored as (frames * H * W) x channels matrices with rows
/// in frame-major, then row-major spatial order.
template <typename S>
struct Shape {
    int frames = 0, h = 0, w = 0;
    Eigen::Index rows() const { return static_cast<Eigen::Index>(frames) * h * w; }
};

/// Patch matrix for a 3x3 kernel: out(row, 9*c + k) = input(neighbor_k(row), c)
/// with zero padding of one pixel; rows follow the strided output raster.
template <typename S>
void im2col_3x3(const MatX<S>& input, const Shape<S>& in_shape, int stride, MatX<S>& col) {
    const int h = in_shape.h, w = in_shape.w, cin = static_cast<int>(input.cols());
    const int ho = (h + 2 - 3) / stride + 1;
    const int wo = (w + 2 - 3) / stride + 1;
    col.setZero(static_cast<Eigen::Index>(in_shape.frames) * ho * wo, 9 * cin);
    for (int f = 0; f < in_shape.frames; ++f) {
        const Eigen::Index in_base = static_cast<Eigen::Index>(f) * h * w;
        const Eigen::Index out_base = static_cast<Eigen::Index>(f) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                const Eigen::Index orow = out_base + static_cast<Eigen::Index>(oy) * wo + ox;
                for (int k = 0; k < 9; ++k) {
                    const int iy = oy * stride + k / 3 - 1;
                    const int ix = ox * stride + k % 3 - 1;
                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                    const Eigen::Index irow = in_base + static_cast<Eigen::Index>(iy) * w + ix;
                    for (int c = 0; c < cin; ++c) col(orow, 9 * c + k) = input(irow, c);
                }
            }
        }
    }
}

/// 3x3 convolution, zero padding 1. Weight layout matches im2col_3x3:
/// (9 * in_ch) x out_ch.
template <typename S>
struct Conv3x3 {
    int in_ch = 0, out_ch = 0, stride = 1;
    bool has_bias = false;
    Tensor<S> weight;
    Tensor<S> bias;

    void init(int in, int out, int stride_, bool bias_, Rng& rng) {
        in_ch = in;
        out_ch = out;
        stride = stride_;
        has_bias = bias_;
        weight.resize(9 * in, out);
        const double std = std::sqrt(2.0 / (9.0 * in));
        for (Eigen::Index i = 0; i < weight.value.size(); ++i)
            weight.value.data()[i] = static_cast<S>(rng.normal() * std);
        if (has_bias) bias.resize(out, 1);
    }

    Shape<S> out_shape(const Shape<S>& in) const {
        return {in.frames, (in.h + 2 - 3) / stride + 1, (in.w + 2 - 3) / stride + 1};
    }

    MatX<S> forward(const MatX<S>& x, const Shape<S>& in_shape) const {
        MatX<S> col;
        im2col_3x3(x, in_shape, stride, col);
        MatX<S> y = col * weight.value;
        if (has_bias) y.rowwise() += bias.value.col(0).transpose();
        return y;
    }

    /// Returns dInput; accumulates weight (and bias) gradients. `x` must be
    /// the same matrix passed to forward.
    MatX<S> backward(const MatX<S>& dy, const MatX<S>& x, const Shape<S>& in_shape) {
        MatX<S> col;
        im2col_3x3(x, in_shape, stride, col);
        weight.grad.noalias() += col.transpose() * dy;
        if (has_bias) bias.grad.col(0) += dy.colwise().sum().transpose();

        MatX<S> dcol = dy * weight.value.transpose();
        // col2im scatter-add, mirroring im2col_3x3's index walk.
        MatX<S> dx = MatX<S>::Zero(x.rows(), x.cols());
        const int h = in_shape.h, w = in_shape.w, cin = in_ch;
        const int ho = (h + 2 - 3) / stride + 1;
        const int wo = (w + 2 - 3) / stride + 1;
        for (int f = 0; f < in_shape.frames; ++f) {
            const Eigen::Index in_base = static_cast<Eigen::Index>(f) * h * w;
            const Eigen::Index out_base = static_cast<Eigen::Index>(f) * ho * wo;
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    const Eigen::Index orow = out_base + static_cast<Eigen::Index>(oy) * wo + ox;
                    for (int k = 0; k < 9; ++k) {
                        const int iy = oy * stride + k / 3 - 1;
                        const int ix = ox * stride + k % 3 - 1;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        const Eigen::Index irow = in_base + static_cast<Eigen::Index>(iy) * w + ix;
                        for (int c = 0; c < cin; ++c) dx(irow, c) += dcol(orow, 9 * c + k);
                    }
                }
            }
        }
        return dx;
    }
};

/// Spatial batch normalization over the rows of the feature matrix (all
/// frames and pixels of the batch), per channel.
template <typename S>
struct BatchNorm {
    Tensor<S> gamma, beta;
    VecX<S> running_mean, running_var;
    S momentum = S(0.1);
    S eps = S(1e-5);

    // cache
    MatX<S> xhat;
    VecX<S> inv_std;

    void init(int channels) {
        gamma.resize(channels, 1);
        gamma.value.setOnes();
        beta.resize(channels, 1);
        running_mean = VecX<S>::Zero(channels);
        running_var = VecX<S>::Ones(channels);
    }

    MatX<S> forward(const MatX<S>& x, bool train) {
        const S n = static_cast<S>(x.rows());
        const int c = static_cast<int>(x.cols());
        MatX<S> out(x.rows(), c);
        if (train) {
            VecX<S> mean = x.colwise().mean().transpose();
            VecX<S> var(c);
            xhat.resize(x.rows(), c);
            inv_std.resize(c);
            for (int j = 0; j < c; ++j) {
                auto centered = x.col(j).array() - mean(j);
                var(j) = centered.square().sum() / n;
                inv_std(j) = S(1) / std::sqrt(var(j) + eps);
                xhat.col(j) = centered * inv_std(j);
                out.col(j) = xhat.col(j) * gamma.value(j, 0) +
                             VecX<S>::Constant(x.rows(), beta.value(j, 0));
            }
            running_mean = (S(1) - momentum) * running_mean + momentum * mean;
            running_var = (S(1) - momentum) * running_var + momentum * var;
        } else {
            for (int j = 0; j < c; ++j) {
                const S istd = S(1) / std::sqrt(running_var(j) + eps);
                out.col(j) = (x.col(j).array() - running_mean(j)) * istd * gamma.value(j, 0) +
                             beta.value(j, 0);
            }
        }
        return out;
    }

    /// Activation recoverable from the cache: gamma * xhat + beta.
    S pre_activation(Eigen::Index row, int col) const {
        return gamma.value(col, 0) * xhat(row, col) + beta.value(col, 0);
    }

    MatX<S> backward(const MatX<S>& dy) {
        const S n = static_cast<S>(dy.rows());
        const int c = static_cast<int>(dy.cols());
        MatX<S> dx(dy.rows(), c);
        for (int j = 0; j < c; ++j) {
            gamma.grad(j, 0) += (dy.col(j).array() * xhat.col(j).array()).sum();
            beta.grad(j, 0) += dy.col(j).sum();
            // dx = inv_std/n * gamma * (n dxhat - sum(dxhat) - xhat * sum(dxhat .* xhat))
            auto dxhat = dy.col(j).array() * gamma.value(j, 0);
            const S sum_d = dxhat.sum();
            const S sum_dx = (dxhat * xhat.col(j).array()).sum();
            dx.col(j) =
                (dxhat * n - sum_d - xhat.col(j).array() * sum_dx) * (inv_std(j) / n);
        }
        return dx;
    }
};

/// 2x2 max pooling with stride 2. Argmax rows are cached for backward.
template <typename S>
struct MaxPool2 {
    std::vector<Eigen::Index> argmax;  // per (out_row * C + c): input row index
    Eigen::Index in_rows = 0;

    MatX<S> forward(const MatX<S>& x, const Shape<S>& in_shape, Shape<S>& out_shape) {
        const int h = in_shape.h, w = in_shape.w, c = static_cast<int>(x.cols());
        const int ho = h / 2, wo = w / 2;
        out_shape = {in_shape.frames, ho, wo};
        in_rows = x.rows();
        MatX<S> y(out_shape.rows(), c);
        argmax.assign(static_cast<size_t>(y.rows()) * c, 0);
        for (int f = 0; f < in_shape.frames; ++f) {
            const Eigen::Index ib = static_cast<Eigen::Index>(f) * h * w;
            const Eigen::Index ob = static_cast<Eigen::Index>(f) * ho * wo;
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const Eigen::Index orow = ob + static_cast<Eigen::Index>(oy) * wo + ox;
                    const Eigen::Index r00 = ib + static_cast<Eigen::Index>(2 * oy) * w + 2 * ox;
                    const Eigen::Index rows[4] = {r00, r00 + 1, r00 + w, r00 + w + 1};
                    for (int ch = 0; ch < c; ++ch) {
                        Eigen::Index best = rows[0];
                        S bv = x(rows[0], ch);
                        for (int k = 1; k < 4; ++k)
                            if (x(rows[k], ch) > bv) {
                                bv = x(rows[k], ch);
                                best = rows[k];
                            }
                        y(orow, ch) = bv;
                        argmax[static_cast<size_t>(orow) * c + ch] = best;
                    }
                }
        }
        return y;
    }

    MatX<S> backward(const MatX<S>& dy) const {
        const int c = static_cast<int>(dy.cols());
        MatX<S> dx = MatX<S>::Zero(in_rows, c);
        for (Eigen::Index r = 0; r < dy.rows(); ++r)
            for (int ch = 0; ch < c; ++ch)
                dx(argmax[static_cast<size_t>(r) * c + ch], ch) += dy(r, ch);
        return dx;
    }
};

template <typename S>
struct Dense {
    Tensor<S> weight;  // in x out
    Tensor<S> bias;    // out x 1
    MatX<S> input;     // cache

    void init(int in, int out, Rng& rng, double weight_scale = -1.0) {
        weight.resize(in, out);
        const double std = weight_scale > 0 ? weight_scale : std::sqrt(2.0 / in);
        for (Eigen::Index i = 0; i < weight.value.size(); ++i)
            weight.value.data()[i] = static_cast<S>(rng.normal() * std);
        bias.resize(out, 1);
    }

    MatX<S> forward(const MatX<S>& x, bool cache = true) {
        if (cache) input = x;
        return (x * weight.value).rowwise() + bias.value.col(0).transpose();
    }

    MatX<S> backward(const MatX<S>& dy) {
        weight.grad.noalias() += input.transpose() * dy;
        bias.grad.col(0) += dy.colwise().sum().transpose();
        return dy * weight.value.transpose();
    }
};

template <typename S>
MatX<S> relu(const MatX<S>& x) {
    return x.cwiseMax(S(0));
}

template <typename S>
MatX<S> relu_backward(const MatX<S>& dy, const MatX<S>& y) {
    return ((y.array() > S(0)).template cast<S>() * dy.array()).matrix();
}

template <typename S>
S logisticf(S x) {
    return x >= 0 ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

template <typename S>
MatX<S> sigmoid(const MatX<S>& x) {
    return x.unaryExpr([](S v) { return logisticf(v); });
}

template <typename S>
struct Adam {
    S lr;
    S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
    int64_t t = 0;
    std::vector<MatX<S>> m, v;

    explicit Adam(S lr_ = S(1e-3)) : lr(lr_) {}

    void init(const std::vector<Tensor<S>*>& params) {
        m.clear();
        v.clear();
        for (auto* p : params) {
            m.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
            v.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void step(const std::vector<Tensor<S>*>& params) {
        if (m.size() != params.size()) throw AffectError("Adam state/parameter mismatch");
        ++t;
        const S bc1 = S(1) - std::pow(beta1, static_cast<S>(t));
        const S bc2 = S(1) - std::pow(beta2, static_cast<S>(t));
        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            m[i] = beta1 * m[i] + (S(1) - beta1) * p.grad;
            v[i] = (beta2 * v[i].array() + (S(1) - beta2) * p.grad.array().square()).matrix();
            auto mhat = m[i].array() / bc1;
            auto vhat = v[i].array() / bc2;
            p.value.array() -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
};

template <typename S>
void zero_grads(const std::vector<Tensor<S>*>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace nn
}  // namespace affect
