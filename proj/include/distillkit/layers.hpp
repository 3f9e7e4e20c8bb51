#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "distillkit/errors.hpp"
#include "distillkit/rng.hpp"
#include "distillkit/tensor.hpp"

namespace distillkit {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct ParamView {
    std::string name;
    std::vector<int> shape;
    T* values = nullptr;
    T* grads = nullptr;
    std::size_t size = 0;
    bool weight_decay = false;  // true for conv/linear weights only
};

// Base of all differentiable layers. forward(cache=true) retains whatever
// backward needs; backward consumes the cache of the latest forward.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, bool cache) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out, bool param_grads) = 0;
    virtual void init(Rng&) {}
    virtual void collect(std::vector<ParamView<T>>&, const std::string&) {}
    virtual void zero_grads() {}
};

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(int in_ch, int out_ch, int k, int stride, int pad)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad) {
        weight_ = RowMat<T>::Zero(out_ch, in_ch * k * k);
        bias_ = VecX<T>::Zero(out_ch);
        grad_weight_ = RowMat<T>::Zero(out_ch, in_ch * k * k);
        grad_bias_ = VecX<T>::Zero(out_ch);
    }

    void init(Rng& rng) override {
        // He initialization: std = sqrt(2 / fan_in), zero bias.
        const double fan_in = static_cast<double>(in_ch_) * k_ * k_;
        const double std = std::sqrt(2.0 / fan_in);
        for (Eigen::Index i = 0; i < weight_.size(); ++i)
            weight_.data()[i] = static_cast<T>(std * rng.normal());
        bias_.setZero();
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        if (x.c != in_ch_)
            throw ContractError("conv: channel mismatch, got " + x.shape_str());
        const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        if (oh < 1 || ow < 1) throw ContractError("conv: input too small " + x.shape_str());
        Tensor<T> y(x.n, out_ch_, oh, ow);
        RowMat<T> cols(in_ch_ * k_ * k_, oh * ow);
        for (int n = 0; n < x.n; ++n) {
            im2col(x, n, oh, ow, cols);
            Eigen::Map<RowMat<T>> out(y.sample_ptr(n), out_ch_, oh * ow);
            out.noalias() = weight_ * cols;
            out.colwise() += bias_;
        }
        if (cache) x_cache_ = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
        const Tensor<T>& x = x_cache_;
        const int oh = gy.h, ow = gy.w;
        Tensor<T> gx(x.n, x.c, x.h, x.w);
        RowMat<T> cols(in_ch_ * k_ * k_, oh * ow);
        RowMat<T> gcols(in_ch_ * k_ * k_, oh * ow);
        for (int n = 0; n < x.n; ++n) {
            Eigen::Map<const RowMat<T>> g(gy.sample_ptr(n), out_ch_, oh * ow);
            if (param_grads) {
                im2col(x, n, oh, ow, cols);
                grad_weight_.noalias() += g * cols.transpose();
                grad_bias_ += g.rowwise().sum();
            }
            gcols.noalias() = weight_.transpose() * g;
            col2im(gcols, n, oh, ow, gx);
        }
        return gx;
    }

    void collect(std::vector<ParamView<T>>& out, const std::string& prefix) override {
        out.push_back({prefix + ".weight", {out_ch_, in_ch_, k_, k_}, weight_.data(),
                       grad_weight_.data(), static_cast<std::size_t>(weight_.size()), true});
        out.push_back({prefix + ".bias", {out_ch_}, bias_.data(), grad_bias_.data(),
                       static_cast<std::size_t>(bias_.size()), false});
    }

    void zero_grads() override {
        grad_weight_.setZero();
        grad_bias_.setZero();
    }

private:
    void im2col(const Tensor<T>& x, int n, int oh, int ow, RowMat<T>& cols) const {
        cols.setZero();
        for (int c = 0; c < in_ch_; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const int row = (c * k_ + ky) * k_ + kx;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            if (ix < 0 || ix >= x.w) continue;
                            cols(row, oy * ow + ox) = x.at(n, c, iy, ix);
                        }
                    }
                }
    }

    void col2im(const RowMat<T>& gcols, int n, int oh, int ow, Tensor<T>& gx) const {
        for (int c = 0; c < in_ch_; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const int row = (c * k_ + ky) * k_ + kx;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= gx.h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            if (ix < 0 || ix >= gx.w) continue;
                            gx.at(n, c, iy, ix) += gcols(row, oy * ow + ox);
                        }
                    }
                }
    }

    int in_ch_, out_ch_, k_, stride_, pad_;
    RowMat<T> weight_, grad_weight_;
    VecX<T> bias_, grad_bias_;
    Tensor<T> x_cache_;
};

// Per-sample, per-channel normalization over the spatial plane. A constant
// channel normalizes to zero (epsilon in the variance denominator). A 1x1
// plane has no spatial statistics and passes through the affine map only.
template <typename T>
class InstanceNorm final : public Layer<T> {
public:
    explicit InstanceNorm(int channels, double eps = 1e-5) : channels_(channels), eps_(eps) {
        gamma_ = VecX<T>::Ones(channels);
        shift_ = VecX<T>::Zero(channels);
        grad_gamma_ = VecX<T>::Zero(channels);
        grad_shift_ = VecX<T>::Zero(channels);
    }

    void init(Rng&) override {
        gamma_.setOnes();
        shift_.setZero();
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        if (x.c != channels_) throw ContractError("instance norm: channel mismatch");
        const int m = x.plane();
        passthrough_ = m == 1;
        Tensor<T> y(x.n, x.c, x.h, x.w);
        if (passthrough_) {
            for (int n = 0; n < x.n; ++n)
                for (int c = 0; c < x.c; ++c)
                    y.at(n, c, 0, 0) = gamma_[c] * x.at(n, c, 0, 0) + shift_[c];
            if (cache) xhat_ = x;
            return y;
        }
        if (cache) {
            xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
            inv_std_.assign(static_cast<std::size_t>(x.n) * x.c, T(0));
        }
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c) {
                const T* px = &x.at(n, c, 0, 0);
                double mu = 0;
                for (int i = 0; i < m; ++i) mu += px[i];
                mu /= m;
                double var = 0;
                for (int i = 0; i < m; ++i) {
                    const double d = px[i] - mu;
                    var += d * d;
                }
                var /= m;
                const double inv = 1.0 / std::sqrt(var + eps_);
                T* py = &y.at(n, c, 0, 0);
                T* ph = cache ? &xhat_.at(n, c, 0, 0) : nullptr;
                const double g = static_cast<double>(gamma_[c]);
                const double s = static_cast<double>(shift_[c]);
                for (int i = 0; i < m; ++i) {
                    const double xh = (px[i] - mu) * inv;
                    if (cache) ph[i] = static_cast<T>(xh);
                    py[i] = static_cast<T>(g * xh + s);
                }
                if (cache) inv_std_[static_cast<std::size_t>(n) * x.c + c] = static_cast<T>(inv);
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
        const int m = gy.plane();
        Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
        if (passthrough_) {
            for (int n = 0; n < gy.n; ++n)
                for (int c = 0; c < gy.c; ++c) {
                    if (param_grads) {
                        grad_gamma_[c] += gy.at(n, c, 0, 0) * xhat_.at(n, c, 0, 0);
                        grad_shift_[c] += gy.at(n, c, 0, 0);
                    }
                    gx.at(n, c, 0, 0) = gamma_[c] * gy.at(n, c, 0, 0);
                }
            return gx;
        }
        for (int n = 0; n < gy.n; ++n)
            for (int c = 0; c < gy.c; ++c) {
                const T* pg = &gy.at(n, c, 0, 0);
                const T* ph = &xhat_.at(n, c, 0, 0);
                const double inv = inv_std_[static_cast<std::size_t>(n) * gy.c + c];
                const double g = static_cast<double>(gamma_[c]);
                double sum_g = 0, sum_gh = 0;
                for (int i = 0; i < m; ++i) {
                    sum_g += pg[i];
                    sum_gh += static_cast<double>(pg[i]) * ph[i];
                }
                if (param_grads) {
                    grad_gamma_[c] += static_cast<T>(sum_gh);
                    grad_shift_[c] += static_cast<T>(sum_g);
                }
                const double mean_g = sum_g / m;
                const double mean_gh = sum_gh / m;
                T* px = &gx.at(n, c, 0, 0);
                for (int i = 0; i < m; ++i)
                    px[i] = static_cast<T>(g * inv * (pg[i] - mean_g - ph[i] * mean_gh));
            }
        return gx;
    }

    void collect(std::vector<ParamView<T>>& out, const std::string& prefix) override {
        out.push_back({prefix + ".gamma", {channels_}, gamma_.data(), grad_gamma_.data(),
                       static_cast<std::size_t>(channels_), false});
        out.push_back({prefix + ".shift", {channels_}, shift_.data(), grad_shift_.data(),
                       static_cast<std::size_t>(channels_), false});
    }

    void zero_grads() override {
        grad_gamma_.setZero();
        grad_shift_.setZero();
    }

private:
    int channels_;
    double eps_;
    bool passthrough_ = false;
    VecX<T> gamma_, shift_, grad_gamma_, grad_shift_;
    Tensor<T> xhat_;  // raw input in the 1x1 pass-through case
    std::vector<T> inv_std_;
};

template <typename T>
class ReLU final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        Tensor<T> y = x;
        for (T& v : y.data) v = v > T(0) ? v : T(0);
        if (cache) mask_ = x;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gy, bool) override {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i)
            if (mask_.data[i] <= T(0)) gx.data[i] = T(0);
        return gx;
    }

private:
    Tensor<T> mask_;
};

// Average pooling over k x k windows; zero padding counts toward the mean.
template <typename T>
class AvgPool final : public Layer<T> {
public:
    AvgPool(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        if (oh < 1 || ow < 1) throw ContractError("avgpool: input too small " + x.shape_str());
        Tensor<T> y(x.n, x.c, oh, ow);
        const double norm = 1.0 / (k_ * k_);
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = 0;
                        for (int ky = 0; ky < k_; ++ky) {
                            const int iy = oy * stride_ + ky - pad_;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < k_; ++kx) {
                                const int ix = ox * stride_ + kx - pad_;
                                if (ix < 0 || ix >= x.w) continue;
                                acc += x.at(n, c, iy, ix);
                            }
                        }
                        y.at(n, c, oy, ox) = static_cast<T>(acc * norm);
                    }
        if (cache) in_shape_ = {x.n, x.c, x.h, x.w};
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, bool) override {
        Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        const double norm = 1.0 / (k_ * k_);
        for (int n = 0; n < gy.n; ++n)
            for (int c = 0; c < gy.c; ++c)
                for (int oy = 0; oy < gy.h; ++oy)
                    for (int ox = 0; ox < gy.w; ++ox) {
                        const double g = gy.at(n, c, oy, ox) * norm;
                        for (int ky = 0; ky < k_; ++ky) {
                            const int iy = oy * stride_ + ky - pad_;
                            if (iy < 0 || iy >= gx.h) continue;
                            for (int kx = 0; kx < k_; ++kx) {
                                const int ix = ox * stride_ + kx - pad_;
                                if (ix < 0 || ix >= gx.w) continue;
                                gx.at(n, c, iy, ix) += static_cast<T>(g);
                            }
                        }
                    }
        return gx;
    }

private:
    int k_, stride_, pad_;
    std::array<int, 4> in_shape_{};
};

template <typename T>
class MaxPool final : public Layer<T> {
public:
    MaxPool(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        // Small-image adaptation: a window that no longer fits passes through.
        passthrough_ = (x.h + 2 * pad_ < k_) || (x.w + 2 * pad_ < k_);
        if (passthrough_) {
            if (cache) in_shape_ = {x.n, x.c, x.h, x.w};
            return x;
        }
        const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        Tensor<T> y(x.n, x.c, oh, ow);
        if (cache) argmax_.assign(y.size(), -1);
        std::size_t oi = 0;
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox, ++oi) {
                        double best = -std::numeric_limits<double>::infinity();
                        int best_idx = -1;
                        for (int ky = 0; ky < k_; ++ky) {
                            const int iy = oy * stride_ + ky - pad_;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < k_; ++kx) {
                                const int ix = ox * stride_ + kx - pad_;
                                if (ix < 0 || ix >= x.w) continue;
                                const double v = x.at(n, c, iy, ix);
                                if (v > best) {
                                    best = v;
                                    best_idx = iy * x.w + ix;
                                }
                            }
                        }
                        y.at(n, c, oy, ox) = best_idx < 0 ? T(0) : static_cast<T>(best);
                        if (cache) argmax_[oi] = best_idx;
                    }
        if (cache) in_shape_ = {x.n, x.c, x.h, x.w};
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, bool) override {
        if (passthrough_) return gy;
        Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        std::size_t oi = 0;
        for (int n = 0; n < gy.n; ++n)
            for (int c = 0; c < gy.c; ++c)
                for (int oy = 0; oy < gy.h; ++oy)
                    for (int ox = 0; ox < gy.w; ++ox, ++oi) {
                        const int idx = argmax_[oi];
                        if (idx >= 0)
                            gx.at(n, c, idx / gx.w, idx % gx.w) += gy.at(n, c, oy, ox);
                    }
        return gx;
    }

private:
    int k_, stride_, pad_;
    bool passthrough_ = false;
    std::array<int, 4> in_shape_{};
    std::vector<int> argmax_;
};

// Spatial mean: (n, c, h, w) -> (n, c, 1, 1).
template <typename T>
class GlobalAvgPool final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        Tensor<T> y(x.n, x.c, 1, 1);
        const int m = x.plane();
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c) {
                double acc = 0;
                const T* p = &x.at(n, c, 0, 0);
                for (int i = 0; i < m; ++i) acc += p[i];
                y.at(n, c, 0, 0) = static_cast<T>(acc / m);
            }
        if (cache) in_shape_ = {x.n, x.c, x.h, x.w};
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gy, bool) override {
        Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        const int m = in_shape_[2] * in_shape_[3];
        for (int n = 0; n < gx.n; ++n)
            for (int c = 0; c < gx.c; ++c) {
                const T g = static_cast<T>(gy.at(n, c, 0, 0) / static_cast<T>(m));
                T* p = &gx.at(n, c, 0, 0);
                for (int i = 0; i < m; ++i) p[i] = g;
            }
        return gx;
    }

private:
    std::array<int, 4> in_shape_{};
};

// Affine map on (n, d, 1, 1) feature vectors.
template <typename T>
class Linear final : public Layer<T> {
public:
    Linear(int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
        weight_ = RowMat<T>::Zero(out_dim, in_dim);
        bias_ = VecX<T>::Zero(out_dim);
        grad_weight_ = RowMat<T>::Zero(out_dim, in_dim);
        grad_bias_ = VecX<T>::Zero(out_dim);
    }

    void init(Rng& rng) override {
        const double std = std::sqrt(2.0 / in_dim_);
        for (Eigen::Index i = 0; i < weight_.size(); ++i)
            weight_.data()[i] = static_cast<T>(std * rng.normal());
        bias_.setZero();
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        if (x.sample_size() != in_dim_) throw ContractError("linear: dim mismatch");
        Tensor<T> y(x.n, out_dim_, 1, 1);
        Eigen::Map<const RowMat<T>> xin(x.data.data(), x.n, in_dim_);
        Eigen::Map<RowMat<T>> out(y.data.data(), x.n, out_dim_);
        out.noalias() = xin * weight_.transpose();
        out.rowwise() += bias_.transpose();
        if (cache) x_cache_ = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
        Eigen::Map<const RowMat<T>> g(gy.data.data(), gy.n, out_dim_);
        Eigen::Map<const RowMat<T>> xin(x_cache_.data.data(), x_cache_.n, in_dim_);
        if (param_grads) {
            grad_weight_.noalias() += g.transpose() * xin;
            grad_bias_ += g.colwise().sum().transpose();
        }
        Tensor<T> gx(x_cache_.n, x_cache_.c, x_cache_.h, x_cache_.w);
        Eigen::Map<RowMat<T>> gxm(gx.data.data(), gx.n, in_dim_);
        gxm.noalias() = g * weight_;
        return gx;
    }

    void collect(std::vector<ParamView<T>>& out, const std::string& prefix) override {
        out.push_back({prefix + ".weight", {out_dim_, in_dim_}, weight_.data(),
                       grad_weight_.data(), static_cast<std::size_t>(weight_.size()), true});
        out.push_back({prefix + ".bias", {out_dim_}, bias_.data(), grad_bias_.data(),
                       static_cast<std::size_t>(bias_.size()), false});
    }

    void zero_grads() override {
        grad_weight_.setZero();
        grad_bias_.setZero();
    }

private:
    int in_dim_, out_dim_;
    RowMat<T> weight_, grad_weight_;
    VecX<T> bias_, grad_bias_;
    Tensor<T> x_cache_;
};

// conv-IN-ReLU / conv-IN plus skip; 1x1 strided projection when shape changes.
template <typename T>
class ResidualBlock final : public Layer<T> {
public:
    ResidualBlock(int in_ch, int out_ch, int stride)
        : conv1_(in_ch, out_ch, 3, stride, 1),
          norm1_(out_ch),
          conv2_(out_ch, out_ch, 3, 1, 1),
          norm2_(out_ch),
          project_(in_ch != out_ch || stride != 1) {
        if (project_) {
            conv_skip_ = std::make_unique<Conv2d<T>>(in_ch, out_ch, 1, stride, 0);
            norm_skip_ = std::make_unique<InstanceNorm<T>>(out_ch);
        }
    }

    void init(Rng& rng) override {
        conv1_.init(rng);
        norm1_.init(rng);
        conv2_.init(rng);
        norm2_.init(rng);
        if (project_) {
            conv_skip_->init(rng);
            norm_skip_->init(rng);
        }
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) override {
        Tensor<T> f = relu1_.forward(norm1_.forward(conv1_.forward(x, cache), cache), cache);
        f = norm2_.forward(conv2_.forward(f, cache), cache);
        Tensor<T> s = project_ ? norm_skip_->forward(conv_skip_->forward(x, cache), cache) : x;
        return relu_out_.forward(f + s, cache);
    }

    Tensor<T> backward(const Tensor<T>& gy, bool param_grads) override {
        Tensor<T> g = relu_out_.backward(gy, param_grads);
        Tensor<T> gf = conv2_.backward(norm2_.backward(g, param_grads), param_grads);
        gf = conv1_.backward(norm1_.backward(relu1_.backward(gf, param_grads), param_grads),
                             param_grads);
        Tensor<T> gs = project_
                           ? conv_skip_->backward(norm_skip_->backward(g, param_grads), param_grads)
                           : g;
        return gf + gs;
    }

    void collect(std::vector<ParamView<T>>& out, const std::string& prefix) override {
        conv1_.collect(out, prefix + ".conv1");
        norm1_.collect(out, prefix + ".norm1");
        conv2_.collect(out, prefix + ".conv2");
        norm2_.collect(out, prefix + ".norm2");
        if (project_) {
            conv_skip_->collect(out, prefix + ".convskip");
            norm_skip_->collect(out, prefix + ".normskip");
        }
    }

    void zero_grads() override {
        conv1_.zero_grads();
        norm1_.zero_grads();
        conv2_.zero_grads();
        norm2_.zero_grads();
        if (project_) {
            conv_skip_->zero_grads();
            norm_skip_->zero_grads();
        }
    }

private:
    Conv2d<T> conv1_;
    InstanceNorm<T> norm1_;
    ReLU<T> relu1_;
    Conv2d<T> conv2_;
    InstanceNorm<T> norm2_;
    ReLU<T> relu_out_;
    bool project_;
    std::unique_ptr<Conv2d<T>> conv_skip_;
    std::unique_ptr<InstanceNorm<T>> norm_skip_;
};

}  // namespace distillkit
