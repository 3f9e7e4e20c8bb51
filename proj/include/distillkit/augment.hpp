#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "distillkit/errors.hpp"
#include "distillkit/rng.hpp"
#include "distillkit/tensor.hpp"

namespace distillkit {

enum class AugOp { flip, crop, scale, rotate, brightness };

inline std::string aug_op_name(AugOp op) {
    switch (op) {
        case AugOp::flip: return "flip";
        case AugOp::crop: return "crop";
        case AugOp::scale: return "scale";
        case AugOp::rotate: return "rotate";
        case AugOp::brightness: return "brightness";
    }
    return "?";
}

inline AugOp aug_op_from_name(const std::string& s) {
    if (s == "flip") return AugOp::flip;
    if (s == "crop") return AugOp::crop;
    if (s == "scale") return AugOp::scale;
    if (s == "rotate") return AugOp::rotate;
    if (s == "brightness") return AugOp::brightness;
    throw ConfigError("augment: unknown op '" + s + "'");
}

// Differentiable augmentation policy. One sampled instance is applied with
// identical parameters to the real and synthetic branches.
struct AugmentPolicy {
    bool enabled = true;
    std::vector<AugOp> ops = {AugOp::flip, AugOp::crop, AugOp::scale, AugOp::rotate,
                              AugOp::brightness};
    double crop_pad_fraction = 0.125;  // translation range as fraction of side, <= 1/8
    double scale_delta = 0.15;         // factor drawn from [1-d, 1+d]
    double rotate_max_deg = 15.0;      // <= 15
    double brightness_delta = 0.2;     // additive offset drawn from [-d, d]

    void validate() const {
        if (crop_pad_fraction < 0 || crop_pad_fraction > 0.125 + 1e-12)
            throw ConfigError("augment: crop_pad_fraction out of [0, 1/8]");
        if (rotate_max_deg < 0 || rotate_max_deg > 15.0 + 1e-12)
            throw ConfigError("augment: rotate_max_deg out of [0, 15]");
        if (scale_delta < 0 || scale_delta >= 1.0)
            throw ConfigError("augment: scale_delta out of [0, 1)");
        if (brightness_delta < 0 || brightness_delta > 1.0)
            throw ConfigError("augment: brightness_delta out of [0, 1]");
    }

    bool has(AugOp op) const {
        for (AugOp o : ops)
            if (o == op) return true;
        return false;
    }
};

// Concrete sampled parameterization. Geometric ops compose into one affine
// warp (bilinear, zero padding); brightness is an additive offset after it.
struct AugmentInstance {
    bool flip = false;
    double shift_fx = 0.0, shift_fy = 0.0;  // translation as fraction of width/height
    double scale = 1.0;
    double angle_deg = 0.0;
    double brightness = 0.0;
    std::vector<AugOp> op_order;
    // Optional shape binding: when set, every batch this instance touches
    // must match (the siamese contract across branches).
    int expected_h = 0, expected_w = 0;

    void bind_shape(int h, int w) {
        expected_h = h;
        expected_w = w;
    }
    bool geometric_identity() const {
        return !flip && shift_fx == 0.0 && shift_fy == 0.0 && scale == 1.0 && angle_deg == 0.0;
    }
    bool is_identity() const { return geometric_identity() && brightness == 0.0; }
};

inline AugmentInstance sample_augmentation(const AugmentPolicy& policy, Rng& rng) {
    policy.validate();
    AugmentInstance inst;
    if (!policy.enabled) return inst;
    inst.op_order = policy.ops;
    for (AugOp op : policy.ops) {
        switch (op) {
            case AugOp::flip:
                inst.flip = rng.bernoulli(0.5);
                break;
            case AugOp::crop:
                inst.shift_fx = policy.crop_pad_fraction * rng.uniform(-1.0, 1.0);
                inst.shift_fy = policy.crop_pad_fraction * rng.uniform(-1.0, 1.0);
                break;
            case AugOp::scale:
                inst.scale = 1.0 + policy.scale_delta * rng.uniform(-1.0, 1.0);
                break;
            case AugOp::rotate:
                inst.angle_deg = policy.rotate_max_deg * rng.uniform(-1.0, 1.0);
                break;
            case AugOp::brightness:
                inst.brightness = policy.brightness_delta * rng.uniform(-1.0, 1.0);
                break;
        }
    }
    return inst;
}

namespace detail {

// Row-major 3x3 homogeneous transform acting on (x, y, 1) columns.
using Affine3 = std::array<double, 9>;

inline Affine3 affine_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline Affine3 affine_mul(const Affine3& a, const Affine3& b) {
    Affine3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i * 3 + j] = a[i * 3] * b[j] + a[i * 3 + 1] * b[3 + j] + a[i * 3 + 2] * b[6 + j];
    return r;
}

inline Affine3 affine_invert(const Affine3& m) {
    // Affine: last row is (0, 0, 1).
    const double a = m[0], b = m[1], tx = m[2];
    const double c = m[3], d = m[4], ty = m[5];
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-12) throw NumericError("augment: singular warp");
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty), 0, 0, 1};
}

// Forward geometric map of the composed instance, pixel-center coordinates.
inline Affine3 forward_map(const AugmentInstance& inst, int h, int w) {
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    Affine3 m = affine_identity();
    for (AugOp op : inst.op_order) {
        Affine3 f = affine_identity();
        switch (op) {
            case AugOp::flip:
                if (inst.flip) f = {-1, 0, 2 * cx, 0, 1, 0, 0, 0, 1};
                break;
            case AugOp::crop:
                f = {1, 0, inst.shift_fx * w, 0, 1, inst.shift_fy * h, 0, 0, 1};
                break;
            case AugOp::scale:
                f = {inst.scale, 0, cx * (1 - inst.scale), 0, inst.scale, cy * (1 - inst.scale),
                     0, 0, 1};
                break;
            case AugOp::rotate: {
                const double th = inst.angle_deg * 3.14159265358979323846 / 180.0;
                const double cs = std::cos(th), sn = std::sin(th);
                f = {cs, -sn, cx - cs * cx + sn * cy, sn, cs, cy - sn * cx - cs * cy, 0, 0, 1};
                break;
            }
            case AugOp::brightness:
                break;
        }
        m = affine_mul(f, m);
    }
    return m;
}

}  // namespace detail

// Warp + brightness. Output shape equals input shape; differentiable in the
// input pixels (the warp is linear in them).
template <typename T>
Tensor<T> apply(const AugmentInstance& inst, const Tensor<T>& batch) {
    if (batch.n == 0 || batch.c == 0 || batch.h == 0 || batch.w == 0)
        throw ContractError("augment apply: empty batch");
    if (inst.expected_h > 0 && (batch.h != inst.expected_h || batch.w != inst.expected_w))
        throw ContractError("augment apply: batch " + batch.shape_str() +
                            " does not match the instance's bound shape");
    if (inst.is_identity()) return batch;

    Tensor<T> out(batch.n, batch.c, batch.h, batch.w);
    if (inst.geometric_identity()) {
        for (std::size_t i = 0; i < batch.data.size(); ++i)
            out.data[i] = batch.data[i] + static_cast<T>(inst.brightness);
        return out;
    }

    const auto inv = detail::affine_invert(detail::forward_map(inst, batch.h, batch.w));
    const int h = batch.h, w = batch.w;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double sx = inv[0] * j + inv[1] * i + inv[2];
            const double sy = inv[3] * j + inv[4] * i + inv[5];
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
            const double w10 = (1 - fx) * fy, w11 = fx * fy;
            for (int n = 0; n < batch.n; ++n) {
                for (int c = 0; c < batch.c; ++c) {
                    double acc = 0.0;
                    auto pick = [&](int yy, int xx, double wt) {
                        if (wt != 0.0 && yy >= 0 && yy < h && xx >= 0 && xx < w)
                            acc += wt * static_cast<double>(batch.at(n, c, yy, xx));
                    };
                    pick(y0, x0, w00);
                    pick(y0, x0 + 1, w01);
                    pick(y0 + 1, x0, w10);
                    pick(y0 + 1, x0 + 1, w11);
                    out.at(n, c, i, j) = static_cast<T>(acc + inst.brightness);
                }
            }
        }
    }
    return out;
}

// Gradient of apply with respect to the input batch: scatter through the
// same bilinear weights; the brightness offset has zero input gradient.
template <typename T>
Tensor<T> apply_backward(const AugmentInstance& inst, const Tensor<T>& grad_out) {
    if (inst.geometric_identity()) return grad_out;

    Tensor<T> grad_in(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
    const auto inv = detail::affine_invert(detail::forward_map(inst, grad_out.h, grad_out.w));
    const int h = grad_out.h, w = grad_out.w;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double sx = inv[0] * j + inv[1] * i + inv[2];
            const double sy = inv[3] * j + inv[4] * i + inv[5];
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            for (int n = 0; n < grad_out.n; ++n)
                for (int c = 0; c < grad_out.c; ++c) {
                    const double g = static_cast<double>(grad_out.at(n, c, i, j));
                    for (int k = 0; k < 4; ++k)
                        if (wts[k] != 0.0 && ys[k] >= 0 && ys[k] < h && xs[k] >= 0 && xs[k] < w)
                            grad_in.at(n, c, ys[k], xs[k]) += static_cast<T>(wts[k] * g);
                }
        }
    }
    return grad_in;
}

}  // namespace distillkit
