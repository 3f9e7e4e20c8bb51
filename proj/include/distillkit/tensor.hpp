#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "distillkit/errors.hpp"

namespace distillkit {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Dense NCHW tensor. Row-major flat storage: ((n*C + c)*H + h)*W + w.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.n, o.c, o.h, o.w); }

    std::size_t size() const { return data.size(); }
    int plane() const { return h * w; }
    int sample_size() const { return c * h * w; }

    T& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    const T& at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    T* sample_ptr(int in) { return data.data() + static_cast<std::size_t>(in) * sample_size(); }
    const T* sample_ptr(int in) const {
        return data.data() + static_cast<std::size_t>(in) * sample_size();
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    // Rows [first, first+count) as a new tensor.
    Tensor slice(int first, int count) const {
        Tensor out(count, c, h, w);
        std::copy(sample_ptr(first), sample_ptr(first) + static_cast<std::size_t>(count) * sample_size(),
                  out.data.begin());
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw ContractError("tensor add: shape mismatch");
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

template <typename T>
double l2_norm(const Tensor<T>& t) {
    double s = 0;
    for (const T& v : t.data) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
}

// FNV-1a over raw bytes; used for determinism assertions on arrays.
inline std::uint64_t bytes_hash(const void* p, std::size_t nbytes) {
    const auto* b = static_cast<const unsigned char*>(p);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
std::uint64_t tensor_hash(const Tensor<T>& t) {
    return bytes_hash(t.data.data(), t.data.size() * sizeof(T));
}

}  // namespace distillkit
