#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "distillkit/layers.hpp"

namespace distillkit {

enum class Family { convnet, resnet18, alexnet, vgg11 };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::convnet: return "convnet";
        case Family::resnet18: return "resnet18";
        case Family::alexnet: return "alexnet";
        case Family::vgg11: return "vgg11";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "convnet") return Family::convnet;
    if (s == "resnet18") return Family::resnet18;
    if (s == "alexnet") return Family::alexnet;
    if (s == "vgg11") return Family::vgg11;
    throw ConfigError("models: unknown family '" + s + "'");
}

enum class OutputMode { feature_map, pooled_vector };

// Declarative description of a feature extractor. The convnet family is
// fixed: 3 blocks of (3x3 conv, instance norm, ReLU, 3x3 avg pool stride 2).
struct ExtractorSpec {
    Family family = Family::convnet;
    int width = 0;  // 0 picks the family default
    int in_channels = 3;
    OutputMode default_output = OutputMode::feature_map;

    int resolved_width() const {
        if (width > 0) return width;
        switch (family) {
            case Family::convnet: return 128;
            case Family::resnet18: return 64;
            case Family::alexnet: return 64;
            case Family::vgg11: return 64;
        }
        return 64;
    }

    // Channel count of the final feature map.
    int feature_dim() const {
        const int w = resolved_width();
        switch (family) {
            case Family::convnet: return w;
            case Family::resnet18: return 8 * w;
            case Family::alexnet: return 3 * w;
            case Family::vgg11: return 8 * w;
        }
        return w;
    }
};

struct NamedArray {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;  // stored as float32, cast on load
};

// Parameter arrays keyed by layer, decoupled from any live network.
struct ExtractorParams {
    std::vector<NamedArray> arrays;
    std::uint64_t init_seed = 0;
    bool trained = false;

    std::uint64_t content_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& a : arrays) {
            h ^= hash_tag(a.name);
            h = mix64(h ^ bytes_hash(a.values.data(), a.values.size() * sizeof(float)));
        }
        return h;
    }
};

// A stack of layers ending in a (d, h, w) feature map.
template <typename T>
class FeatureNet {
public:
    explicit FeatureNet(const ExtractorSpec& spec) : spec_(spec) {
        const int w = spec.resolved_width();
        const int ic = spec.in_channels;
        switch (spec.family) {
            case Family::convnet:
                for (int b = 0; b < 3; ++b) {
                    add(new Conv2d<T>(b == 0 ? ic : w, w, 3, 1, 1), "block" + std::to_string(b) + ".conv");
                    add(new InstanceNorm<T>(w), "block" + std::to_string(b) + ".norm");
                    add(new ReLU<T>(), "");
                    add(new AvgPool<T>(3, 2, 1), "");
                }
                break;
            case Family::resnet18: {
                add(new Conv2d<T>(ic, w, 3, 1, 1), "stem.conv");
                add(new InstanceNorm<T>(w), "stem.norm");
                add(new ReLU<T>(), "");
                int ch = w;
                const int stage_w[4] = {w, 2 * w, 4 * w, 8 * w};
                for (int s = 0; s < 4; ++s) {
                    const int stride = s == 0 ? 1 : 2;
                    add(new ResidualBlock<T>(ch, stage_w[s], stride),
                        "stage" + std::to_string(s) + ".block0");
                    add(new ResidualBlock<T>(stage_w[s], stage_w[s], 1),
                        "stage" + std::to_string(s) + ".block1");
                    ch = stage_w[s];
                }
                break;
            }
            case Family::alexnet:
                add(new Conv2d<T>(ic, w, 5, 1, 2), "conv0");
                add(new InstanceNorm<T>(w), "norm0");
                add(new ReLU<T>(), "");
                add(new MaxPool<T>(2, 2, 0), "");
                add(new Conv2d<T>(w, 2 * w, 5, 1, 2), "conv1");
                add(new InstanceNorm<T>(2 * w), "norm1");
                add(new ReLU<T>(), "");
                add(new MaxPool<T>(2, 2, 0), "");
                add(new Conv2d<T>(2 * w, 3 * w, 3, 1, 1), "conv2");
                add(new InstanceNorm<T>(3 * w), "norm2");
                add(new ReLU<T>(), "");
                add(new Conv2d<T>(3 * w, 3 * w, 3, 1, 1), "conv3");
                add(new InstanceNorm<T>(3 * w), "norm3");
                add(new ReLU<T>(), "");
                add(new MaxPool<T>(2, 2, 0), "");
                break;
            case Family::vgg11: {
                const int cfg[13] = {w,     -1 /*pool*/, 2 * w, -1,    4 * w, 4 * w, -1,
                                     8 * w, 8 * w,       -1,    8 * w, 8 * w, -1};
                int ch = ic, idx = 0;
                for (int v : cfg) {
                    if (v < 0) {
                        add(new MaxPool<T>(2, 2, 0), "");
                    } else {
                        add(new Conv2d<T>(ch, v, 3, 1, 1), "conv" + std::to_string(idx));
                        add(new InstanceNorm<T>(v), "norm" + std::to_string(idx));
                        add(new ReLU<T>(), "");
                        ch = v;
                        ++idx;
                    }
                }
                break;
            }
        }
    }

    const ExtractorSpec& spec() const { return spec_; }

    void init(Rng& rng) {
        for (auto& l : layers_) l->init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) {
        Tensor<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur, cache);
        return cur;
    }

    Tensor<T> backward(const Tensor<T>& grad_out, bool param_grads) {
        Tensor<T> g = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            g = (*it)->backward(g, param_grads);
        return g;
    }

    std::vector<ParamView<T>> params() {
        std::vector<ParamView<T>> out;
        int anon = 0;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const std::string base =
                names_[i].empty() ? "anon" + std::to_string(anon++) : names_[i];
            layers_[i]->collect(out, base);
        }
        return out;
    }

    void zero_grads() {
        for (auto& l : layers_) l->zero_grads();
    }

    void load(const ExtractorParams& src) {
        auto views = params();
        if (views.size() != src.arrays.size())
            throw ContractError("feature net: parameter count mismatch on load");
        for (std::size_t i = 0; i < views.size(); ++i) {
            if (views[i].name != src.arrays[i].name || views[i].size != src.arrays[i].values.size())
                throw ContractError("feature net: parameter layout mismatch at " + views[i].name);
            for (std::size_t j = 0; j < views[i].size; ++j)
                views[i].values[j] = static_cast<T>(src.arrays[i].values[j]);
        }
    }

    ExtractorParams store(std::uint64_t init_seed, bool trained) {
        ExtractorParams out;
        out.init_seed = init_seed;
        out.trained = trained;
        for (const auto& v : params()) {
            NamedArray a;
            a.name = v.name;
            a.shape = v.shape;
            a.values.resize(v.size);
            for (std::size_t j = 0; j < v.size; ++j)
                a.values[j] = static_cast<float>(v.values[j]);
            out.arrays.push_back(std::move(a));
        }
        return out;
    }

private:
    void add(Layer<T>* l, const std::string& name) {
        layers_.emplace_back(l);
        names_.push_back(name);
    }

    ExtractorSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<std::string> names_;
};

// Feature net plus spatial-mean-pool and a single affine head.
template <typename T>
class ClassifierNet {
public:
    ClassifierNet(const ExtractorSpec& spec, int num_classes)
        : features_(spec), head_(spec.feature_dim(), num_classes) {}

    void init(Rng& rng) {
        features_.init(rng);
        head_.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool cache) {
        return head_.forward(pool_.forward(features_.forward(x, cache), cache), cache);
    }

    Tensor<T> backward(const Tensor<T>& grad_logits, bool param_grads) {
        return features_.backward(pool_.backward(head_.backward(grad_logits, param_grads), param_grads),
                                  param_grads);
    }

    std::vector<ParamView<T>> params() {
        auto out = features_.params();
        head_.collect(out, "head");
        return out;
    }

    void zero_grads() {
        features_.zero_grads();
        head_.zero_grads();
    }

    FeatureNet<T>& features() { return features_; }

private:
    FeatureNet<T> features_;
    GlobalAvgPool<T> pool_;
    Linear<T> head_;
};

// Fresh random initialization drawn from the extractor's parameter
// distribution; deterministic given the generator state.
inline ExtractorParams sample_params(const ExtractorSpec& spec, Rng& rng,
                                     std::uint64_t seed_label = 0) {
    FeatureNet<float> net(spec);
    net.init(rng);
    return net.store(seed_label, /*trained=*/false);
}

template <typename T>
Tensor<T> pool_features(const Tensor<T>& fmap) {
    GlobalAvgPool<T> pool;
    return pool.forward(fmap, false);
}

// Forward pass of a described extractor over a batch.
template <typename T>
Tensor<T> extract(const ExtractorSpec& spec, const ExtractorParams& params, const Tensor<T>& batch,
                  OutputMode mode) {
    if (batch.c != spec.in_channels)
        throw ContractError("extract: batch has " + std::to_string(batch.c) +
                            " channels, spec expects " + std::to_string(spec.in_channels));
    FeatureNet<T> net(spec);
    net.load(params);
    Tensor<T> fmap = net.forward(batch, false);
    if (mode == OutputMode::feature_map) return fmap;
    return pool_features(fmap);
}

}  // namespace distillkit
