#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "distillkit/datasets.hpp"
#include "distillkit/models.hpp"

namespace distillkit {

// Mean softmax cross-entropy over a batch of (N, classes, 1, 1) logits.
// Returns the loss; fills grad with d(loss)/d(logits).
template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                             Tensor<T>& grad) {
    const int n = logits.n, k = logits.c;
    grad = Tensor<T>(n, k, 1, 1);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        const T* row = logits.sample_ptr(i);
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0;
        for (int j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        const double logz = std::log(z) + mx;
        total += logz - static_cast<double>(row[labels[i]]);
        T* g = grad.sample_ptr(i);
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - logz);
            g[j] = static_cast<T>((p - (j == labels[i] ? 1.0 : 0.0)) / n);
        }
    }
    return total / n;
}

struct TrainRecipe {
    int epochs = 300;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch = 64;
    bool cosine_decay = true;
};

// SGD with momentum over a parameter view list; decay applies to weights only.
template <typename T>
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<ParamView<T>> views, double momentum, double weight_decay)
        : views_(std::move(views)), momentum_(momentum), weight_decay_(weight_decay) {
        for (const auto& v : views_) buffers_.emplace_back(v.size, T(0));
    }

    void step(double lr) {
        for (std::size_t i = 0; i < views_.size(); ++i) {
            auto& v = views_[i];
            auto& buf = buffers_[i];
            for (std::size_t j = 0; j < v.size; ++j) {
                double g = v.grads[j];
                if (v.weight_decay && weight_decay_ != 0.0) g += weight_decay_ * v.values[j];
                buf[j] = static_cast<T>(momentum_ * buf[j] + g);
                v.values[j] -= static_cast<T>(lr * buf[j]);
            }
        }
    }

private:
    std::vector<ParamView<T>> views_;
    std::vector<std::vector<T>> buffers_;
    double momentum_, weight_decay_;
};

template <typename T>
Tensor<T> gather_batch(const Tensor<T>& images, const std::vector<int>& order, int first,
                       int count) {
    Tensor<T> out(count, images.c, images.h, images.w);
    for (int i = 0; i < count; ++i)
        std::copy(images.sample_ptr(order[first + i]),
                  images.sample_ptr(order[first + i]) + images.sample_size(), out.sample_ptr(i));
    return out;
}

template <typename T>
double accuracy_top1(ClassifierNet<T>& net, const Tensor<T>& images,
                     const std::vector<int>& labels, int batch = 256) {
    int correct = 0;
    for (int first = 0; first < images.n; first += batch) {
        const int count = std::min(batch, images.n - first);
        Tensor<T> logits = net.forward(images.slice(first, count), false);
        for (int i = 0; i < count; ++i) {
            const T* row = logits.sample_ptr(i);
            int arg = 0;
            for (int j = 1; j < logits.c; ++j)
                if (row[j] > row[arg]) arg = j;
            if (arg == labels[first + i]) ++correct;
        }
    }
    return static_cast<double>(correct) / images.n;
}

// Single-threaded minibatch training; deterministic given the seed.
// Returns final training accuracy. Throws TrainingError on divergence.
template <typename T>
double train_classifier(ClassifierNet<T>& net, const Tensor<T>& images,
                        const std::vector<int>& labels, const TrainRecipe& recipe,
                        std::uint64_t seed) {
    if (recipe.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (images.n < 1) throw ContractError("train: empty dataset");
    Rng init_rng(derive_seed(seed, "net-init"));
    net.init(init_rng);
    SgdOptimizer<T> opt(net.params(), recipe.momentum, recipe.weight_decay);
    Rng order_rng(derive_seed(seed, "batch-order"));

    std::vector<int> order(images.n);
    std::iota(order.begin(), order.end(), 0);
    const int batch = std::max(1, std::min(recipe.batch, images.n));
    long step_index = 0;
    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        order_rng.shuffle(order.begin(), order.end());
        const double lr = recipe.cosine_decay
                              ? recipe.lr * 0.5 *
                                    (1.0 + std::cos(3.14159265358979323846 * epoch / recipe.epochs))
                              : recipe.lr;
        for (int first = 0; first < images.n; first += batch, ++step_index) {
            const int count = std::min(batch, images.n - first);
            Tensor<T> xb = gather_batch(images, order, first, count);
            std::vector<int> yb(count);
            for (int i = 0; i < count; ++i) yb[i] = labels[order[first + i]];
            Tensor<T> logits = net.forward(xb, true);
            Tensor<T> grad;
            const double loss = softmax_cross_entropy(logits, yb, grad);
            if (!std::isfinite(loss))
                throw TrainingError("train: non-finite loss at step " + std::to_string(step_index));
            net.zero_grads();
            net.backward(grad, true);
            opt.step(lr);
        }
    }
    return accuracy_top1(net, images, labels);
}

struct PretrainResult {
    ExtractorParams params;
    double train_accuracy = 0;
};

// Trains the embedder with a linear head on the real data, then discards
// the head. The pretraining schedule: momentum SGD, lr 0.01, momentum 0.9,
// weight decay 5e-4, cosine decay, batch 64.
inline PretrainResult pretrain_embedder(const ExtractorSpec& spec, const LabeledImageSet& data,
                                        int epochs, std::uint64_t seed) {
    if (epochs < 1) throw ConfigError("pretrain_embedder: epochs must be >= 1");
    if (data.num_classes() < 2) throw ConfigError("pretrain_embedder: need >= 2 classes");
    ClassifierNet<float> net(spec, data.num_classes());
    TrainRecipe recipe;
    recipe.epochs = epochs;
    const double acc = train_classifier(net, data.images, data.labels, recipe, seed);
    if (acc <= 1.0 / data.num_classes())
        throw TrainingError("pretrain_embedder: accuracy not above chance");
    PretrainResult out;
    out.params = net.features().store(seed, /*trained=*/true);
    out.train_accuracy = acc;
    return out;
}

}  // namespace distillkit
