#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "distillkit/augment.hpp"
#include "distillkit/datasets.hpp"
#include "distillkit/losses.hpp"
#include "distillkit/models.hpp"

namespace distillkit {

struct PixelOptimizer {
    double lr = 1.0;
    double momentum = 0.5;
};

// Everything one distillation run depends on. validate() names offending
// fields with config-file paths.
struct DistillConfig {
    std::string dataset_name;
    int ipc = 10;              // synthetic images per class (K)
    int batch_per_class = 16;  // real batch size per class (B)
    int iterations = 500;      // optimization steps (T)
    PixelOptimizer optimizer;
    LossWeights weights;
    AugmentPolicy augment;
    ExtractorSpec extractor;            // DM/CM path, re-sampled per iteration
    ExtractorSpec embedder_spec;        // frozen CC path
    ExtractorParams embedder_params;    // empty unless lambda_cc > 0
    std::string embedder_dataset;       // dataset the embedder was trained on
    std::string base_loss = "dm";
    std::uint64_t master_seed = 1;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints
    std::string checkpoint_dir;

    void validate() const {
        if (optimizer.lr < 0) throw ConfigError("optimizer.lr must be >= 0");
        if (optimizer.momentum < 0 || optimizer.momentum >= 1)
            throw ConfigError("optimizer.momentum must be in [0, 1)");
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (base_loss != "dm")
            throw ConfigError("base_loss '" + base_loss + "' not available (supported: dm)");
        if (ipc < 2)
            throw ConfigError("ipc must be >= 2 with the dm base or lambda_cm > 0 "
                              "(covariance statistics need more than one sample)");
        if (batch_per_class < 2) throw ConfigError("batch_per_class must be >= 2");
        weights.validate();
        augment.validate();
        if (weights.lambda_cc > 0) {
            if (embedder_params.arrays.empty())
                throw ConfigError("embedder checkpoint required when lambda_cc > 0");
            if (!embedder_dataset.empty() && embedder_dataset != dataset_name)
                throw ConfigError("embedder was trained on '" + embedder_dataset +
                                  "', not '" + dataset_name + "'");
        }
    }
};

struct IterationRecord {
    int iteration = 0;
    double loss_base = 0, loss_cc = 0, loss_cm = 0, loss_total = 0;
    double grad_norm = 0;
    double ms = 0;
    // Mean per-class Frobenius distance between the synthetic and real-batch
    // local covariances at this iteration. Tracked even when lambda_cm = 0 so
    // ablation controls stay comparable; not part of the CSV stream.
    double cov_gap_mean = 0;
};

struct IterationObservation {
    int iteration = 0;
    std::uint64_t extractor_hash = 0;
    AugmentInstance augment;
};

struct DistillSinks {
    std::ostream* csv = nullptr;
    std::function<void(const IterationObservation&)> observer;
    std::function<void(const IterationRecord&)> on_record;
};

struct DistillResult {
    SyntheticDataset synthetic;
    std::vector<IterationRecord> records;
    long cc_clamp_hits = 0;
};

// State for continuing an interrupted run.
struct ResumeState {
    SyntheticDataset synthetic;
    std::vector<float> momentum;
    int iteration = 0;
};

struct ObjectiveValue {
    double base = 0, cc = 0, cm = 0, total = 0;
    double cov_gap_mean = 0;
    long cc_clamp_hits = 0;
};

// One evaluation of the combined objective at fixed extractor parameters and
// augmentation, returning the loss parts and the gradient on the raw
// synthetic pixels. This is the exact computation the engine steps on; the
// gradient test instantiates it in double precision.
template <typename T>
ObjectiveValue combined_objective(const ExtractorSpec& extractor_spec,
                                  const ExtractorParams& extractor_params,
                                  const ExtractorSpec& embedder_spec,
                                  const ExtractorParams& embedder_params,
                                  const std::vector<Tensor<T>>& real_batches_by_class,
                                  const Tensor<T>& syn_pixels, int ipc,
                                  const AugmentInstance& aug, const LossWeights& weights,
                                  Tensor<T>* pixel_grad) {
    const int classes = static_cast<int>(real_batches_by_class.size());
    if (syn_pixels.n != classes * ipc)
        throw ContractError("combined_objective: synthetic size != classes * ipc");
    const int plane_grad_needed = pixel_grad != nullptr;

    // Shared augmented views; one instance, both branches.
    Tensor<T> syn_aug = apply(aug, syn_pixels);

    FeatureNet<T> extractor(extractor_spec);
    extractor.load(extractor_params);

    // Real side: forward only. Covariance statistics are tracked regardless
    // of lambda_cm so that ablation controls report a comparable gap.
    std::vector<MatX<T>> real_pooled(classes);
    std::vector<CovarianceStats<T>> real_cov;
    const bool cm_grad = weights.lambda_cm > 0 && plane_grad_needed;
    for (int c = 0; c < classes; ++c) {
        Tensor<T> fmap = extractor.forward(apply(aug, real_batches_by_class[c]), false);
        const int plane = fmap.plane();
        MatX<T> pooled(fmap.n, fmap.c);
        for (int n = 0; n < fmap.n; ++n)
            for (int ch = 0; ch < fmap.c; ++ch) {
                const T* p = fmap.sample_ptr(n) + static_cast<std::size_t>(ch) * plane;
                double acc = 0;
                for (int i = 0; i < plane; ++i) acc += p[i];
                pooled(n, ch) = static_cast<T>(acc / plane);
            }
        real_pooled[c] = std::move(pooled);
        std::vector<MatX<T>> desc;
        desc.reserve(fmap.n);
        for (int n = 0; n < fmap.n; ++n) desc.push_back(local_descriptors(fmap, n));
        real_cov.push_back(class_covariance(desc));
    }

    // Synthetic side through the extractor, with cache for backward.
    Tensor<T> syn_fmap = extractor.forward(syn_aug, plane_grad_needed);
    const int plane = syn_fmap.plane();
    const int d = syn_fmap.c;
    std::vector<MatX<T>> syn_pooled(classes);
    std::vector<std::vector<MatX<T>>> syn_desc(classes);
    std::vector<CovarianceStats<T>> syn_cov;
    for (int c = 0; c < classes; ++c) {
        MatX<T> pooled(ipc, d);
        for (int j = 0; j < ipc; ++j) {
            const int row = c * ipc + j;
            for (int ch = 0; ch < d; ++ch) {
                const T* p = syn_fmap.sample_ptr(row) + static_cast<std::size_t>(ch) * plane;
                double acc = 0;
                for (int i = 0; i < plane; ++i) acc += p[i];
                pooled(j, ch) = static_cast<T>(acc / plane);
            }
            syn_desc[c].push_back(local_descriptors(syn_fmap, c * ipc + j));
        }
        syn_pooled[c] = std::move(pooled);
        syn_cov.push_back(class_covariance(syn_desc[c]));
    }

    ObjectiveValue out;
    out.base = dm_loss(real_pooled, syn_pooled);
    out.cm = cm_loss(real_cov, syn_cov);
    for (int c = 0; c < classes; ++c)
        out.cov_gap_mean +=
            std::sqrt(static_cast<double>((syn_cov[c].sigma - real_cov[c].sigma).squaredNorm()));
    out.cov_gap_mean /= classes;

    Tensor<T> pixel_grad_acc;
    if (plane_grad_needed) {
        // Feature-map gradient: base through the pooled means plus the
        // weighted covariance route.
        Tensor<T> gf(syn_fmap.n, syn_fmap.c, syn_fmap.h, syn_fmap.w);
        auto gdm = dm_loss_grad_syn(real_pooled, syn_pooled);
        for (int c = 0; c < classes; ++c)
            for (int j = 0; j < ipc; ++j) {
                T* p = gf.sample_ptr(c * ipc + j);
                for (int ch = 0; ch < d; ++ch) {
                    const T g = static_cast<T>(gdm[c](j, ch) / static_cast<T>(plane));
                    for (int i = 0; i < plane; ++i) p[ch * plane + i] += g;
                }
            }
        if (cm_grad) {
            auto gcm = cm_loss_grad_syn(real_cov, syn_desc, syn_cov);
            const T lcm = static_cast<T>(weights.lambda_cm);
            for (int c = 0; c < classes; ++c)
                for (int j = 0; j < ipc; ++j) {
                    T* p = gf.sample_ptr(c * ipc + j);
                    const MatX<T>& g = gcm[c][j];
                    for (int ch = 0; ch < d; ++ch)
                        for (int i = 0; i < plane; ++i) p[ch * plane + i] += lcm * g(ch, i);
                }
        }
        pixel_grad_acc = extractor.backward(gf, false);
    }

    // Centralization path: frozen embedder over synthetic images only.
    if (weights.lambda_cc > 0) {
        FeatureNet<T> embedder(embedder_spec);
        embedder.load(embedder_params);
        GlobalAvgPool<T> pool;
        Tensor<T> emb_fmap = embedder.forward(syn_aug, plane_grad_needed);
        Tensor<T> emb_pooled = pool.forward(emb_fmap, plane_grad_needed);
        std::vector<MatX<T>> groups(classes);
        for (int c = 0; c < classes; ++c) {
            MatX<T> m(ipc, emb_pooled.c);
            for (int j = 0; j < ipc; ++j)
                for (int ch = 0; ch < emb_pooled.c; ++ch)
                    m(j, ch) = emb_pooled.at(c * ipc + j, ch, 0, 0);
            groups[c] = std::move(m);
        }
        const auto cc = cc_loss(groups, weights.alpha, weights.beta);
        out.cc = cc.value;
        out.cc_clamp_hits = cc.clamp_hits;
        if (plane_grad_needed) {
            auto gcc = cc_loss_grad(groups, weights.alpha, weights.beta);
            Tensor<T> gp(emb_pooled.n, emb_pooled.c, 1, 1);
            const T lcc = static_cast<T>(weights.lambda_cc);
            for (int c = 0; c < classes; ++c)
                for (int j = 0; j < ipc; ++j)
                    for (int ch = 0; ch < emb_pooled.c; ++ch)
                        gp.at(c * ipc + j, ch, 0, 0) = lcc * gcc[c](j, ch);
            Tensor<T> gpix_emb = embedder.backward(pool.backward(gp, false), false);
            pixel_grad_acc = pixel_grad_acc + gpix_emb;
        }
    }

    out.total = combined_loss(out.base, out.cc, out.cm, weights);
    if (plane_grad_needed) *pixel_grad = apply_backward(aug, pixel_grad_acc);
    return out;
}

// Runs the distillation loop. Deterministic given config.master_seed; the
// optional resume state continues an interrupted run with an identical
// iteration stream.
DistillResult distill(const DistillConfig& config, const LabeledImageSet& real,
                      const DistillSinks& sinks = {},
                      const std::optional<ResumeState>& resume_from = std::nullopt);

// Directory checkpoint: pixels.npy + labels.npy + manifest.json, plus
// momentum.npy and provenance.json so a resumed run continues bit-exactly.
void write_checkpoint(const SyntheticDataset& syn, const std::string& dir,
                      const std::string& dataset_name, int iteration,
                      const std::vector<float>* momentum = nullptr);

ResumeState read_checkpoint(const std::string& dir);

}  // namespace distillkit
