#include "distillkit/engine.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "distillkit/npy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace distillkit {

namespace {

std::string loss_component_name(int which) {
    switch (which) {
        case 0: return "dm";
        case 1: return "cc";
        case 2: return "cm";
    }
    return "total";
}

}  // namespace

DistillResult distill(const DistillConfig& config, const LabeledImageSet& real,
                      const DistillSinks& sinks, const std::optional<ResumeState>& resume_from) {
    config.validate();
    const int classes = real.num_classes();
    for (int c = 0; c < classes; ++c) {
        if (static_cast<int>(real.class_index[c].size()) < config.ipc)
            throw ConfigError("distill: class " + std::to_string(c) + " smaller than ipc");
    }

    DistillResult result;
    int start_iter = 0;
    std::vector<float> momentum;
    if (resume_from.has_value()) {
        result.synthetic = resume_from->synthetic;
        start_iter = resume_from->iteration;
        momentum = resume_from->momentum;
        if (momentum.empty()) momentum.assign(result.synthetic.pixels.size(), 0.0f);
        if (momentum.size() != result.synthetic.pixels.size())
            throw IntegrityError("distill: momentum state does not match pixel count");
    } else {
        result.synthetic = init_synthetic_from_real(real, config.ipc, config.master_seed);
        momentum.assign(result.synthetic.pixels.size(), 0.0f);
    }
    if (result.synthetic.num_classes() != classes)
        throw ContractError("distill: synthetic class count does not match dataset");

    Tensor<float>& pixels = result.synthetic.pixels;
    const float lr = static_cast<float>(config.optimizer.lr);
    const float mu = static_cast<float>(config.optimizer.momentum);

    for (int t = start_iter; t < config.iterations; ++t) {
        const auto t0 = std::chrono::steady_clock::now();

        const std::uint64_t ext_seed = derive_seed(config.master_seed, "extractor", t);
        Rng ext_rng(ext_seed);
        ExtractorParams ext_params = sample_params(config.extractor, ext_rng, ext_seed);

        Rng aug_rng(derive_seed(config.master_seed, "augment", t));
        AugmentInstance aug = sample_augmentation(config.augment, aug_rng);
        aug.bind_shape(real.images.h, real.images.w);

        Rng batch_rng(derive_seed(config.master_seed, "batch", t));
        std::vector<Tensor<float>> real_batches;
        real_batches.reserve(classes);
        for (int c = 0; c < classes; ++c)
            real_batches.push_back(
                sample_class_batch(real, c, config.batch_per_class, batch_rng).images);

        Tensor<float> grad;
        const ObjectiveValue value =
            combined_objective(config.extractor, ext_params, config.embedder_spec,
                               config.embedder_params, real_batches, pixels,
                               config.ipc, aug, config.weights, &grad);
        result.cc_clamp_hits += value.cc_clamp_hits;

        const double parts[3] = {value.base, value.cc, value.cm};
        for (int i = 0; i < 3; ++i)
            if (!std::isfinite(parts[i]))
                throw NumericError("distill: non-finite " + loss_component_name(i) +
                                   " loss at iteration " + std::to_string(t));
        const double gnorm = l2_norm(grad);
        if (!std::isfinite(gnorm))
            throw NumericError("distill: non-finite pixel gradient at iteration " +
                               std::to_string(t));

        for (std::size_t i = 0; i < pixels.data.size(); ++i) {
            momentum[i] = mu * momentum[i] + grad.data[i];
            pixels.data[i] -= lr * momentum[i];
        }

        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        IterationRecord rec{t, value.base, value.cc, value.cm, value.total,
                            gnorm, ms, value.cov_gap_mean};
        result.records.push_back(rec);
        if (sinks.csv) {
            (*sinks.csv) << t << ',' << rec.loss_base << ',' << rec.loss_cc << ',' << rec.loss_cm
                         << ',' << rec.loss_total << ',' << rec.grad_norm << ',' << rec.ms << '\n';
        }
        if (sinks.on_record) sinks.on_record(rec);
        if (sinks.observer)
            sinks.observer(IterationObservation{t, ext_params.content_hash(), aug});

        if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
            (t + 1) % config.checkpoint_every == 0 && t + 1 < config.iterations) {
            write_checkpoint(result.synthetic, config.checkpoint_dir, config.dataset_name, t + 1,
                             &momentum);
        }
    }

    if (!config.checkpoint_dir.empty())
        write_checkpoint(result.synthetic, config.checkpoint_dir, config.dataset_name,
                         config.iterations, &momentum);
    return result;
}

void write_checkpoint(const SyntheticDataset& syn, const std::string& dir,
                      const std::string& dataset_name, int iteration,
                      const std::vector<float>* momentum) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("checkpoint: cannot create directory " + dir);

    const auto& px = syn.pixels;
    npy::write(dir + "/pixels.npy",
               npy::from_floats(px.data, {static_cast<std::size_t>(px.n),
                                          static_cast<std::size_t>(px.c),
                                          static_cast<std::size_t>(px.h),
                                          static_cast<std::size_t>(px.w)}));
    std::vector<std::int32_t> labels(syn.labels.begin(), syn.labels.end());
    npy::write(dir + "/labels.npy", npy::from_ints(labels, {labels.size()}));

    json manifest = {{"name", dataset_name},
                     {"ipc", syn.ipc},
                     {"C", syn.num_classes()},
                     {"seed", syn.provenance.seed},
                     {"iteration", iteration}};
    std::ofstream mf(dir + "/manifest.json");
    if (!mf) throw IoError("checkpoint: cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';

    json prov = {{"seed", syn.provenance.seed}, {"source_ids", syn.provenance.source_ids}};
    std::ofstream pf(dir + "/provenance.json");
    pf << prov.dump(2) << '\n';

    if (momentum)
        npy::write(dir + "/momentum.npy", npy::from_floats(*momentum, {momentum->size()}));
}

ResumeState read_checkpoint(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("checkpoint: no such directory: " + dir);

    json manifest;
    {
        std::ifstream mf(dir + "/manifest.json");
        if (!mf) throw IntegrityError("checkpoint: missing manifest.json in " + dir);
        try {
            mf >> manifest;
        } catch (const json::exception& e) {
            throw IntegrityError("checkpoint: corrupt manifest.json: " + std::string(e.what()));
        }
    }
    for (const char* key : {"name", "ipc", "C", "seed", "iteration"})
        if (!manifest.contains(key))
            throw IntegrityError("checkpoint: manifest missing field '" + std::string(key) + "'");

    const auto px = npy::read(dir + "/pixels.npy");
    if (px.shape.size() != 4) throw IntegrityError("checkpoint: pixels.npy must be 4-D");
    const auto lab = npy::read(dir + "/labels.npy");

    ResumeState out;
    out.iteration = manifest["iteration"].get<int>();
    out.synthetic.ipc = manifest["ipc"].get<int>();
    out.synthetic.provenance.seed = manifest["seed"].get<std::uint64_t>();
    out.synthetic.pixels = Tensor<float>(static_cast<int>(px.shape[0]), static_cast<int>(px.shape[1]),
                                         static_cast<int>(px.shape[2]), static_cast<int>(px.shape[3]));
    out.synthetic.pixels.data = npy::to_floats(px);
    const auto labels = npy::to_ints(lab);
    out.synthetic.labels.assign(labels.begin(), labels.end());
    if (static_cast<int>(out.synthetic.labels.size()) != out.synthetic.pixels.n)
        throw IntegrityError("checkpoint: labels/pixels length mismatch");
    if (manifest["C"].get<int>() != out.synthetic.num_classes())
        throw IntegrityError("checkpoint: manifest class count does not match labels");

    if (fs::exists(dir + "/provenance.json")) {
        std::ifstream pf(dir + "/provenance.json");
        json prov;
        try {
            pf >> prov;
            out.synthetic.provenance.source_ids =
                prov.value("source_ids", std::vector<int>{});
        } catch (const json::exception&) {
            throw IntegrityError("checkpoint: corrupt provenance.json in " + dir);
        }
    }
    if (fs::exists(dir + "/momentum.npy"))
        out.momentum = npy::to_floats(npy::read(dir + "/momentum.npy"));

    out.synthetic.check_invariants();
    return out;
}

}  // namespace distillkit
