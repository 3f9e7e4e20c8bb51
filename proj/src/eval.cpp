#include "distillkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "distillkit/parallel.hpp"

namespace distillkit {

namespace {

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t settings_hash(const Tensor<float>& images, const std::vector<int>& labels,
                            const EvalSettings& s) {
    std::uint64_t h = bytes_hash(images.data.data(), images.data.size() * sizeof(float));
    h = mix64(h ^ bytes_hash(labels.data(), labels.size() * sizeof(int)));
    h = mix64(h ^ hash_tag(family_name(s.arch.family)));
    h = mix64(h ^ static_cast<std::uint64_t>(s.arch.resolved_width()));
    h = mix64(h ^ static_cast<std::uint64_t>(s.recipe.epochs));
    h = mix64(h ^ static_cast<std::uint64_t>(s.recipe.batch));
    h = mix64(h ^ static_cast<std::uint64_t>(s.recipe.lr * 1e9));
    return h;
}

double population_std(const std::vector<double>& xs, double mean) {
    double acc = 0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Greedy selections share this per-class feature view.
MatX<float> class_features(const MatX<float>& all, const std::vector<int>& rows) {
    MatX<float> out(static_cast<Eigen::Index>(rows.size()), all.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = all.row(rows[i]);
    return out;
}

SyntheticDataset selection_to_synthetic(const LabeledImageSet& data, int ipc,
                                        const std::vector<std::vector<int>>& picks_per_class,
                                        std::uint64_t seed) {
    SyntheticDataset out;
    out.ipc = ipc;
    const int classes = data.num_classes();
    out.pixels = Tensor<float>(classes * ipc, data.images.c, data.images.h, data.images.w);
    out.labels.resize(static_cast<std::size_t>(classes) * ipc);
    out.provenance.seed = seed;
    out.provenance.source_ids.resize(out.labels.size());
    for (int c = 0; c < classes; ++c)
        for (int j = 0; j < ipc; ++j) {
            const int row = c * ipc + j;
            const int src = picks_per_class[c][j];
            out.labels[row] = c;
            out.provenance.source_ids[row] = src;
            std::copy(data.images.sample_ptr(src),
                      data.images.sample_ptr(src) + data.images.sample_size(),
                      out.pixels.sample_ptr(row));
        }
    out.check_invariants();
    return out;
}

void require_class_size(const LabeledImageSet& data, int ipc, const char* who) {
    for (int c = 0; c < data.num_classes(); ++c)
        if (static_cast<int>(data.class_index[c].size()) < ipc)
            throw ConfigError(std::string(who) + ": class " + std::to_string(c) +
                              " has fewer than " + std::to_string(ipc) + " samples");
}

}  // namespace

MatX<float> pooled_extractor_features(const ExtractorSpec& spec, const ExtractorParams& params,
                                      const Tensor<float>& images, int batch) {
    FeatureNet<float> net(spec);
    net.load(params);
    MatX<float> out(images.n, spec.feature_dim());
    for (int first = 0; first < images.n; first += batch) {
        const int count = std::min(batch, images.n - first);
        Tensor<float> fmap = net.forward(images.slice(first, count), false);
        const int plane = fmap.plane();
        for (int i = 0; i < count; ++i)
            for (int ch = 0; ch < fmap.c; ++ch) {
                const float* p = fmap.sample_ptr(i) + static_cast<std::size_t>(ch) * plane;
                double acc = 0;
                for (int k = 0; k < plane; ++k) acc += p[k];
                out(first + i, ch) = static_cast<float>(acc / plane);
            }
    }
    return out;
}

EvalReport evaluate_images(const Tensor<float>& images, const std::vector<int>& labels,
                           int num_classes, const EvalSettings& settings,
                           const LabeledImageSet& test, std::uint64_t seed) {
    if (settings.repeats < 1) throw ConfigError("evaluate: repeats must be >= 1");
    for (int y : test.labels)
        if (y >= num_classes)
            throw ContractError("evaluate: test label outside the trained class space");

    std::vector<double> accs(settings.repeats, 0.0);
    ExtractorSpec arch = settings.arch;
    arch.in_channels = images.c;
    parallel_for(settings.repeats, [&](int r) {
        ClassifierNet<float> net(arch, num_classes);
        train_classifier(net, images, labels, settings.recipe,
                         derive_seed(seed, "eval-repeat", static_cast<std::uint64_t>(r)));
        accs[r] = accuracy_top1(net, test.images, test.labels);
    });

    EvalReport report;
    report.repeats = settings.repeats;
    report.trained_on = settings.trained_on;
    report.arch = family_name(arch.family);
    report.top1_mean = std::accumulate(accs.begin(), accs.end(), 0.0) / settings.repeats;
    report.top1_std = population_std(accs, report.top1_mean);
    report.config_hash = hex64(settings_hash(images, labels, settings));
    return report;
}

EvalReport evaluate_from_scratch(const SyntheticDataset& syn, const EvalSettings& settings,
                                 const LabeledImageSet& test, std::uint64_t seed) {
    syn.check_invariants();
    return evaluate_images(syn.pixels, syn.labels, syn.num_classes(), settings, test, seed);
}

SyntheticDataset coreset_random(const LabeledImageSet& data, int ipc, std::uint64_t seed) {
    require_class_size(data, ipc, "coreset_random");
    std::vector<std::vector<int>> picks(data.num_classes());
    Rng rng(derive_seed(seed, "coreset-random"));
    for (int c = 0; c < data.num_classes(); ++c) {
        const auto& pool = data.class_index[c];
        for (int j : rng.sample_without_replacement(static_cast<int>(pool.size()), ipc))
            picks[c].push_back(pool[j]);
    }
    return selection_to_synthetic(data, ipc, picks, seed);
}

SyntheticDataset coreset_herding(const LabeledImageSet& data, int ipc,
                                 const ExtractorSpec& embedder_spec,
                                 const ExtractorParams& embedder_params) {
    require_class_size(data, ipc, "coreset_herding");
    const MatX<float> feats = pooled_extractor_features(embedder_spec, embedder_params, data.images);
    std::vector<std::vector<int>> picks(data.num_classes());
    for (int c = 0; c < data.num_classes(); ++c) {
        const auto& pool = data.class_index[c];
        const MatX<float> f = class_features(feats, pool);
        const VecX<float> mu = f.colwise().mean().transpose();
        std::vector<bool> used(pool.size(), false);
        VecX<float> selected_sum = VecX<float>::Zero(f.cols());
        // Greedy: each pick keeps the running selected mean closest to mu.
        for (int m = 1; m <= ipc; ++m) {
            int best = -1;
            double best_dist = 0;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (used[i]) continue;
                const double dist =
                    (mu - (selected_sum + f.row(static_cast<Eigen::Index>(i)).transpose()) /
                              static_cast<float>(m))
                        .squaredNorm();
                if (best < 0 || dist < best_dist) {
                    best = static_cast<int>(i);
                    best_dist = dist;
                }
            }
            used[best] = true;
            selected_sum += f.row(best).transpose();
            picks[c].push_back(pool[best]);
        }
    }
    return selection_to_synthetic(data, ipc, picks, /*seed=*/0);
}

SyntheticDataset coreset_kcenter(const LabeledImageSet& data, int ipc,
                                 const ExtractorSpec& embedder_spec,
                                 const ExtractorParams& embedder_params) {
    require_class_size(data, ipc, "coreset_kcenter");
    const MatX<float> feats = pooled_extractor_features(embedder_spec, embedder_params, data.images);
    std::vector<std::vector<int>> picks(data.num_classes());
    for (int c = 0; c < data.num_classes(); ++c) {
        const auto& pool = data.class_index[c];
        const MatX<float> f = class_features(feats, pool);
        const VecX<float> mu = f.colwise().mean().transpose();
        // Farthest-point traversal seeded at the mean-nearest sample.
        int first = 0;
        double best = (f.row(0).transpose() - mu).squaredNorm();
        for (Eigen::Index i = 1; i < f.rows(); ++i) {
            const double d = (f.row(i).transpose() - mu).squaredNorm();
            if (d < best) {
                best = d;
                first = static_cast<int>(i);
            }
        }
        std::vector<int> chosen = {first};
        std::vector<double> nearest(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i)
            nearest[i] = (f.row(static_cast<Eigen::Index>(i)) - f.row(first)).squaredNorm();
        while (static_cast<int>(chosen.size()) < ipc) {
            int far = -1;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (std::find(chosen.begin(), chosen.end(), static_cast<int>(i)) != chosen.end())
                    continue;
                if (far < 0 || nearest[i] > nearest[far]) far = static_cast<int>(i);
            }
            chosen.push_back(far);
            for (std::size_t i = 0; i < pool.size(); ++i)
                nearest[i] = std::min(nearest[i],
                                      static_cast<double>((f.row(static_cast<Eigen::Index>(i)) -
                                                           f.row(far))
                                                              .squaredNorm()));
        }
        for (int idx : chosen) picks[c].push_back(pool[idx]);
    }
    return selection_to_synthetic(data, ipc, picks, /*seed=*/0);
}

std::vector<EvalReport> cross_architecture(const SyntheticDataset& syn,
                                           const std::vector<ExtractorSpec>& arch_list,
                                           const TrainRecipe& recipe, int repeats,
                                           const LabeledImageSet& test, std::uint64_t seed) {
    std::vector<EvalReport> reports(arch_list.size());
    for (std::size_t a = 0; a < arch_list.size(); ++a) {
        EvalSettings st;
        st.arch = arch_list[a];
        st.recipe = recipe;
        st.repeats = repeats;
        reports[a] = evaluate_from_scratch(syn, st, test,
                                           derive_seed(seed, "xarch", static_cast<std::uint64_t>(a)));
    }
    return reports;
}

SweepAxis sweep_axis_from_name(const std::string& s) {
    if (s == "beta") return SweepAxis::beta;
    if (s == "lambda_cc") return SweepAxis::lambda_cc;
    if (s == "lambda_cm") return SweepAxis::lambda_cm;
    if (s == "iterations") return SweepAxis::iterations;
    if (s == "ipc") return SweepAxis::ipc;
    throw ConfigError("sweep: unknown axis '" + s + "'");
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::beta: return "beta";
        case SweepAxis::lambda_cc: return "lambda_cc";
        case SweepAxis::lambda_cm: return "lambda_cm";
        case SweepAxis::iterations: return "iterations";
        case SweepAxis::ipc: return "ipc";
    }
    return "?";
}

SweepTable sweep(const DistillConfig& base, SweepAxis axis, const std::vector<double>& values,
                 const LabeledImageSet& real, const LabeledImageSet& test,
                 const EvalSettings& settings) {
    if (values.empty()) throw ConfigError("sweep: value list is empty");
    SweepTable table;
    table.axis = axis;
    table.rows.resize(values.size());
    parallel_for(static_cast<int>(values.size()), [&](int i) {
        DistillConfig cfg = base;
        switch (axis) {
            case SweepAxis::beta: cfg.weights.beta = values[i]; break;
            case SweepAxis::lambda_cc: cfg.weights.lambda_cc = values[i]; break;
            case SweepAxis::lambda_cm: cfg.weights.lambda_cm = values[i]; break;
            case SweepAxis::iterations: cfg.iterations = static_cast<int>(values[i]); break;
            case SweepAxis::ipc: cfg.ipc = static_cast<int>(values[i]); break;
        }
        DistillResult run = distill(cfg, real);
        EvalReport report = evaluate_from_scratch(run.synthetic, settings, test,
                                                  derive_seed(cfg.master_seed, "sweep-eval",
                                                              static_cast<std::uint64_t>(i)));
        SweepRow row;
        row.value = values[i];
        row.top1_mean = report.top1_mean;
        row.top1_std = report.top1_std;
        if (!cfg.embedder_params.arrays.empty()) {
            DiagnosticsRecord diag = diagnostics(run.synthetic, real, cfg.embedder_spec,
                                                 cfg.embedder_params, cfg.extractor,
                                                 derive_seed(cfg.master_seed, "sweep-diag"));
            row.dispersion = diag.mean_intra_dispersion;
        }
        table.rows[i] = row;
    });
    return table;
}

BufferMethod buffer_method_from_name(const std::string& s) {
    if (s == "distill") return BufferMethod::distill;
    if (s == "herding") return BufferMethod::herding;
    if (s == "random") return BufferMethod::random;
    throw ConfigError("continual: unknown method '" + s + "'");
}

std::string buffer_method_name(BufferMethod m) {
    switch (m) {
        case BufferMethod::distill: return "distill";
        case BufferMethod::herding: return "herding";
        case BufferMethod::random: return "random";
    }
    return "?";
}

ContinualResult continual_learning(const LabeledImageSet& real, const LabeledImageSet& test,
                                   const ContinualSettings& cl, const DistillConfig& distill_base,
                                   const EvalSettings& eval_settings, std::uint64_t seed) {
    const int classes = real.num_classes();
    if (cl.steps < 1 || classes % cl.steps != 0)
        throw ConfigError("continual: steps must divide the class count");
    if (cl.method == BufferMethod::distill && cl.buffer_per_class < 2)
        throw ConfigError("continual: buffer_per_class must be >= 2 for distillation");
    const int group = classes / cl.steps;

    ContinualResult result;
    result.per_order.assign(cl.class_orders, std::vector<double>(cl.steps, 0.0));

    parallel_for(cl.class_orders, [&](int o) {
        std::vector<int> order(classes);
        std::iota(order.begin(), order.end(), 0);
        Rng order_rng(derive_seed(seed, "cl-order", static_cast<std::uint64_t>(o)));
        order_rng.shuffle(order.begin(), order.end());

        Tensor<float> buffer;
        std::vector<int> buffer_labels;
        std::vector<int> seen;
        for (int s = 0; s < cl.steps; ++s) {
            const std::vector<int> fresh(order.begin() + s * group, order.begin() + (s + 1) * group);
            seen.insert(seen.end(), fresh.begin(), fresh.end());

            // Refill the buffer for the new classes only.
            Tensor<float> add_images;
            std::vector<int> add_labels;
            const std::uint64_t step_seed =
                derive_seed(seed, "cl-step", static_cast<std::uint64_t>(o),
                            static_cast<std::uint64_t>(s));
            if (cl.method == BufferMethod::distill) {
                LabeledImageSet sub = remap_classes(real, fresh);
                DistillConfig cfg = distill_base;
                cfg.dataset_name = sub.name;
                cfg.ipc = cl.buffer_per_class;
                cfg.master_seed = step_seed;
                cfg.checkpoint_dir.clear();
                DistillResult run = distill(cfg, sub);
                add_images = run.synthetic.pixels;
                add_labels.resize(run.synthetic.labels.size());
                for (std::size_t i = 0; i < add_labels.size(); ++i)
                    add_labels[i] = fresh[run.synthetic.labels[i]];
            } else {
                std::vector<std::vector<int>> picks;
                if (cl.method == BufferMethod::random) {
                    Rng rng(derive_seed(step_seed, "cl-random"));
                    for (int c : fresh) {
                        const auto& pool = real.class_index[c];
                        if (static_cast<int>(pool.size()) < cl.buffer_per_class)
                            throw ConfigError("continual: class too small for buffer");
                        std::vector<int> p;
                        for (int j : rng.sample_without_replacement(static_cast<int>(pool.size()),
                                                                     cl.buffer_per_class))
                            p.push_back(pool[j]);
                        picks.push_back(std::move(p));
                    }
                } else {
                    LabeledImageSet sub = remap_classes(real, fresh);
                    SyntheticDataset sel = coreset_herding(sub, cl.buffer_per_class,
                                                           distill_base.embedder_spec,
                                                           distill_base.embedder_params);
                    // Map remapped source indices back to the parent set.
                    picks.assign(fresh.size(), {});
                    for (std::size_t i = 0; i < sel.provenance.source_ids.size(); ++i) {
                        const int local_class = sel.labels[i];
                        picks[local_class].push_back(sub.parent_index[sel.provenance.source_ids[i]]);
                    }
                }
                const int n_add = static_cast<int>(fresh.size()) * cl.buffer_per_class;
                add_images = Tensor<float>(n_add, real.images.c, real.images.h, real.images.w);
                add_labels.resize(n_add);
                int row = 0;
                for (std::size_t k = 0; k < fresh.size(); ++k)
                    for (int j = 0; j < cl.buffer_per_class; ++j, ++row) {
                        std::copy(real.images.sample_ptr(picks[k][j]),
                                  real.images.sample_ptr(picks[k][j]) + real.images.sample_size(),
                                  add_images.sample_ptr(row));
                        add_labels[row] = fresh[k];
                    }
            }

            // Grow the buffer.
            if (buffer.n == 0) {
                buffer = add_images;
                buffer_labels = add_labels;
            } else {
                Tensor<float> merged(buffer.n + add_images.n, buffer.c, buffer.h, buffer.w);
                std::copy(buffer.data.begin(), buffer.data.end(), merged.data.begin());
                std::copy(add_images.data.begin(), add_images.data.end(),
                          merged.data.begin() + static_cast<std::ptrdiff_t>(buffer.data.size()));
                buffer = std::move(merged);
                buffer_labels.insert(buffer_labels.end(), add_labels.begin(), add_labels.end());
            }

            // Train fresh networks on the whole buffer, test on seen classes.
            LabeledImageSet seen_test = test.restricted_to(seen);
            double acc = 0;
            for (int net_i = 0; net_i < cl.nets_per_step; ++net_i) {
                ExtractorSpec arch = eval_settings.arch;
                arch.in_channels = buffer.c;
                ClassifierNet<float> net(arch, classes);
                train_classifier(net, buffer, buffer_labels, eval_settings.recipe,
                                 derive_seed(step_seed, "cl-net", static_cast<std::uint64_t>(net_i)));
                acc += accuracy_top1(net, seen_test.images, seen_test.labels);
            }
            result.per_order[o][s] = acc / cl.nets_per_step;
        }
    });

    result.step_mean.resize(cl.steps);
    result.step_std.resize(cl.steps);
    for (int s = 0; s < cl.steps; ++s) {
        std::vector<double> col;
        for (int o = 0; o < cl.class_orders; ++o) col.push_back(result.per_order[o][s]);
        result.step_mean[s] = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
        result.step_std[s] = population_std(col, result.step_mean[s]);
    }
    return result;
}

DiagnosticsRecord diagnostics(const SyntheticDataset& syn, const LabeledImageSet& real,
                              const ExtractorSpec& embedder_spec,
                              const ExtractorParams& embedder_params,
                              const ExtractorSpec& extractor_spec, std::uint64_t extractor_seed) {
    syn.check_invariants();
    if (syn.ipc < 2) throw ContractError("diagnostics: needs ipc >= 2");
    const int classes = syn.num_classes();
    DiagnosticsRecord rec;

    // Intra-class dispersion and inter/intra ratio in embedder feature space.
    const MatX<float> feats =
        pooled_extractor_features(embedder_spec, embedder_params, syn.pixels);
    MatX<double> class_means(classes, feats.cols());
    for (int c = 0; c < classes; ++c) {
        MatX<double> block = feats.middleRows(c * syn.ipc, syn.ipc).cast<double>();
        VecX<double> mu = block.colwise().mean().transpose();
        class_means.row(c) = mu.transpose();
        double disp = 0;
        for (int j = 0; j < syn.ipc; ++j)
            disp += (block.row(j).transpose() - mu).squaredNorm();
        rec.intra_dispersion_per_class.push_back(disp / syn.ipc);
    }
    rec.mean_intra_dispersion =
        std::accumulate(rec.intra_dispersion_per_class.begin(),
                        rec.intra_dispersion_per_class.end(), 0.0) /
        classes;
    VecX<double> global_mean = class_means.colwise().mean().transpose();
    double inter = 0;
    for (int c = 0; c < classes; ++c)
        inter += (class_means.row(c).transpose() - global_mean).squaredNorm();
    inter /= classes;
    rec.inter_intra_ratio = inter / (rec.mean_intra_dispersion + 1e-12);

    // Per-class local-covariance gap under one seeded random extractor.
    Rng ext_rng(derive_seed(extractor_seed, "diag-extractor"));
    ExtractorSpec ext = extractor_spec;
    ext.in_channels = syn.pixels.c;
    const ExtractorParams ext_params = sample_params(ext, ext_rng, extractor_seed);
    FeatureNet<float> net(ext);
    net.load(ext_params);

    auto descriptors_of = [&](const Tensor<float>& images) {
        std::vector<MatX<float>> out;
        const int batch = 256;
        for (int first = 0; first < images.n; first += batch) {
            const int count = std::min(batch, images.n - first);
            Tensor<float> fmap = net.forward(images.slice(first, count), false);
            for (int i = 0; i < count; ++i) out.push_back(local_descriptors(fmap, i));
        }
        return out;
    };

    const auto syn_desc = descriptors_of(syn.pixels);
    for (int c = 0; c < classes; ++c) {
        std::vector<MatX<float>> sd(syn_desc.begin() + c * syn.ipc,
                                    syn_desc.begin() + (c + 1) * syn.ipc);
        const auto syn_cov = class_covariance(sd);

        const auto& pool = real.class_index[c];
        Tensor<float> class_images(static_cast<int>(pool.size()), real.images.c, real.images.h,
                                   real.images.w);
        for (std::size_t i = 0; i < pool.size(); ++i)
            std::copy(real.images.sample_ptr(pool[i]),
                      real.images.sample_ptr(pool[i]) + real.images.sample_size(),
                      class_images.sample_ptr(static_cast<int>(i)));
        const auto real_cov = class_covariance(descriptors_of(class_images));
        rec.covariance_gap_per_class.push_back(
            std::sqrt((syn_cov.sigma - real_cov.sigma).squaredNorm()));
    }
    rec.mean_covariance_gap =
        std::accumulate(rec.covariance_gap_per_class.begin(), rec.covariance_gap_per_class.end(),
                        0.0) /
        classes;
    return rec;
}

void export_projection(const SyntheticDataset& syn, const LabeledImageSet& real,
                       const ExtractorSpec& embedder_spec, const ExtractorParams& embedder_params,
                       const std::string& real_csv_path, const std::string& syn_csv_path) {
    const MatX<float> rf = pooled_extractor_features(embedder_spec, embedder_params, real.images);
    const MatX<float> sf = pooled_extractor_features(embedder_spec, embedder_params, syn.pixels);
    VecX<double> mean = rf.cast<double>().colwise().mean().transpose();
    MatX<double> centered = rf.cast<double>().rowwise() - mean.transpose();
    MatX<double> cov = centered.transpose() * centered / static_cast<double>(rf.rows());
    Eigen::SelfAdjointEigenSolver<MatX<double>> eig(cov);
    // Eigenvalues ascend; the last two columns span the leading plane.
    MatX<double> basis = eig.eigenvectors().rightCols(2);

    auto dump = [&](const MatX<float>& f, const std::vector<int>& labels, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw IoError("export_projection: cannot write " + path);
        out << "x,y,class\n";
        MatX<double> proj = (f.cast<double>().rowwise() - mean.transpose()) * basis;
        for (Eigen::Index i = 0; i < proj.rows(); ++i)
            out << proj(i, 1) << ',' << proj(i, 0) << ',' << labels[static_cast<std::size_t>(i)]
                << '\n';
    };
    dump(rf, real.labels, real_csv_path);
    dump(sf, syn.labels, syn_csv_path);
}

void write_sweep_csv(const SweepTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("sweep: cannot write " + path);
    out << sweep_axis_name(table.axis) << ",top1_mean,top1_std,dispersion\n";
    for (const auto& row : table.rows)
        out << row.value << ',' << row.top1_mean << ',' << row.top1_std << ',' << row.dispersion
            << '\n';
}

void write_continual_csv(const ContinualResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("continual: cannot write " + path);
    out << "step,acc_mean,acc_std\n";
    for (std::size_t s = 0; s < result.step_mean.size(); ++s)
        out << s + 1 << ',' << result.step_mean[s] << ',' << result.step_std[s] << '\n';
}

}  // namespace distillkit
