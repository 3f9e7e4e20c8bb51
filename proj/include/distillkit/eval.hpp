#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distillkit/engine.hpp"
#include "distillkit/training.hpp"

namespace distillkit {

// Top-1 statistics of training freshly initialized networks on some
// training material and testing on held-out data.
struct EvalReport {
    double top1_mean = 0;
    double top1_std = 0;
    int repeats = 0;
    std::string trained_on;  // "synthetic" / "coreset" / "full"
    std::string arch;
    std::string config_hash;
};

struct EvalSettings {
    ExtractorSpec arch;
    TrainRecipe recipe;
    int repeats = 5;
    std::string trained_on = "synthetic";
};

// Quantitative stand-ins for the usual embedding scatter plots.
struct DiagnosticsRecord {
    std::vector<double> intra_dispersion_per_class;  // mean sq dist to class mean
    double mean_intra_dispersion = 0;
    std::vector<double> covariance_gap_per_class;  // Frobenius distance real vs syn
    double mean_covariance_gap = 0;
    double inter_intra_ratio = 0;
};

// Fresh-init training on (images, labels), Top-1 on the test set,
// repeated with derived seeds; repeats run in parallel.
EvalReport evaluate_images(const Tensor<float>& images, const std::vector<int>& labels,
                           int num_classes, const EvalSettings& settings,
                           const LabeledImageSet& test, std::uint64_t seed);

EvalReport evaluate_from_scratch(const SyntheticDataset& syn, const EvalSettings& settings,
                                 const LabeledImageSet& test, std::uint64_t seed);

// Selected (not learned) baselines. Herding and k-center operate in the
// frozen embedder's pooled feature space.
SyntheticDataset coreset_random(const LabeledImageSet& data, int ipc, std::uint64_t seed);
SyntheticDataset coreset_herding(const LabeledImageSet& data, int ipc,
                                 const ExtractorSpec& embedder_spec,
                                 const ExtractorParams& embedder_params);
SyntheticDataset coreset_kcenter(const LabeledImageSet& data, int ipc,
                                 const ExtractorSpec& embedder_spec,
                                 const ExtractorParams& embedder_params);

std::vector<EvalReport> cross_architecture(const SyntheticDataset& syn,
                                           const std::vector<ExtractorSpec>& arch_list,
                                           const TrainRecipe& recipe, int repeats,
                                           const LabeledImageSet& test, std::uint64_t seed);

// One distill + evaluate cycle per swept value, shared master seed.
enum class SweepAxis { beta, lambda_cc, lambda_cm, iterations, ipc };

SweepAxis sweep_axis_from_name(const std::string& s);
std::string sweep_axis_name(SweepAxis axis);

struct SweepRow {
    double value = 0;
    double top1_mean = 0;
    double top1_std = 0;
    double dispersion = 0;  // mean intra-class embedder dispersion of the result
};

struct SweepTable {
    SweepAxis axis = SweepAxis::beta;
    std::vector<SweepRow> rows;
};

SweepTable sweep(const DistillConfig& base, SweepAxis axis, const std::vector<double>& values,
                 const LabeledImageSet& real, const LabeledImageSet& test,
                 const EvalSettings& settings);

inline SweepTable sweep_beta(const DistillConfig& base, const std::vector<double>& values,
                             const LabeledImageSet& real, const LabeledImageSet& test,
                             const EvalSettings& settings) {
    return sweep(base, SweepAxis::beta, values, real, test, settings);
}
inline SweepTable sweep_lambda(const DistillConfig& base, SweepAxis axis,
                               const std::vector<double>& values, const LabeledImageSet& real,
                               const LabeledImageSet& test, const EvalSettings& settings) {
    if (axis != SweepAxis::lambda_cc && axis != SweepAxis::lambda_cm)
        throw ConfigError("sweep_lambda: axis must be lambda_cc or lambda_cm");
    return sweep(base, axis, values, real, test, settings);
}
inline SweepTable sweep_iterations(const DistillConfig& base, const std::vector<double>& probes,
                                   const LabeledImageSet& real, const LabeledImageSet& test,
                                   const EvalSettings& settings) {
    return sweep(base, SweepAxis::iterations, probes, real, test, settings);
}
inline SweepTable sweep_ipc(const DistillConfig& base, const std::vector<double>& values,
                            const LabeledImageSet& real, const LabeledImageSet& test,
                            const EvalSettings& settings) {
    return sweep(base, SweepAxis::ipc, values, real, test, settings);
}

// Class-incremental protocol: per step, refill the buffer for the newly
// arrived classes (by distillation or selection), train fresh networks on
// the whole buffer, and measure Top-1 over all seen classes.
enum class BufferMethod { distill, herding, random };

BufferMethod buffer_method_from_name(const std::string& s);
std::string buffer_method_name(BufferMethod m);

struct ContinualResult {
    std::vector<double> step_mean;  // accuracy per step, mean over class orders
    std::vector<double> step_std;
    std::vector<std::vector<double>> per_order;  // [order][step]
};

struct ContinualSettings {
    int steps = 5;
    int buffer_per_class = 10;
    BufferMethod method = BufferMethod::distill;
    int nets_per_step = 3;
    int class_orders = 5;
};

ContinualResult continual_learning(const LabeledImageSet& real, const LabeledImageSet& test,
                                   const ContinualSettings& cl, const DistillConfig& distill_base,
                                   const EvalSettings& eval_settings, std::uint64_t seed);

// Pooled features of a frozen extractor over a full image set.
MatX<float> pooled_extractor_features(const ExtractorSpec& spec, const ExtractorParams& params,
                                      const Tensor<float>& images, int batch = 256);

DiagnosticsRecord diagnostics(const SyntheticDataset& syn, const LabeledImageSet& real,
                              const ExtractorSpec& embedder_spec,
                              const ExtractorParams& embedder_params,
                              const ExtractorSpec& extractor_spec, std::uint64_t extractor_seed);

// 2-D linear projection of embedder features onto the top-2 principal
// directions of the real features; rows of (x, y, class).
void export_projection(const SyntheticDataset& syn, const LabeledImageSet& real,
                       const ExtractorSpec& embedder_spec, const ExtractorParams& embedder_params,
                       const std::string& real_csv_path, const std::string& syn_csv_path);

void write_sweep_csv(const SweepTable& table, const std::string& path);
void write_continual_csv(const ContinualResult& result, const std::string& path);

}  // namespace distillkit
