#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "distillkit/engine.hpp"
#include "distillkit/eval.hpp"

namespace distillkit {

struct DatasetConfig {
    std::string kind = "gaussian";  // "gaussian" or "folder"
    std::string name = "toy10";
    int classes = 10;
    int per_class = 100;
    int test_per_class = 50;
    ImageDims shape{1, 10, 10};
    double template_spread = 0.35;
    double noise_sigma = 0.35;
    std::uint64_t seed = 11;
    std::string train_path;
    std::string test_path;
};

struct EmbedderConfig {
    ExtractorSpec spec;  // family resnet18 by default
    int epochs = 30;
    std::uint64_t seed = 5;
    std::string checkpoint;  // load when set, otherwise pretrain on the train set

    EmbedderConfig() {
        spec.family = Family::resnet18;
        spec.width = 4;
    }
};

// Fully resolved run configuration: one file drives every subcommand.
struct RunConfig {
    DatasetConfig dataset;
    DistillConfig distill;
    EmbedderConfig embedder;
    EvalSettings eval_settings;
    ContinualSettings continual;
    // Cross-architecture evaluation list; width per family, convnet first.
    std::vector<ExtractorSpec> xarch;
};

// Parses and validates; throws ConfigError naming the offending field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// The full configuration with all defaults materialized; reparsing this
// JSON yields an equal configuration.
nlohmann::json resolved_json(const RunConfig& config);

// Datasets derived from the dataset section.
LabeledImageSet build_train_set(const DatasetConfig& dc);
LabeledImageSet build_test_set(const DatasetConfig& dc);

// Trained-embedder checkpoint: params.npy plus a JSON manifest carrying the
// architecture, provenance and parameter layout.
struct EmbedderCheckpoint {
    ExtractorSpec spec;
    ExtractorParams params;
    std::string dataset;
    int epochs = 0;
    std::uint64_t seed = 0;
    double train_accuracy = 0;
};

void save_embedder(const std::string& dir, const EmbedderCheckpoint& ckpt);
EmbedderCheckpoint load_embedder(const std::string& dir);

nlohmann::json report_json(const EvalReport& report);
nlohmann::json diagnostics_json(const DiagnosticsRecord& rec);

}  // namespace distillkit
