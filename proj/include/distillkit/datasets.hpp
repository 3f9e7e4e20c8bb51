#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distillkit/rng.hpp"
#include "distillkit/tensor.hpp"

namespace distillkit {

struct ImageDims {
    int channels = 1, height = 0, width = 0;
};

// A real dataset: N images in [0,1], class ids in [0,C).
struct LabeledImageSet {
    Tensor<float> images;                       // (N, c, h, w)
    std::vector<int> labels;                    // length N
    std::vector<std::vector<int>> class_index;  // class id -> sample indices
    std::string name;
    std::vector<int> parent_index;  // for derived subsets: row -> row in the parent set

    int num_classes() const { return static_cast<int>(class_index.size()); }
    int num_samples() const { return images.n; }

    // Rebuilds class_index from labels and verifies the type invariants.
    void finalize(int num_classes);

    // Subset restricted to the given class ids (labels preserved).
    LabeledImageSet restricted_to(const std::vector<int>& class_ids) const;
};

struct SyntheticProvenance {
    std::uint64_t seed = 0;
    std::vector<int> source_ids;  // real-sample index per synthetic image
};

// The learnable artifact: C*K images whose pixels are the optimization
// variables. Labels are fixed, K consecutive images per class.
struct SyntheticDataset {
    Tensor<float> pixels;  // (C*K, c, h, w)
    std::vector<int> labels;
    int ipc = 0;
    SyntheticProvenance provenance;

    int num_classes() const { return ipc > 0 ? static_cast<int>(labels.size()) / ipc : 0; }
    int class_row(int class_id) const { return class_id * ipc; }
    void check_invariants() const;
};

struct ClassBatch {
    int class_id = 0;
    Tensor<float> images;  // (B, c, h, w)
    std::vector<int> source_indices;
};

// Procedural desk-scale dataset: per class a fixed random template plus
// i.i.d. pixel noise, clamped to [0,1].
LabeledImageSet make_gaussian_class_dataset(int num_classes, int per_class, ImageDims dims,
                                            double template_spread, double noise_sigma,
                                            std::uint64_t seed, const std::string& name = "gaussian");

// root/<class_name>/<image files>; class ids assigned by sorted name.
LabeledImageSet load_image_folder(const std::string& path, ImageDims dims);

// B samples of one class: without replacement when the class is large
// enough, with replacement otherwise.
ClassBatch sample_class_batch(const LabeledImageSet& data, int class_id, int batch, Rng& rng);

// K distinct real samples per class copied as the initial synthetic pixels.
SyntheticDataset init_synthetic_from_real(const LabeledImageSet& data, int ipc, std::uint64_t seed);

// Subset of the listed classes with labels remapped to 0..m-1 in list
// order; parent_index records each row's origin.
LabeledImageSet remap_classes(const LabeledImageSet& data, const std::vector<int>& class_ids);

}  // namespace distillkit
