#include "distillkit/datasets.hpp"

#include <algorithm>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "distillkit/errors.hpp"

namespace fs = std::filesystem;

namespace distillkit {

void LabeledImageSet::finalize(int num_classes) {
    if (num_classes < 1) throw ConfigError("dataset: need at least one class");
    if (static_cast<int>(labels.size()) != images.n)
        throw ContractError("dataset: labels/images length mismatch");
    class_index.assign(num_classes, {});
    for (int i = 0; i < images.n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes)
            throw ContractError("dataset: label " + std::to_string(y) + " out of range");
        class_index[y].push_back(i);
    }
    for (int c = 0; c < num_classes; ++c)
        if (class_index[c].empty())
            throw ConfigError("dataset: class " + std::to_string(c) + " has no samples");
    for (float v : images.data)
        if (!(v >= 0.0f && v <= 1.0f))
            throw ContractError("dataset: pixel outside [0,1]");
}

LabeledImageSet LabeledImageSet::restricted_to(const std::vector<int>& class_ids) const {
    std::vector<int> keep;
    for (int c : class_ids) {
        if (c < 0 || c >= num_classes()) throw LookupError("restricted_to: unknown class");
        keep.insert(keep.end(), class_index[c].begin(), class_index[c].end());
    }
    std::sort(keep.begin(), keep.end());
    LabeledImageSet out;
    out.name = name;
    out.images = Tensor<float>(static_cast<int>(keep.size()), images.c, images.h, images.w);
    out.labels.resize(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        std::copy(images.sample_ptr(keep[i]), images.sample_ptr(keep[i]) + images.sample_size(),
                  out.images.sample_ptr(static_cast<int>(i)));
        out.labels[i] = labels[keep[i]];
    }
    // Keep original class-id space; untouched classes simply stay empty.
    out.class_index.assign(class_index.size(), {});
    for (std::size_t i = 0; i < keep.size(); ++i)
        out.class_index[out.labels[i]].push_back(static_cast<int>(i));
    return out;
}

void SyntheticDataset::check_invariants() const {
    if (ipc < 1) throw ContractError("synthetic: ipc must be >= 1");
    if (static_cast<int>(labels.size()) != pixels.n)
        throw ContractError("synthetic: labels/pixels length mismatch");
    if (pixels.n % ipc != 0) throw ContractError("synthetic: size not divisible by ipc");
    const int classes = num_classes();
    for (int c = 0; c < classes; ++c)
        for (int j = 0; j < ipc; ++j)
            if (labels[c * ipc + j] != c)
                throw ContractError("synthetic: labels not contiguous per class");
    if (!pixels.all_finite()) throw NumericError("synthetic: non-finite pixel");
}

LabeledImageSet make_gaussian_class_dataset(int num_classes, int per_class, ImageDims dims,
                                            double template_spread, double noise_sigma,
                                            std::uint64_t seed, const std::string& name) {
    if (num_classes < 2) throw ConfigError("gaussian dataset: need >= 2 classes");
    if (per_class < 2) throw ConfigError("gaussian dataset: need >= 2 samples per class");
    if (noise_sigma <= 0) throw ConfigError("gaussian dataset: noise_sigma must be > 0");
    if (dims.channels < 1 || dims.height < 1 || dims.width < 1)
        throw ConfigError("gaussian dataset: invalid image dims");

    const int plane = dims.channels * dims.height * dims.width;
    LabeledImageSet out;
    out.name = name;
    out.images = Tensor<float>(num_classes * per_class, dims.channels, dims.height, dims.width);
    out.labels.resize(static_cast<std::size_t>(num_classes) * per_class);

    Rng template_rng(derive_seed(seed, "gauss-template"));
    std::vector<std::vector<float>> templates(num_classes, std::vector<float>(plane));
    for (int c = 0; c < num_classes; ++c)
        for (int p = 0; p < plane; ++p)
            templates[c][p] = static_cast<float>(0.5 + template_spread * template_rng.normal());

    for (int c = 0; c < num_classes; ++c) {
        Rng noise_rng(derive_seed(seed, "gauss-noise", static_cast<std::uint64_t>(c)));
        for (int i = 0; i < per_class; ++i) {
            const int row = c * per_class + i;
            out.labels[row] = c;
            float* dst = out.images.sample_ptr(row);
            for (int p = 0; p < plane; ++p) {
                const double v = templates[c][p] + noise_sigma * noise_rng.normal();
                dst[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    out.finalize(num_classes);
    return out;
}

LabeledImageSet load_image_folder(const std::string& path, ImageDims dims) {
    if (!fs::is_directory(path)) throw IngestionError("load_image_folder: no such directory: " + path);
    std::vector<std::string> class_names;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_directory()) class_names.push_back(e.path().filename().string());
    std::sort(class_names.begin(), class_names.end());
    if (class_names.empty()) throw IngestionError("load_image_folder: no class directories in " + path);

    std::vector<cv::Mat> decoded;
    std::vector<int> labels;
    for (int c = 0; c < static_cast<int>(class_names.size()); ++c) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(fs::path(path) / class_names[c]))
            if (e.is_regular_file()) files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw IngestionError("load_image_folder: empty class directory: " + class_names[c]);
        for (const auto& f : files) {
            cv::Mat img = cv::imread(f, dims.channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
            if (img.empty()) throw IngestionError("load_image_folder: cannot decode: " + f);
            cv::Mat resized;
            cv::resize(img, resized, cv::Size(dims.width, dims.height), 0, 0, cv::INTER_AREA);
            decoded.push_back(resized);
            labels.push_back(c);
        }
    }

    LabeledImageSet out;
    out.name = fs::path(path).filename().string();
    out.images = Tensor<float>(static_cast<int>(decoded.size()), dims.channels, dims.height, dims.width);
    out.labels = labels;
    for (int i = 0; i < static_cast<int>(decoded.size()); ++i) {
        const cv::Mat& m = decoded[i];
        for (int ch = 0; ch < dims.channels; ++ch)
            for (int y = 0; y < dims.height; ++y)
                for (int x = 0; x < dims.width; ++x) {
                    // OpenCV stores BGR; emit RGB planes.
                    const int src_ch = dims.channels == 1 ? 0 : 2 - ch;
                    const unsigned char v = dims.channels == 1
                                                ? m.at<unsigned char>(y, x)
                                                : m.at<cv::Vec3b>(y, x)[src_ch];
                    out.images.at(i, ch, y, x) = static_cast<float>(v) / 255.0f;
                }
    }
    out.finalize(static_cast<int>(class_names.size()));
    return out;
}

ClassBatch sample_class_batch(const LabeledImageSet& data, int class_id, int batch, Rng& rng) {
    if (class_id < 0 || class_id >= data.num_classes())
        throw LookupError("sample_class_batch: unknown class id " + std::to_string(class_id));
    if (batch < 1) throw ContractError("sample_class_batch: batch must be >= 1");
    const auto& pool = data.class_index[class_id];
    if (pool.empty()) throw LookupError("sample_class_batch: class has no samples");

    std::vector<int> picks;
    picks.reserve(batch);
    if (static_cast<int>(pool.size()) < batch) {
        for (int i = 0; i < batch; ++i) picks.push_back(pool[rng.uniform_int(pool.size())]);
    } else {
        for (int j : rng.sample_without_replacement(static_cast<int>(pool.size()), batch))
            picks.push_back(pool[j]);
    }

    ClassBatch out;
    out.class_id = class_id;
    out.source_indices = picks;
    out.images = Tensor<float>(batch, data.images.c, data.images.h, data.images.w);
    for (int i = 0; i < batch; ++i)
        std::copy(data.images.sample_ptr(picks[i]),
                  data.images.sample_ptr(picks[i]) + data.images.sample_size(),
                  out.images.sample_ptr(i));
    return out;
}

LabeledImageSet remap_classes(const LabeledImageSet& data, const std::vector<int>& class_ids) {
    std::vector<int> rows;
    std::vector<int> new_label_of(data.num_classes(), -1);
    for (std::size_t k = 0; k < class_ids.size(); ++k) {
        const int c = class_ids[k];
        if (c < 0 || c >= data.num_classes()) throw LookupError("remap_classes: unknown class");
        new_label_of[c] = static_cast<int>(k);
        rows.insert(rows.end(), data.class_index[c].begin(), data.class_index[c].end());
    }
    LabeledImageSet out;
    out.name = data.name;
    out.images = Tensor<float>(static_cast<int>(rows.size()), data.images.c, data.images.h,
                               data.images.w);
    out.labels.resize(rows.size());
    out.parent_index = rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(data.images.sample_ptr(rows[i]),
                  data.images.sample_ptr(rows[i]) + data.images.sample_size(),
                  out.images.sample_ptr(static_cast<int>(i)));
        out.labels[i] = new_label_of[data.labels[rows[i]]];
    }
    out.finalize(static_cast<int>(class_ids.size()));
    return out;
}

SyntheticDataset init_synthetic_from_real(const LabeledImageSet& data, int ipc, std::uint64_t seed) {
    if (ipc < 1) throw ConfigError("init_synthetic_from_real: ipc must be >= 1");
    const int classes = data.num_classes();
    for (int c = 0; c < classes; ++c)
        if (static_cast<int>(data.class_index[c].size()) < ipc)
            throw ConfigError("init_synthetic_from_real: class " + std::to_string(c) +
                              " has fewer than ipc samples");

    SyntheticDataset out;
    out.ipc = ipc;
    out.pixels = Tensor<float>(classes * ipc, data.images.c, data.images.h, data.images.w);
    out.labels.resize(static_cast<std::size_t>(classes) * ipc);
    out.provenance.seed = seed;
    out.provenance.source_ids.resize(out.labels.size());

    Rng rng(derive_seed(seed, "syn-init"));
    for (int c = 0; c < classes; ++c) {
        const auto& pool = data.class_index[c];
        const auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), ipc);
        for (int j = 0; j < ipc; ++j) {
            const int row = c * ipc + j;
            const int src = pool[picks[j]];
            out.labels[row] = c;
            out.provenance.source_ids[row] = src;
            std::copy(data.images.sample_ptr(src),
                      data.images.sample_ptr(src) + data.images.sample_size(),
                      out.pixels.sample_ptr(row));
        }
    }
    out.check_invariants();
    return out;
}

}  // namespace distillkit
