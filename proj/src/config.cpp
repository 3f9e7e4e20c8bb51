#include "distillkit/config.hpp"

#include <filesystem>
#include <fstream>

#include "distillkit/npy.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace distillkit {

namespace {

// Typed field access that reports full config paths on error.
template <typename T>
T field(const json& j, const std::string& path, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + " has the wrong type");
    }
}

const json& section(const json& j, const std::string& key, const json& empty) {
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(key + " must be an object");
    return j.at(key);
}

ExtractorSpec parse_spec(const json& j, const std::string& path, const ExtractorSpec& defaults) {
    ExtractorSpec spec = defaults;
    spec.family = family_from_name(field<std::string>(j, path, "family", family_name(defaults.family)));
    spec.width = field<int>(j, path, "width", defaults.width);
    if (spec.width < 0) throw ConfigError(path + ".width must be >= 0");
    return spec;
}

json spec_json(const ExtractorSpec& spec) {
    return {{"family", family_name(spec.family)}, {"width", spec.width}};
}

}  // namespace

RunConfig parse_config(const json& j) {
    static const json empty = json::object();
    RunConfig cfg;

    {
        const json& d = section(j, "dataset", empty);
        auto& dc = cfg.dataset;
        dc.kind = field<std::string>(d, "dataset", "kind", dc.kind);
        if (dc.kind != "gaussian" && dc.kind != "folder")
            throw ConfigError("dataset.kind must be 'gaussian' or 'folder'");
        dc.name = field<std::string>(d, "dataset", "name", dc.name);
        dc.classes = field<int>(d, "dataset", "classes", dc.classes);
        dc.per_class = field<int>(d, "dataset", "per_class", dc.per_class);
        dc.test_per_class = field<int>(d, "dataset", "test_per_class", dc.test_per_class);
        if (d.contains("shape")) {
            const auto shape = field<std::vector<int>>(d, "dataset", "shape", {});
            if (shape.size() != 3) throw ConfigError("dataset.shape must be [channels, height, width]");
            dc.shape = {shape[0], shape[1], shape[2]};
        }
        dc.template_spread = field<double>(d, "dataset", "template_spread", dc.template_spread);
        dc.noise_sigma = field<double>(d, "dataset", "noise_sigma", dc.noise_sigma);
        dc.seed = field<std::uint64_t>(d, "dataset", "seed", dc.seed);
        dc.train_path = field<std::string>(d, "dataset", "train_path", dc.train_path);
        dc.test_path = field<std::string>(d, "dataset", "test_path", dc.test_path);
        if (dc.kind == "folder" && dc.train_path.empty())
            throw ConfigError("dataset.train_path required for folder datasets");
    }

    {
        const json& d = section(j, "distill", empty);
        auto& dk = cfg.distill;
        dk.dataset_name = cfg.dataset.name;
        dk.ipc = field<int>(d, "distill", "ipc", dk.ipc);
        dk.batch_per_class = field<int>(d, "distill", "batch_per_class", dk.batch_per_class);
        dk.iterations = field<int>(d, "distill", "iterations", dk.iterations);
        const json& opt = section(d, "optimizer", empty);
        dk.optimizer.lr = field<double>(opt, "distill.optimizer", "lr", dk.optimizer.lr);
        dk.optimizer.momentum =
            field<double>(opt, "distill.optimizer", "momentum", dk.optimizer.momentum);
        if (!(dk.optimizer.lr > 0)) throw ConfigError("distill.optimizer.lr must be > 0");
        const json& w = section(d, "weights", empty);
        dk.weights.lambda_cc = field<double>(w, "distill.weights", "lambda_cc", dk.weights.lambda_cc);
        dk.weights.lambda_cm = field<double>(w, "distill.weights", "lambda_cm", dk.weights.lambda_cm);
        dk.weights.alpha = field<double>(w, "distill.weights", "alpha", dk.weights.alpha);
        dk.weights.beta = field<double>(w, "distill.weights", "beta", dk.weights.beta);
        ExtractorSpec def;
        def.family = Family::convnet;
        def.width = 16;
        dk.extractor = parse_spec(section(d, "extractor", empty), "distill.extractor", def);
        dk.extractor.in_channels = cfg.dataset.shape.channels;
        dk.base_loss = field<std::string>(d, "distill", "base_loss", dk.base_loss);
        dk.master_seed = field<std::uint64_t>(d, "distill", "seed", dk.master_seed);
        dk.checkpoint_every = field<int>(d, "distill", "checkpoint_every", dk.checkpoint_every);
    }

    {
        const json& d = section(j, "augment", empty);
        auto& a = cfg.distill.augment;
        a.enabled = field<bool>(d, "augment", "enabled", a.enabled);
        if (d.contains("ops")) {
            a.ops.clear();
            for (const auto& name : field<std::vector<std::string>>(d, "augment", "ops", {}))
                a.ops.push_back(aug_op_from_name(name));
        }
        a.crop_pad_fraction = field<double>(d, "augment", "crop_pad_fraction", a.crop_pad_fraction);
        a.scale_delta = field<double>(d, "augment", "scale_delta", a.scale_delta);
        a.rotate_max_deg = field<double>(d, "augment", "rotate_max_deg", a.rotate_max_deg);
        a.brightness_delta = field<double>(d, "augment", "brightness_delta", a.brightness_delta);
        try {
            a.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("augment: ") + e.what());
        }
    }

    {
        const json& d = section(j, "embedder", empty);
        auto& e = cfg.embedder;
        e.spec = parse_spec(d, "embedder", e.spec);
        e.spec.in_channels = cfg.dataset.shape.channels;
        e.epochs = field<int>(d, "embedder", "epochs", e.epochs);
        if (e.epochs < 1) throw ConfigError("embedder.epochs must be >= 1");
        e.seed = field<std::uint64_t>(d, "embedder", "seed", e.seed);
        e.checkpoint = field<std::string>(d, "embedder", "checkpoint", e.checkpoint);
    }

    {
        const json& d = section(j, "eval", empty);
        auto& ev = cfg.eval_settings;
        ExtractorSpec def;
        def.family = Family::convnet;
        def.width = 16;
        ev.arch = parse_spec(section(d, "arch", empty), "eval.arch", def);
        ev.arch.in_channels = cfg.dataset.shape.channels;
        ev.recipe.epochs = field<int>(d, "eval", "epochs", ev.recipe.epochs);
        if (ev.recipe.epochs < 1) throw ConfigError("eval.epochs must be >= 1");
        ev.recipe.lr = field<double>(d, "eval", "lr", ev.recipe.lr);
        if (!(ev.recipe.lr > 0)) throw ConfigError("eval.lr must be > 0");
        ev.recipe.momentum = field<double>(d, "eval", "momentum", ev.recipe.momentum);
        ev.recipe.weight_decay = field<double>(d, "eval", "weight_decay", ev.recipe.weight_decay);
        ev.recipe.batch = field<int>(d, "eval", "batch", ev.recipe.batch);
        if (ev.recipe.batch < 1) throw ConfigError("eval.batch must be >= 1");
        ev.recipe.cosine_decay = field<bool>(d, "eval", "cosine_decay", ev.recipe.cosine_decay);
        ev.repeats = field<int>(d, "eval", "repeats", ev.repeats);
        if (ev.repeats < 1) throw ConfigError("eval.repeats must be >= 1");
    }

    {
        const json& d = section(j, "xarch", empty);
        const std::pair<Family, int> defaults[4] = {{Family::convnet, 16},
                                                    {Family::alexnet, 8},
                                                    {Family::vgg11, 8},
                                                    {Family::resnet18, 4}};
        for (const auto& [fam, defw] : defaults) {
            ExtractorSpec spec;
            spec.family = fam;
            spec.width = field<int>(d, "xarch", family_name(fam), defw);
            if (spec.width < 1) throw ConfigError("xarch." + family_name(fam) + " must be >= 1");
            spec.in_channels = cfg.dataset.shape.channels;
            cfg.xarch.push_back(spec);
        }
    }

    {
        const json& d = section(j, "continual", empty);
        auto& cl = cfg.continual;
        cl.steps = field<int>(d, "continual", "steps", cl.steps);
        cl.buffer_per_class = field<int>(d, "continual", "buffer_per_class", cl.buffer_per_class);
        cl.method = buffer_method_from_name(
            field<std::string>(d, "continual", "method", buffer_method_name(cl.method)));
        cl.nets_per_step = field<int>(d, "continual", "nets_per_step", cl.nets_per_step);
        cl.class_orders = field<int>(d, "continual", "class_orders", cl.class_orders);
        if (cl.steps < 1) throw ConfigError("continual.steps must be >= 1");
        if (cl.nets_per_step < 1) throw ConfigError("continual.nets_per_step must be >= 1");
        if (cl.class_orders < 1) throw ConfigError("continual.class_orders must be >= 1");
    }

    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

json resolved_json(const RunConfig& cfg) {
    json aug_ops = json::array();
    for (AugOp op : cfg.distill.augment.ops) aug_ops.push_back(aug_op_name(op));
    return {
        {"dataset",
         {{"kind", cfg.dataset.kind},
          {"name", cfg.dataset.name},
          {"classes", cfg.dataset.classes},
          {"per_class", cfg.dataset.per_class},
          {"test_per_class", cfg.dataset.test_per_class},
          {"shape",
           {cfg.dataset.shape.channels, cfg.dataset.shape.height, cfg.dataset.shape.width}},
          {"template_spread", cfg.dataset.template_spread},
          {"noise_sigma", cfg.dataset.noise_sigma},
          {"seed", cfg.dataset.seed},
          {"train_path", cfg.dataset.train_path},
          {"test_path", cfg.dataset.test_path}}},
        {"distill",
         {{"ipc", cfg.distill.ipc},
          {"batch_per_class", cfg.distill.batch_per_class},
          {"iterations", cfg.distill.iterations},
          {"optimizer",
           {{"lr", cfg.distill.optimizer.lr}, {"momentum", cfg.distill.optimizer.momentum}}},
          {"weights",
           {{"lambda_cc", cfg.distill.weights.lambda_cc},
            {"lambda_cm", cfg.distill.weights.lambda_cm},
            {"alpha", cfg.distill.weights.alpha},
            {"beta", cfg.distill.weights.beta}}},
          {"extractor", spec_json(cfg.distill.extractor)},
          {"base_loss", cfg.distill.base_loss},
          {"seed", cfg.distill.master_seed},
          {"checkpoint_every", cfg.distill.checkpoint_every}}},
        {"augment",
         {{"enabled", cfg.distill.augment.enabled},
          {"ops", aug_ops},
          {"crop_pad_fraction", cfg.distill.augment.crop_pad_fraction},
          {"scale_delta", cfg.distill.augment.scale_delta},
          {"rotate_max_deg", cfg.distill.augment.rotate_max_deg},
          {"brightness_delta", cfg.distill.augment.brightness_delta}}},
        {"embedder",
         {{"family", family_name(cfg.embedder.spec.family)},
          {"width", cfg.embedder.spec.width},
          {"epochs", cfg.embedder.epochs},
          {"seed", cfg.embedder.seed},
          {"checkpoint", cfg.embedder.checkpoint}}},
        {"eval",
         {{"arch", spec_json(cfg.eval_settings.arch)},
          {"epochs", cfg.eval_settings.recipe.epochs},
          {"lr", cfg.eval_settings.recipe.lr},
          {"momentum", cfg.eval_settings.recipe.momentum},
          {"weight_decay", cfg.eval_settings.recipe.weight_decay},
          {"batch", cfg.eval_settings.recipe.batch},
          {"cosine_decay", cfg.eval_settings.recipe.cosine_decay},
          {"repeats", cfg.eval_settings.repeats}}},
        {"xarch",
         {{"convnet", cfg.xarch[0].width},
          {"alexnet", cfg.xarch[1].width},
          {"vgg11", cfg.xarch[2].width},
          {"resnet18", cfg.xarch[3].width}}},
        {"continual",
         {{"steps", cfg.continual.steps},
          {"buffer_per_class", cfg.continual.buffer_per_class},
          {"method", buffer_method_name(cfg.continual.method)},
          {"nets_per_step", cfg.continual.nets_per_step},
          {"class_orders", cfg.continual.class_orders}}}};
}

LabeledImageSet build_train_set(const DatasetConfig& dc) {
    if (dc.kind == "gaussian")
        return make_gaussian_class_dataset(dc.classes, dc.per_class, dc.shape, dc.template_spread,
                                           dc.noise_sigma, dc.seed, dc.name);
    auto set = load_image_folder(dc.train_path, dc.shape);
    set.name = dc.name;
    return set;
}

LabeledImageSet build_test_set(const DatasetConfig& dc) {
    if (dc.kind == "gaussian")
        return make_gaussian_class_dataset(dc.classes, dc.test_per_class, dc.shape,
                                           dc.template_spread, dc.noise_sigma,
                                           derive_seed(dc.seed, "test-split"), dc.name);
    if (dc.test_path.empty()) throw ConfigError("dataset.test_path required for this command");
    auto set = load_image_folder(dc.test_path, dc.shape);
    set.name = dc.name;
    return set;
}

void save_embedder(const std::string& dir, const EmbedderCheckpoint& ckpt) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("embedder: cannot create directory " + dir);

    std::vector<float> flat;
    json layout = json::array();
    for (const auto& a : ckpt.params.arrays) {
        layout.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", flat.size()}});
        flat.insert(flat.end(), a.values.begin(), a.values.end());
    }
    npy::write(dir + "/params.npy", npy::from_floats(flat, {flat.size()}));

    json manifest = {{"family", family_name(ckpt.spec.family)},
                     {"width", ckpt.spec.width},
                     {"in_channels", ckpt.spec.in_channels},
                     {"dataset", ckpt.dataset},
                     {"epochs", ckpt.epochs},
                     {"seed", ckpt.seed},
                     {"train_accuracy", ckpt.train_accuracy},
                     {"layout", layout}};
    std::ofstream mf(dir + "/manifest.json");
    if (!mf) throw IoError("embedder: cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';
}

EmbedderCheckpoint load_embedder(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw IntegrityError("embedder: missing manifest.json in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw IntegrityError("embedder: corrupt manifest.json: " + std::string(e.what()));
    }

    EmbedderCheckpoint out;
    out.spec.family = family_from_name(manifest.at("family").get<std::string>());
    out.spec.width = manifest.at("width").get<int>();
    out.spec.in_channels = manifest.at("in_channels").get<int>();
    out.dataset = manifest.at("dataset").get<std::string>();
    out.epochs = manifest.at("epochs").get<int>();
    out.seed = manifest.at("seed").get<std::uint64_t>();
    out.train_accuracy = manifest.at("train_accuracy").get<double>();

    const auto flat = npy::to_floats(npy::read(dir + "/params.npy"));
    out.params.trained = true;
    out.params.init_seed = out.seed;
    for (const auto& entry : manifest.at("layout")) {
        NamedArray a;
        a.name = entry.at("name").get<std::string>();
        a.shape = entry.at("shape").get<std::vector<int>>();
        std::size_t count = 1;
        for (int d : a.shape) count *= static_cast<std::size_t>(d);
        const auto offset = entry.at("offset").get<std::size_t>();
        if (offset + count > flat.size())
            throw IntegrityError("embedder: layout exceeds params.npy length");
        a.values.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                        flat.begin() + static_cast<std::ptrdiff_t>(offset + count));
        out.params.arrays.push_back(std::move(a));
    }
    return out;
}

json report_json(const EvalReport& r) {
    return {{"top1_mean", r.top1_mean}, {"top1_std", r.top1_std},   {"repeats", r.repeats},
            {"trained_on", r.trained_on}, {"arch", r.arch},         {"config_hash", r.config_hash}};
}

json diagnostics_json(const DiagnosticsRecord& rec) {
    return {{"intra_dispersion_per_class", rec.intra_dispersion_per_class},
            {"mean_intra_dispersion", rec.mean_intra_dispersion},
            {"covariance_gap_per_class", rec.covariance_gap_per_class},
            {"mean_covariance_gap", rec.mean_covariance_gap},
            {"inter_intra_ratio", rec.inter_intra_ratio}};
}

}  // namespace distillkit
