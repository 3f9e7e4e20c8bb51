#include "distillkit/cli_commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "distillkit/config.hpp"
#include "distillkit/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace distillkit {

namespace {

using OutputList = std::vector<std::string>;

int run_command(const std::string& name, const CliOptions& opts,
                const std::function<OutputList(RunConfig&)>& body) {
    const std::string started = iso8601_now();
    try {
        if (opts.config_path.empty()) throw ConfigError("--config is required");
        if (opts.out_dir.empty()) throw ConfigError("--out is required");
        std::error_code ec;
        fs::create_directories(opts.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + opts.out_dir);

        RunConfig cfg = load_config(opts.config_path);
        if (opts.seed_override) cfg.distill.master_seed = *opts.seed_override;

        OutputList outputs = body(cfg);
        write_run_manifest(opts.out_dir, name, resolved_json(cfg), started, outputs);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error:config:" << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error:io:" << e.what() << "\n";
        return 4;
    } catch (const IntegrityError& e) {
        std::cerr << "error:integrity:" << e.what() << "\n";
        return 4;
    } catch (const IngestionError& e) {
        std::cerr << "error:ingestion:" << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error:runtime:" << e.what() << "\n";
        return 3;
    }
}

// Loads the configured embedder checkpoint or pretrains one into out_dir.
void ensure_embedder(RunConfig& cfg, const LabeledImageSet& train, const std::string& out_dir,
                     OutputList& outputs, bool quiet) {
    EmbedderCheckpoint ckpt;
    if (!cfg.embedder.checkpoint.empty()) {
        ckpt = load_embedder(cfg.embedder.checkpoint);
    } else {
        if (!quiet)
            std::cout << "pretraining embedder (" << family_name(cfg.embedder.spec.family)
                      << ", " << cfg.embedder.epochs << " epochs)\n";
        auto result = pretrain_embedder(cfg.embedder.spec, train, cfg.embedder.epochs,
                                        cfg.embedder.seed);
        ckpt.spec = cfg.embedder.spec;
        ckpt.params = std::move(result.params);
        ckpt.dataset = train.name;
        ckpt.epochs = cfg.embedder.epochs;
        ckpt.seed = cfg.embedder.seed;
        ckpt.train_accuracy = result.train_accuracy;
        save_embedder(out_dir + "/embedder", ckpt);
        outputs.push_back("embedder/params.npy");
        outputs.push_back("embedder/manifest.json");
        if (!quiet)
            std::cout << "embedder train accuracy " << ckpt.train_accuracy << "\n";
    }
    cfg.distill.embedder_spec = ckpt.spec;
    cfg.distill.embedder_params = ckpt.params;
    cfg.distill.embedder_dataset = ckpt.dataset;
}

SyntheticDataset load_synthetic(const std::string& path) {
    return read_checkpoint(path).synthetic;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << '\n';
}

std::string require_one_checkpoint(const CliOptions& opts) {
    if (opts.checkpoints.size() != 1)
        throw ConfigError("exactly one --checkpoint is required");
    return opts.checkpoints[0];
}

}  // namespace

int cmd_distill(const CliOptions& opts) {
    return run_command("distill", opts, [&](RunConfig& cfg) {
        OutputList outputs;
        LabeledImageSet train = build_train_set(cfg.dataset);
        if (cfg.distill.weights.lambda_cc > 0)
            ensure_embedder(cfg, train, opts.out_dir, outputs, opts.quiet);
        cfg.distill.validate();

        std::optional<ResumeState> resume;
        if (!opts.resume_path.empty()) resume = read_checkpoint(opts.resume_path);

        cfg.distill.checkpoint_dir = opts.out_dir + "/checkpoint";
        std::ofstream csv(opts.out_dir + "/iterations.csv",
                          resume ? std::ios::app : std::ios::out);
        if (!csv) throw IoError("cannot write iterations.csv");
        if (!resume) csv << "iter,loss_base,loss_cc,loss_cm,loss_total,grad_norm,ms\n";

        DistillSinks sinks;
        sinks.csv = &csv;
        sinks.on_record = [&](const IterationRecord& rec) {
            if (!opts.quiet && (rec.iteration % 100 == 0 || rec.iteration + 1 == cfg.distill.iterations))
                std::printf("iter %6d  base %.5f  cc %.5f  cm %.5f  total %.5f\n", rec.iteration,
                            rec.loss_base, rec.loss_cc, rec.loss_cm, rec.loss_total);
        };
        distill(cfg.distill, train, sinks, resume);

        outputs.push_back("iterations.csv");
        outputs.push_back("checkpoint/pixels.npy");
        outputs.push_back("checkpoint/labels.npy");
        outputs.push_back("checkpoint/manifest.json");
        outputs.push_back("checkpoint/provenance.json");
        outputs.push_back("checkpoint/momentum.npy");
        return outputs;
    });
}

int cmd_eval(const CliOptions& opts) {
    return run_command("eval", opts, [&](RunConfig& cfg) {
        const SyntheticDataset syn = load_synthetic(require_one_checkpoint(opts));
        const LabeledImageSet test = build_test_set(cfg.dataset);
        const EvalReport report =
            evaluate_from_scratch(syn, cfg.eval_settings, test,
                                  derive_seed(cfg.distill.master_seed, "cmd-eval"));
        if (!opts.quiet)
            std::printf("top1 %.4f +/- %.4f over %d repeats\n", report.top1_mean, report.top1_std,
                        report.repeats);
        write_json_file(report_json(report), opts.out_dir + "/report.json");
        return OutputList{"report.json"};
    });
}

int cmd_xarch(const CliOptions& opts) {
    return run_command("xarch", opts, [&](RunConfig& cfg) {
        const SyntheticDataset syn = load_synthetic(require_one_checkpoint(opts));
        const LabeledImageSet test = build_test_set(cfg.dataset);
        const auto reports =
            cross_architecture(syn, cfg.xarch, cfg.eval_settings.recipe, cfg.eval_settings.repeats,
                               test, derive_seed(cfg.distill.master_seed, "cmd-xarch"));
        json all = json::array();
        std::ofstream csv(opts.out_dir + "/xarch.csv");
        csv << "arch,top1_mean,top1_std\n";
        for (const auto& r : reports) {
            all.push_back(report_json(r));
            csv << r.arch << ',' << r.top1_mean << ',' << r.top1_std << '\n';
            if (!opts.quiet)
                std::printf("%-10s top1 %.4f +/- %.4f\n", r.arch.c_str(), r.top1_mean, r.top1_std);
        }
        write_json_file(all, opts.out_dir + "/reports.json");
        return OutputList{"xarch.csv", "reports.json"};
    });
}

int cmd_sweep(const CliOptions& opts) {
    return run_command("sweep", opts, [&](RunConfig& cfg) {
        if (opts.axis.empty()) throw ConfigError("--axis is required");
        if (opts.values.empty()) throw ConfigError("--values is required");
        const SweepAxis axis = sweep_axis_from_name(opts.axis);

        OutputList outputs;
        LabeledImageSet train = build_train_set(cfg.dataset);
        LabeledImageSet test = build_test_set(cfg.dataset);
        ensure_embedder(cfg, train, opts.out_dir, outputs, opts.quiet);
        cfg.distill.validate();

        const SweepTable table = sweep(cfg.distill, axis, opts.values, train, test,
                                       cfg.eval_settings);
        write_sweep_csv(table, opts.out_dir + "/sweep.csv");
        if (!opts.quiet)
            for (const auto& row : table.rows)
                std::printf("%s=%g  top1 %.4f +/- %.4f  dispersion %.5f\n", opts.axis.c_str(),
                            row.value, row.top1_mean, row.top1_std, row.dispersion);
        outputs.push_back("sweep.csv");
        return outputs;
    });
}

int cmd_continual(const CliOptions& opts) {
    return run_command("continual", opts, [&](RunConfig& cfg) {
        if (!opts.method.empty()) cfg.continual.method = buffer_method_from_name(opts.method);
        if (opts.steps) cfg.continual.steps = *opts.steps;
        if (opts.buffer_per_class) cfg.continual.buffer_per_class = *opts.buffer_per_class;

        OutputList outputs;
        LabeledImageSet train = build_train_set(cfg.dataset);
        LabeledImageSet test = build_test_set(cfg.dataset);
        const bool needs_embedder = cfg.continual.method == BufferMethod::herding ||
                                    (cfg.continual.method == BufferMethod::distill &&
                                     cfg.distill.weights.lambda_cc > 0);
        if (needs_embedder) ensure_embedder(cfg, train, opts.out_dir, outputs, opts.quiet);

        const ContinualResult result =
            continual_learning(train, test, cfg.continual, cfg.distill, cfg.eval_settings,
                               derive_seed(cfg.distill.master_seed, "cmd-continual"));
        write_continual_csv(result, opts.out_dir + "/continual.csv");
        {
            std::ofstream f(opts.out_dir + "/continual_orders.csv");
            f << "order,step,acc\n";
            for (std::size_t o = 0; o < result.per_order.size(); ++o)
                for (std::size_t s = 0; s < result.per_order[o].size(); ++s)
                    f << o << ',' << s + 1 << ',' << result.per_order[o][s] << '\n';
        }
        if (!opts.quiet)
            for (std::size_t s = 0; s < result.step_mean.size(); ++s)
                std::printf("step %zu  acc %.4f +/- %.4f\n", s + 1, result.step_mean[s],
                            result.step_std[s]);
        outputs.push_back("continual.csv");
        outputs.push_back("continual_orders.csv");
        return outputs;
    });
}

int cmd_diagnose(const CliOptions& opts) {
    return run_command("diagnose", opts, [&](RunConfig& cfg) {
        if (opts.checkpoints.empty()) throw ConfigError("at least one --checkpoint is required");
        OutputList outputs;
        LabeledImageSet train = build_train_set(cfg.dataset);
        ensure_embedder(cfg, train, opts.out_dir, outputs, opts.quiet);

        json all = json::array();
        for (std::size_t i = 0; i < opts.checkpoints.size(); ++i) {
            const SyntheticDataset syn = load_synthetic(opts.checkpoints[i]);
            const DiagnosticsRecord rec =
                diagnostics(syn, train, cfg.distill.embedder_spec, cfg.distill.embedder_params,
                            cfg.distill.extractor,
                            derive_seed(cfg.distill.master_seed, "cmd-diagnose"));
            json entry = diagnostics_json(rec);
            entry["checkpoint"] = opts.checkpoints[i];
            all.push_back(entry);
            if (!opts.quiet)
                std::printf("%s: dispersion %.5f  covariance gap %.5f\n",
                            opts.checkpoints[i].c_str(), rec.mean_intra_dispersion,
                            rec.mean_covariance_gap);

            const std::string syn_csv = "projection_syn_" + std::to_string(i) + ".csv";
            export_projection(syn, train, cfg.distill.embedder_spec, cfg.distill.embedder_params,
                              opts.out_dir + "/projection_real.csv", opts.out_dir + "/" + syn_csv);
            outputs.push_back(syn_csv);
        }
        outputs.push_back("projection_real.csv");
        write_json_file(all, opts.out_dir + "/diagnostics.json");
        outputs.push_back("diagnostics.json");
        return outputs;
    });
}

}  // namespace distillkit
