// distillkit: synthesize a small learnable image set whose per-class feature
// statistics track a larger real dataset, then evaluate it.

#include <string>
#include <vector>

#include "CLI11.hpp"

#include "distillkit/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"distillkit: dataset distillation with class-centralization "
                 "and covariance-matching constraints"};
    app.require_subcommand(1);

    distillkit::CliOptions opts;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "Run configuration file (JSON)")->required();
        cmd->add_option("--out", opts.out_dir, "Output directory")->required();
        cmd->add_option("--seed", seed_value, "Override the master seed")
            ->each([&](const std::string&) { opts.seed_override = seed_value; });
        cmd->add_flag("--quiet", opts.quiet, "Suppress progress output");
    };

    CLI::App* distill = app.add_subcommand("distill", "Optimize a synthetic set");
    add_common(distill);
    distill->add_option("--resume", opts.resume_path, "Continue from a checkpoint directory");

    CLI::App* eval = app.add_subcommand("eval", "Train from scratch on a checkpoint and test");
    add_common(eval);
    eval->add_option("--checkpoint", opts.checkpoints, "Synthetic checkpoint directory")
        ->required();

    CLI::App* xarch = app.add_subcommand("xarch", "Evaluate one checkpoint across architectures");
    add_common(xarch);
    xarch->add_option("--checkpoint", opts.checkpoints, "Synthetic checkpoint directory")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "Distill+evaluate over a value grid");
    add_common(sweep);
    sweep->add_option("--axis", opts.axis, "beta | lambda_cc | lambda_cm | iterations | ipc")
        ->required();
    sweep->add_option("--values", opts.values, "Swept values")->required()->delimiter(',');

    CLI::App* continual = app.add_subcommand("continual", "Class-incremental protocol");
    add_common(continual);
    continual->add_option("--method", opts.method, "distill | herding | random");
    int steps = 0, buffer = 0;
    continual->add_option("--steps", steps, "Number of incremental steps")
        ->each([&](const std::string&) { opts.steps = steps; });
    continual->add_option("--buffer", buffer, "Buffer images per class")
        ->each([&](const std::string&) { opts.buffer_per_class = buffer; });

    CLI::App* diagnose = app.add_subcommand("diagnose", "Dispersion/covariance diagnostics");
    add_common(diagnose);
    diagnose->add_option("--checkpoint", opts.checkpoints, "Checkpoint directories (repeatable)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (distill->parsed()) return distillkit::cmd_distill(opts);
    if (eval->parsed()) return distillkit::cmd_eval(opts);
    if (xarch->parsed()) return distillkit::cmd_xarch(opts);
    if (sweep->parsed()) return distillkit::cmd_sweep(opts);
    if (continual->parsed()) return distillkit::cmd_continual(opts);
    if (diagnose->parsed()) return distillkit::cmd_diagnose(opts);
    return 2;
}
