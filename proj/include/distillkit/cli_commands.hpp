#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace distillkit {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;

    std::string resume_path;                // distill
    std::vector<std::string> checkpoints;   // eval / xarch / diagnose
    std::string axis;                       // sweep
    std::vector<double> values;             // sweep
    std::optional<int> steps;               // continual
    std::optional<int> buffer_per_class;    // continual
    std::string method;                     // continual
};

// Exit codes: 0 ok, 2 config, 3 runtime, 4 I/O.
int cmd_distill(const CliOptions& opts);
int cmd_eval(const CliOptions& opts);
int cmd_xarch(const CliOptions& opts);
int cmd_sweep(const CliOptions& opts);
int cmd_continual(const CliOptions& opts);
int cmd_diagnose(const CliOptions& opts);

}  // namespace distillkit
