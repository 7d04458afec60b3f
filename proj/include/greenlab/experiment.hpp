#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "greenlab/csv.hpp"
#include "greenlab/step_measure.hpp"
#include "json.hpp"

namespace greenlab {

// Exit statuses of `greenlab run`.
enum ExitStatus : int { kOk = 0, kConfigError = 2, kNumericError = 3, kInvariantViolation = 4 };

struct RunOptions {
    std::optional<std::string> cache_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool force_recompute = false;
    bool emit_plot_script = false;
};

struct RunResult {
    int status = kOk;
    std::string message;
    std::string output_path;
    std::string plot_script_path;
    std::uint64_t solves = 0;  // killed solves performed during the run
    std::size_t cache_hits = 0;
    std::size_t rows = 0;
    CsvTable table;
};

// {"name": "srw"|"shell"|"stable", "laziness": eps, "r0": 3, "r_cap": 100000, "alpha": 1}
StepMeasure measure_from_json(const Group& g, const nlohmann::json& m);

// Validates every key for the kind; throws ConfigError.
void validate_config(const nlohmann::json& cfg);

// Never throws; failures map to the exit statuses. No file is written unless status is kOk.
RunResult run_experiment(const nlohmann::json& cfg, const RunOptions& opts = {});
RunResult run_experiment_file(const std::string& path, const RunOptions& opts = {});

}  // namespace greenlab
