#pragma once

#include <string>
#include <vector>

namespace diss {

struct RunOptions {
    std::string output_dir;  // overrides the config's output_dir when non-empty
    std::uint64_t seed_offset = 0;
    int jobs = 1;
};

/// Executes every (strategy x seed) job and writes curves.csv, manifest.json,
/// per-run replay buffers, and the mean-curve SVG. Returns a process exit code.
int cmd_run(const std::string& config_path, const RunOptions& options = {});

/// Full validation without execution; prints the resolved effective config.
int cmd_validate(const std::string& config_path);

/// Aggregates curves.csv files (mean +/- one sample std across seeds) into an
/// SVG chart of reward vs queries.
int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& output_svg);

std::string version_string();

}  // namespace diss
