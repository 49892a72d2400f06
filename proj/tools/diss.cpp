#include <string>
#include <vector>

#include "CLI11.hpp"

#include "diss/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"DISS: budgeted feature/option sub-selection policies for black-box decision-makers"};
    app.set_version_flag("--version", diss::version_string());
    app.require_subcommand(1);

    std::string config_path;
    diss::RunOptions options;
    auto* run = app.add_subcommand("run", "Run every configured (strategy x seed) experiment");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--output-dir", options.output_dir, "Override the config's output directory");
    run->add_option("--seed-offset", options.seed_offset, "Added to every configured seed");
    run->add_option("--jobs", options.jobs, "Parallel (strategy x seed) jobs")
        ->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Validate a config and echo resolved defaults");
    validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

    std::vector<std::string> csv_paths;
    std::string output_svg = "curves.svg";
    auto* plot = app.add_subcommand("plot", "Plot mean curves from curves.csv files");
    plot->add_option("csv", csv_paths, "curves.csv files")->required();
    plot->add_option("-o,--output", output_svg, "Output SVG path");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return diss::cmd_run(config_path, options);
    if (validate->parsed()) return diss::cmd_validate(validate_path);
    return diss::cmd_plot(csv_paths, output_svg);
}
