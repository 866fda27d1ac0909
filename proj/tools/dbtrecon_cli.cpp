#include "dbtrecon/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

namespace harness = dbtrecon::harness;

enum ExitCode { ok = 0, validation_failure = 1, runtime_failure = 2 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Limited-angle fan-beam reconstruction toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    app.add_option("-c,--config", config_path, "JSON experiment config (defaults apply to missing keys)")
        ->check(CLI::ExistingFile);
    app.add_option("-s,--set", overrides, "Override a config key, e.g. --set solver.rho=1.5")->take_all();
    app.add_option("-o,--output-dir", output_dir, "Output directory (overrides output_dir)");

    auto* phantom = app.add_subcommand("phantom", "Write phantom images and label maps");
    auto* project = app.add_subcommand("project", "Write phantoms and their noiseless sinograms");
    auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct with one solver mode");
    std::string mode = "single";
    reconstruct->add_option("-m,--mode", mode, "single or two_channel")
        ->check(CLI::IsMember({"single", "two_channel"}));
    auto* compare = app.add_subcommand("compare", "Paired single- vs two-channel runs per resolution");
    auto* spectrum = app.add_subcommand("spectrum", "Mode-gain profiles of the filtered projector");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation_failure;
    }

    try {
        if (!output_dir.empty()) overrides.push_back("output_dir=\"" + output_dir + "\"");
        const auto cfg = harness::load_config(
            config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path), overrides);

        if (phantom->parsed()) {
            harness::cli_phantom(cfg, std::clog);
        } else if (project->parsed()) {
            harness::cli_project(cfg, std::clog);
        } else if (reconstruct->parsed()) {
            harness::cli_reconstruct(cfg, dbtrecon::solver_mode_from_string(mode), std::clog);
        } else if (compare->parsed()) {
            for (const auto& row : harness::cli_compare(cfg, std::clog))
                std::cout << row.resolution << "x" << row.resolution << ": rmse single "
                          << dbtrecon::io::fmt(row.rmse_single) << ", two-channel " << dbtrecon::io::fmt(row.rmse_two)
                          << ", improvement " << dbtrecon::io::fmt(row.improvement_percent) << "%\n";
        } else if (spectrum->parsed()) {
            harness::cli_spectrum(cfg, std::clog);
        }
    } catch (const dbtrecon::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}
