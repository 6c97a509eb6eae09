// offerlab <subcommand> --config <path> [--seed N] [--out DIR]
//
// Exit codes: 0 ok, 1 other failure, 2 usage, 3 config, 4 missing
// prerequisite artifact, 5 malformed input data.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "offerlab/config.hpp"
#include "offerlab/errors.hpp"
#include "offerlab/pipeline.hpp"

namespace {

int exit_code(const offerlab::Error& e) {
    if (dynamic_cast<const offerlab::ConfigError*>(&e)) return 3;
    if (dynamic_cast<const offerlab::DependencyError*>(&e)) return 4;
    if (dynamic_cast<const offerlab::ParseError*>(&e) || dynamic_cast<const offerlab::DataIntegrityError*>(&e))
        return 5;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Customer offer modeling: simulate, fit, evaluate, segment and optimize"};
    app.set_version_flag("--version", std::string(OFFERLAB_VERSION));
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    for (const auto& name : offerlab::pipeline_commands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "override the output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; every usage error exits 2
        return app.exit(e) == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        auto config = offerlab::load_pipeline_config(config_path);
        if (seed) config.apply_seed(*seed);
        if (!out_dir.empty()) config.out_dir = out_dir;
        const auto result = offerlab::run_pipeline(command, config);
        std::cout << result.summary;
        for (const auto& p : result.artifacts) std::cout << "wrote " << p.string() << "\n";
        return 0;
    } catch (const offerlab::Error& e) {
        std::cerr << "offerlab " << command << ": " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "offerlab " << command << ": " << e.what() << "\n";
        return 1;
    }
}
