#include "alignaudit/report/commands.hpp"
#include "alignaudit/report/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    using namespace alignaudit::report;

    CLI::App app{"alignaudit: cross-cultural value alignment audits"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    bool resume = false;

    app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Override the configured seed");
    app.add_option("--backend", backend,
                   "Override the backend: toy[:model.json] | human-mirror | scripted:<behaviour> | remote[:model]");
    app.add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

    auto* survey = app.add_subcommand("survey", "Persona survey simulation against human distributions");
    auto* dilemma = app.add_subcommand("dilemma", "Multi-stage moral dilemma runs");
    auto* align = app.add_subcommand("align", "First-token alignment of the toy model and data export");
    auto* mark = app.add_subcommand("mark", "Four-stage reasoning simulations and baselines");
    auto* report = app.add_subcommand("report", "Verify a finished output directory and its figures");
    for (auto* sub : {survey, dilemma, align, mark, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (report->parsed()) {
        if (out_dir.empty()) {
            std::cerr << "error: report needs --out\n";
            return kExitConfig;
        }
        return verify_report(out_dir, std::cout, std::cerr);
    }

    std::string command;
    for (auto* sub : {survey, dilemma, align, mark}) {
        if (sub->parsed()) command = sub->get_name();
    }
    try {
        if (config_path.empty()) throw alignaudit::ConfigError("--config is required for " + command);
        auto config = load_run_config(config_path, ConfigOverrides{seed, backend});
        if (out_dir.empty()) {
            out_dir = get_or<std::string>(config.doc, "output_dir", "");
            if (!out_dir.empty()) out_dir = config.resolve(out_dir);
        }
        if (out_dir.empty()) throw alignaudit::ConfigError("no output directory (use --out or output_dir)");
        CommandContext ctx{out_dir, resume, nullptr};
        int code = run_command(command, config, ctx, std::cerr);
        if (code == kExitOk) std::cout << command << ": report written to " << out_dir << "\n";
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
