#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"
#include "quantshape/serialization.hpp"

namespace {

using namespace quantshape;

unsigned thread_budget() {
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QUANTSHAPE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(v));
        } catch (const std::exception&) {
            std::cerr << "ignoring invalid QUANTSHAPE_THREADS='" << env << "'\n";
        }
    }
    return threads;
}

int fail(const std::filesystem::path& out_dir, int code, const std::string& kind, const std::string& message) {
    const json err{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << err.dump() << '\n';
    try {
        if (!out_dir.empty()) write_json(out_dir / "error.json", err);
    } catch (const std::exception&) {
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overload-free error-feedback quantizer design"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool        svg = false;

    using Handler = int (*)(const RunConfig&, const cli::CommandOptions&);
    const std::map<std::string, std::pair<std::string, Handler>> commands{
        {"design-fir", {"FIR noise-shaping filter with the fewest bits", cli::cmd_design_fir}},
        {"design-iir", {"IIR noise-shaping filter via LMIs and an alpha line search", cli::cmd_design_iir}},
        {"tradeoff", {"bits vs output-error tradeoff sweep", cli::cmd_tradeoff}},
        {"simulate", {"closed-loop pendulum simulation, designed vs static quantizer", cli::cmd_simulate}},
        {"reproduce-paper", {"run the whole pendulum benchmark and compare with reference values", cli::cmd_reproduce_paper}},
    };
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_flag("--svg", svg, "also write SVG plots");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kExitConfig;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    RunConfig         cfg;
    try {
        cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
    } catch (const std::exception& e) {
        return fail(out_dir, cli::kExitConfig, "config", e.what());
    }

    cli::CommandOptions opt;
    opt.svg = svg;
    opt.threads = thread_budget();
    try {
        return commands.at(name).second(cfg, opt);
    } catch (const ConfigError& e) {
        return fail(cfg.output_dir, cli::kExitConfig, "config", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(cfg.output_dir, cli::kExitConfig, "config", e.what());
    } catch (const std::exception& e) {
        return fail(cfg.output_dir, cli::kExitSolver, "solver", e.what());
    }
}
