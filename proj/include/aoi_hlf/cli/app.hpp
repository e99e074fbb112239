#ifndef AOI_HLF_CLI_APP_HPP
#define AOI_HLF_CLI_APP_HPP

// Argument parsing and dispatch for the aoi_hlf executable.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aoi_hlf/cli/commands.hpp"
#include "aoi_hlf/cli/default_config.hpp"

namespace aoi_hlf::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_config = 2,
    exit_numeric = 3,
    exit_io = 4,
    exit_internal = 5,
};

namespace detail {

struct Flags
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::string v_grid;
    bool v_grid_set = false;
    std::string zeta_grid;
    std::optional<double> v;
    std::optional<double> duration;
    std::optional<std::uint64_t> mc_cycles;
    std::string samples;
};

inline void common_flags(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config, "YAML run configuration (default: built-in)");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, "output path, - for stdout");
    sub->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

class Sink
{
 public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback)
    {
        if (path.empty() || path == "-")
            return;
        file_.open(path, std::ios::binary);
        if (!file_)
            throw IoError(path + ": cannot open for writing");
        os_ = &file_;
    }
    std::ostream& get() { return *os_; }
    void close(const std::string& path)
    {
        if (file_.is_open()) {
            file_.close();
            if (!file_)
                throw IoError(path + ": write failed");
        }
    }

 private:
    std::ofstream file_;
    std::ostream* os_;
};

} // namespace detail

inline RunConfig default_config() { return parse_config(YAML::Load(default_config_yaml)); }

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Blockchain-enabled AoI violation analysis"};
    app.require_subcommand(1);
    detail::Flags f;

    auto* analyze = app.add_subcommand("analyze", "violation probability vs target AoI");
    detail::common_flags(analyze, f);
    analyze->add_option("--v-grid", f.v_grid, "start:stop:step, start may use Y (e.g. Y+0.1:8:0.25)");
    analyze->add_option("--mc-cycles", f.mc_cycles, "renewal Monte Carlo cycles, 0 to skip");

    auto* simulate = app.add_subcommand("simulate", "run the pipeline DES and fit Gamma");
    detail::common_flags(simulate, f);
    simulate->add_option("--duration", f.duration, "simulated seconds");

    auto* fit = app.add_subcommand("fit", "fit Gamma to a latency CSV");
    fit->add_option("samples", f.samples, "latency CSV (1 or 4 columns)")->required();
    fit->add_option("--out", f.out, "output path, - for stdout");
    fit->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* sweep = app.add_subcommand("sweep", "violation probability vs target STP");
    detail::common_flags(sweep, f);
    sweep->add_option("--v", f.v, "target AoI in seconds");
    sweep->add_option("--zeta-grid", f.zeta_grid, "start:stop:step or comma list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }
    f.v_grid_set = analyze->count("--v-grid") > 0;

    try {
        RunConfig cfg = f.config.empty() ? default_config() : load_config(f.config);
        if (!f.format.empty())
            cfg.format = parse_format(f.format);
        const std::string out_path = f.out.empty() ? cfg.output_path : f.out;

        if (*fit) {
            auto t = cmd_fit(f.samples, err);
            detail::Sink sink(out_path, out);
            write_table(sink.get(), t, cfg.format);
            sink.close(out_path);
            return exit_ok;
        }

        const std::uint64_t seed = resolve_seed(f.seed, cfg, err);

        if (*analyze) {
            if (f.mc_cycles)
                cfg.analyze.mc_cycles = *f.mc_cycles;
            const std::string grid = f.v_grid_set ? f.v_grid : cfg.analyze.v_grid;
            auto t = cmd_analyze(cfg, grid, seed, err);
            detail::Sink sink(out_path, out);
            write_table(sink.get(), t, cfg.format);
            sink.close(out_path);
        } else if (*simulate) {
            const double duration = f.duration ? *f.duration : cfg.simulate_duration;
            detail::Sink sink(out_path, out);
            auto t = cmd_simulate(cfg, duration, seed, sink.get(), err);
            sink.close(out_path);
            if (!out_path.empty() && out_path != "-")
                write_table(out, t, cfg.format);
        } else if (*sweep) {
            const double v = f.v ? *f.v : cfg.sweep.target_aoi;
            const auto zetas =
                f.zeta_grid.empty() ? cfg.sweep.zetas : parse_grid(f.zeta_grid, "--zeta-grid");
            auto res = cmd_sweep(cfg, v, zetas, seed, err);
            detail::Sink sink(out_path, out);
            write_table(sink.get(), res.table, cfg.format);
            sink.close(out_path);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return exit_io;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const SampleError& e) {
        err << "sample error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_internal;
    }
}

} // namespace aoi_hlf::cli

#endif
