#ifndef AOI_HLF_CLI_COMMANDS_HPP
#define AOI_HLF_CLI_COMMANDS_HPP

// The four workflows. Each returns its result table; diagnostics go to `log`.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "aoi_hlf/aoi.hpp"
#include "aoi_hlf/cli/config.hpp"
#include "aoi_hlf/cli/io.hpp"
#include "aoi_hlf/detail/parallel.hpp"
#include "aoi_hlf/latency.hpp"
#include "aoi_hlf/uplink.hpp"

namespace aoi_hlf::cli {

// ---------------------------------------------------------------------------
// Grids and seeds

namespace detail {

inline double parse_number(const std::string& s, const std::string& what)
{
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(what + ": cannot parse '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// "start:stop:step" (stop inclusive) or a comma list. In a range start, the
/// token Y stands for `y` (so "Y+0.1:8:0.25" starts just above Y). An empty
/// spec gives an empty grid.
inline std::vector<double> parse_grid(const std::string& spec, const std::string& what,
                                      std::optional<double> y = std::nullopt)
{
    std::vector<double> out;
    if (spec.find_first_not_of(' ') == std::string::npos)
        return out;
    auto value = [&](const std::string& tok) {
        if (!tok.empty() && tok[0] == 'Y') {
            if (!y)
                throw ConfigError(what + ": 'Y' is only valid in a v grid");
            if (tok.size() == 1)
                return *y;
            const std::string off = tok.substr(tok[1] == '+' ? 2 : 1);
            if (tok[1] != '+' && tok[1] != '-')
                throw ConfigError(what + ": expected Y, Y+c or Y-c, got '" + tok + "'");
            return *y + detail::parse_number(off, what);
        }
        return detail::parse_number(tok, what);
    };
    if (spec.find(':') == std::string::npos) {
        for (const auto& tok : detail::split(spec, ','))
            out.push_back(value(tok));
        return out;
    }
    const auto parts = detail::split(spec, ':');
    if (parts.size() != 3)
        throw ConfigError(what + ": expected start:stop:step, got '" + spec + "'");
    const double start = value(parts[0]), stop = value(parts[1]),
                 step = detail::parse_number(parts[2], what);
    if (!(step > 0))
        throw ConfigError(what + ": step must be > 0");
    if (stop < start)
        return out;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 1000000)
        throw ConfigError(what + ": grid has more than 1e6 points");
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(start + static_cast<double>(i) * step);
    return out;
}

/// --seed wins, then the first configured seed, else a fresh master seed that
/// is printed so the run can be repeated.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& cfg,
                                  std::ostream& log)
{
    if (flag)
        return *flag;
    if (!cfg.seeds.empty())
        return cfg.seeds.front();
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    log << "master seed: " << s << " (pass --seed " << s << " to reproduce)\n";
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return aoi_hlf::detail::substream(master, index)();
}

// ---------------------------------------------------------------------------
// Gamma parameter sources

struct FitReport
{
    GammaParams params;
    std::size_t n = 0;
    double ks = 0;
};

inline FitReport fit_report(const std::vector<double>& samples)
{
    FitReport r;
    r.params = latency::fit_gamma_mle(samples);
    r.n = samples.size();
    r.ks = latency::ks_distance(samples, r.params);
    return r;
}

inline Table fit_table(const FitReport& r)
{
    Table t{{"shape", "rate", "mean", "n", "ks", "ks_critical_1pct"}, {}};
    t.add({r.params.shape, r.params.rate, r.params.mean(), static_cast<double>(r.n), r.ks,
           latency::ks_critical_1pct(r.n)});
    return t;
}

inline void log_fit(std::ostream& log, const FitReport& r)
{
    log << "fit: shape=" << shortest(canonical(r.params.shape))
        << " rate=" << shortest(canonical(r.params.rate)) << " n=" << r.n
        << " ks=" << shortest(canonical(r.ks))
        << " (1% critical " << shortest(canonical(latency::ks_critical_1pct(r.n))) << ")\n";
}

inline std::vector<double> simulate_samples(const RunConfig& cfg, double duration,
                                            std::uint64_t seed,
                                            std::vector<latency::TxRecord>* records = nullptr)
{
    if (!cfg.pipeline)
        throw ConfigError("pipeline: required for simulation");
    auto recs = latency::run_pipeline(*cfg.pipeline, duration, seed);
    auto samples = latency::consensus_latency_samples(recs, 0);
    if (samples.size() < 30)
        throw SampleError("simulate: only " + std::to_string(samples.size()) +
                          " valid target-key transactions in " + shortest(duration) +
                          " s, need at least 30");
    if (records)
        *records = std::move(recs);
    return samples;
}

/// ζ -> GammaParams from exactly one source: the fits table, a fit of the
/// sample file, or a fit of a DES run (the latter two apply to every ζ).
inline std::map<double, GammaParams> resolve_fits(const RunConfig& cfg,
                                                  const std::vector<double>& zetas,
                                                  std::uint64_t seed, std::ostream& log)
{
    std::map<double, GammaParams> out;
    switch (cfg.gamma_source) {
    case GammaSource::table:
        if (cfg.fits.empty())
            throw ConfigError("fits: required when gamma_source is table");
        for (double z : zetas) {
            try {
                out[z] = aoi::lookup_fit(cfg.fits, z);
            } catch (const DomainError& e) {
                throw ConfigError(std::string("fits: ") + e.what());
            }
        }
        return out;
    case GammaSource::samples: {
        if (cfg.samples_path.empty())
            throw ConfigError("samples_path: required when gamma_source is samples");
        auto r = fit_report(read_latency_file(cfg.samples_path));
        log_fit(log, r);
        for (double z : zetas)
            out[z] = r.params;
        return out;
    }
    case GammaSource::simulate: {
        auto r = fit_report(simulate_samples(cfg, cfg.simulate_duration, derive_seed(seed, 1000)));
        log_fit(log, r);
        for (double z : zetas)
            out[z] = r.params;
        return out;
    }
    }
    return out;
}

inline aoi::AoiModel operating_point(const RunConfig& cfg, double zeta, const GammaParams& fit)
{
    const auto net = cfg.network.with_target_stp(zeta);
    const double rate = uplink::mean_target_rate(net);
    const double pc = cfg.success == aoi::SuccessModel::target_stp
                          ? zeta
                          : uplink::average_stp_at_rate(rate, net);
    return {fit, net.gen_rate * pc, net.packet_bits / rate};
}

// Conventions that the absolute Y values depend on.
inline void log_metadata(const RunConfig& cfg, std::ostream& log)
{
    const auto& n = cfg.network;
    log << "metadata: noise_psd=" << shortest(n.noise_psd)
        << " W/Hz (N0 is a spectral density, noise power N0*W=" << shortest(n.noise_power())
        << " W) bs_density=" << shortest(n.bs_density) << " /m^2 success_model="
        << (cfg.success == aoi::SuccessModel::target_stp ? "target_stp" : "distance_averaged")
        << '\n';
}

inline void check_zetas(const std::vector<double>& zetas, const std::string& what)
{
    for (double z : zetas)
        if (!(z > 0 && z < 1))
            throw ConfigError(what + ": target STP values must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// Commands

/// Per (ζ, v): Y, T_c, series, quadrature, selected probability and method,
/// renewal Monte Carlo ± SE (omitted when mc_cycles is 0), and a flag for
/// v <= Y.
inline Table cmd_analyze(const RunConfig& cfg, const std::string& v_grid, std::uint64_t seed,
                         std::ostream& log)
{
    Table t{{"zeta", "v", "Y", "T_c", "series", "quadrature", "probability", "method", "mc",
             "mc_se", "flag"},
            {}};
    check_zetas(cfg.analyze.zetas, "analyze.zetas");
    if (cfg.analyze.mc_cycles != 0 && cfg.analyze.mc_cycles < 10000)
        throw ConfigError("analyze.mc_cycles: must be 0 or >= 10000");
    parse_grid(v_grid, "v_grid", 0.0); // syntax check before any work
    log_metadata(cfg, log);
    const auto fits = resolve_fits(cfg, cfg.analyze.zetas, seed, log);
    for (std::size_t zi = 0; zi < cfg.analyze.zetas.size(); ++zi) {
        const double z = cfg.analyze.zetas[zi];
        const auto model = operating_point(cfg, z, fits.at(z));
        const auto vs = parse_grid(v_grid, "v_grid", model.tx_latency);
        std::vector<aoi::SamplePathSummary> mc;
        if (cfg.analyze.mc_cycles > 0 && !vs.empty())
            mc = aoi::violation_probability_mc_grid(model, vs, cfg.analyze.mc_cycles,
                                                    derive_seed(seed, zi));
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const double v = vs[i];
            const auto ev = aoi::violation_probability(model, aoi::AoiQuery{v}, cfg.eval);
            auto opt = [](const std::optional<double>& x) -> Cell {
                return x ? Cell{*x} : Cell{std::monostate{}};
            };
            Cell mc_v, mc_se;
            if (!mc.empty()) {
                mc_v = mc[i].violation_fraction;
                mc_se = mc[i].standard_error;
            }
            t.add({z, v, model.tx_latency, v - model.tx_latency, opt(ev.series),
                   opt(ev.quadrature), ev.value, ev.method, mc_v, mc_se,
                   v <= model.tx_latency ? Cell{std::string("v<=Y")} : Cell{std::string()}});
        }
    }
    return t;
}

/// Runs the DES, writes the record CSV to `records_out`, returns the fit.
inline Table cmd_simulate(const RunConfig& cfg, double duration, std::uint64_t seed,
                          std::ostream& records_out, std::ostream& log)
{
    if (!(std::isfinite(duration) && duration > 0))
        throw ConfigError("simulate.duration: must be > 0");
    std::vector<latency::TxRecord> records;
    const auto samples = simulate_samples(cfg, duration, seed, &records);
    write_latency_csv(records_out, records);
    const auto r = fit_report(samples);
    log_fit(log, r);
    return fit_table(r);
}

inline Table cmd_fit(const std::string& samples_path, std::ostream& log)
{
    const auto r = fit_report(read_latency_file(samples_path));
    log_fit(log, r);
    return fit_table(r);
}

inline Table cmd_fit_stream(std::istream& in, const std::string& name, std::ostream& log)
{
    const auto r = fit_report(read_latency_samples(in, name));
    log_fit(log, r);
    return fit_table(r);
}

struct SweepOutput
{
    Table table;
    aoi::SweepResult result;
};

/// (ζ, Y, probability) per grid point with the minimizer marked.
inline SweepOutput cmd_sweep(const RunConfig& cfg, double v, const std::vector<double>& zetas,
                             std::uint64_t seed, std::ostream& log)
{
    if (zetas.empty())
        throw ConfigError("zeta_grid: empty");
    check_zetas(zetas, "zeta_grid");
    if (!(std::isfinite(v) && v > 0))
        throw ConfigError("sweep.target_aoi: must be > 0");
    const auto fits = resolve_fits(cfg, zetas, seed, log);
    log_metadata(cfg, log);
    aoi::SweepOptions opt;
    opt.success = cfg.success;
    opt.eval = cfg.eval;
    SweepOutput out;
    out.result = aoi::sweep_target_stp(cfg.network, fits, v, zetas, opt);
    const auto& res = out.result;
    out.table = Table{{"zeta", "Y", "success_prob", "rho", "probability", "method", "is_argmin"}, {}};
    for (std::size_t i = 0; i < res.points.size(); ++i) {
        const auto& p = res.points[i];
        out.table.add({p.zeta, p.tx_latency, p.success_prob, p.effective_rate, p.probability,
                       p.method, std::string(i == res.argmin ? "true" : "false")});
    }
    log << "argmin: zeta=" << shortest(res.argmin_zeta)
        << " interior=" << (res.interior ? "yes" : "no")
        << " non_monotonic=" << (res.non_monotonic ? "yes" : "no") << '\n';
    if (res.low_contrast)
        log << "warning: low contrast across the zeta grid (max - min < " << opt.low_contrast
            << "); the minimizer is not meaningful\n";
    return out;
}

} // namespace aoi_hlf::cli

#endif
