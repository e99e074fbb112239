#ifndef AOI_HLF_CLI_CONFIG_HPP
#define AOI_HLF_CLI_CONFIG_HPP

// Run configuration loaded from YAML. Every dimensioned value carries a unit
// string; errors name the offending key path.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "aoi_hlf/aoi.hpp"
#include "aoi_hlf/cli/units.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/latency.hpp"
#include "aoi_hlf/uplink.hpp"

namespace aoi_hlf::cli {

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& s)
{
    if (s == "csv")
        return OutputFormat::csv;
    if (s == "json")
        return OutputFormat::json;
    throw ConfigError("unknown output format '" + s + "' (csv | json)");
}

/// Where the Gamma consensus parameters come from. Exactly one per run.
enum class GammaSource { table, samples, simulate };

struct AnalyzeSettings
{
    std::vector<double> zetas{0.4, 0.6, 0.8};
    std::string v_grid = "Y+0.1:8:0.25";
    std::uint64_t mc_cycles = 200000;
};

struct SweepSettings
{
    double target_aoi = 4.0;
    std::vector<double> zetas{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct RunConfig
{
    uplink::NetworkConfig network;
    aoi::SuccessModel success = aoi::SuccessModel::target_stp;
    std::optional<latency::PipelineConfig> pipeline;
    GammaSource gamma_source = GammaSource::table;
    std::map<double, GammaParams> fits;
    std::string samples_path;
    std::vector<std::uint64_t> seeds;
    std::string output_path = "-";
    OutputFormat format = OutputFormat::csv;
    aoi::EvalOptions eval;
    AnalyzeSettings analyze;
    SweepSettings sweep;
    double simulate_duration = 2000.0;
};

namespace detail {

class Reader
{
 public:
    Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

    bool has(const std::string& key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

    Reader child(const std::string& key) const
    {
        if (!node_[key].IsMap())
            fail(key, "expected a mapping");
        return Reader(node_[key], join(key));
    }

    std::string text(const std::string& key) const
    {
        try {
            return node_[key].as<std::string>();
        } catch (const YAML::Exception&) {
            fail(key, "expected a scalar");
        }
    }

    double number(const std::string& key) const
    {
        try {
            return node_[key].as<double>();
        } catch (const YAML::Exception&) {
            fail(key, "expected a number");
        }
    }

    std::uint64_t count(const std::string& key) const
    {
        double v = number(key);
        if (!(v >= 0) || v != std::floor(v) || v > 9.007199254740992e15)
            fail(key, "expected a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }

    double quantity(const std::string& key, Dimension dim) const
    {
        try {
            return parse_quantity(text(key), dim);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

    std::vector<double> numbers(const std::string& key) const
    {
        if (!node_[key].IsSequence())
            fail(key, "expected a list of numbers");
        std::vector<double> out;
        try {
            for (const auto& n : node_[key])
                out.push_back(n.as<double>());
        } catch (const YAML::Exception&) {
            fail(key, "expected a list of numbers");
        }
        return out;
    }

    const YAML::Node& node() const { return node_; }
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        throw ConfigError(join(key) + ": " + msg);
    }

 private:
    YAML::Node node_;
    std::string path_;
};

inline latency::LatencyDist read_dist(const Reader& r)
{
    const std::string kind = r.text("dist");
    if (kind == "constant")
        return latency::LatencyDist::constant(r.quantity("value", Dimension::time));
    if (kind == "exponential")
        return latency::LatencyDist::exponential(r.quantity("mean", Dimension::time));
    if (kind == "gamma")
        return latency::LatencyDist::gamma(r.number("shape"), r.quantity("rate", Dimension::rate));
    r.fail("dist", "unknown distribution '" + kind + "' (constant | exponential | gamma)");
}

inline void read_network(const Reader& r, RunConfig& cfg)
{
    auto& n = cfg.network;
    if (r.has("tx_power"))
        n.tx_power = r.quantity("tx_power", Dimension::power);
    if (r.has("noise_psd"))
        n.noise_psd = r.quantity("noise_psd", Dimension::spectral_density);
    if (r.has("bandwidth"))
        n.bandwidth = r.quantity("bandwidth", Dimension::frequency);
    if (r.has("packet_size"))
        n.packet_bits = r.quantity("packet_size", Dimension::bits);
    if (r.has("bs_density"))
        n.bs_density = r.quantity("bs_density", Dimension::area_density);
    if (r.has("source_density"))
        n.source_density = r.quantity("source_density", Dimension::area_density);
    if (r.has("pathloss_exponent"))
        n.pathloss_exponent = r.number("pathloss_exponent");
    if (r.has("gen_rate"))
        n.gen_rate = r.quantity("gen_rate", Dimension::rate);
    if (r.has("success_model")) {
        const auto s = r.text("success_model");
        if (s == "target_stp")
            cfg.success = aoi::SuccessModel::target_stp;
        else if (s == "distance_averaged")
            cfg.success = aoi::SuccessModel::distance_averaged;
        else
            r.fail("success_model", "expected target_stp | distance_averaged");
    }
    try {
        n.validate();
    } catch (const DomainError& e) {
        throw ConfigError(r.join("") + " " + e.what());
    }
}

inline latency::PipelineConfig read_pipeline(const Reader& r)
{
    latency::PipelineConfig p;
    if (r.has("endorse_latency"))
        p.endorse_latency = read_dist(r.child("endorse_latency"));
    if (r.has("order_overhead"))
        p.order_overhead = r.quantity("order_overhead", Dimension::time);
    if (r.has("validate_latency"))
        p.validate_latency = read_dist(r.child("validate_latency"));
    if (r.has("block_size"))
        p.block_size = r.count("block_size");
    if (r.has("block_timeout"))
        p.block_timeout = r.quantity("block_timeout", Dimension::time);
    if (r.has("key_count"))
        p.key_count = r.count("key_count");
    if (r.has("target_key_fraction"))
        p.target_key_fraction = r.number("target_key_fraction");
    if (r.has("tx_rate"))
        p.tx_rate = r.quantity("tx_rate", Dimension::rate);
    try {
        p.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(r.join("") + " " + e.what());
    }
    return p;
}

inline std::map<double, GammaParams> read_fits(const Reader& r)
{
    const auto& seq = r.node()["fits"];
    if (!seq.IsSequence())
        r.fail("fits", "expected a list of {zeta, shape, rate}");
    std::map<double, GammaParams> out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        Reader e(seq[i], r.join("fits[" + std::to_string(i) + "]"));
        const double z = e.number("zeta");
        GammaParams p{e.number("shape"), e.quantity("rate", Dimension::rate)};
        if (!(z > 0 && z <= 1))
            e.fail("zeta", "must lie in (0, 1]");
        try {
            p.validate();
        } catch (const DomainError& err) {
            e.fail("shape", err.what());
        }
        if (!out.emplace(z, p).second)
            e.fail("zeta", "duplicate entry");
    }
    return out;
}

} // namespace detail

inline RunConfig parse_config(const YAML::Node& root)
{
    RunConfig cfg;
    if (!root.IsDefined() || root.IsNull())
        return cfg;
    if (!root.IsMap())
        throw ConfigError("config root must be a mapping");
    detail::Reader r(root, "");
    for (const auto& kv : root) {
        static const std::vector<std::string> known{"network", "pipeline", "gamma_source", "fits",
                                                    "samples_path", "seeds", "output", "eval",
                                                    "analyze", "sweep", "simulate"};
        const auto key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(key + ": unknown key");
    }
    if (r.has("network"))
        detail::read_network(r.child("network"), cfg);
    if (r.has("pipeline"))
        cfg.pipeline = detail::read_pipeline(r.child("pipeline"));
    if (r.has("fits"))
        cfg.fits = detail::read_fits(r);
    if (r.has("samples_path"))
        cfg.samples_path = r.text("samples_path");
    if (r.has("gamma_source")) {
        const auto s = r.text("gamma_source");
        if (s == "table")
            cfg.gamma_source = GammaSource::table;
        else if (s == "samples")
            cfg.gamma_source = GammaSource::samples;
        else if (s == "simulate")
            cfg.gamma_source = GammaSource::simulate;
        else
            r.fail("gamma_source", "expected table | samples | simulate");
    }
    if (r.has("seeds")) {
        for (double s : r.numbers("seeds")) {
            if (!(s >= 0) || s != std::floor(s))
                r.fail("seeds", "seeds must be nonnegative integers");
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    if (r.has("output")) {
        auto o = r.child("output");
        if (o.has("path"))
            cfg.output_path = o.text("path");
        if (o.has("format")) {
            try {
                cfg.format = parse_format(o.text("format"));
            } catch (const ConfigError& e) {
                o.fail("format", e.what());
            }
        }
    }
    if (r.has("eval")) {
        auto e = r.child("eval");
        if (e.has("rel_tol"))
            cfg.eval.policy.rel_tol = e.number("rel_tol");
        if (e.has("max_terms"))
            cfg.eval.policy.max_terms = static_cast<int>(e.count("max_terms"));
        if (e.has("crosscheck_tol"))
            cfg.eval.crosscheck_tol = e.number("crosscheck_tol");
        if (e.has("multiprecision"))
            cfg.eval.allow_multiprecision = e.node()["multiprecision"].as<bool>();
        if (e.has("method")) {
            const auto m = e.text("method");
            if (m == "auto")
                cfg.eval.method = aoi::EvalOptions::Method::automatic;
            else if (m == "series")
                cfg.eval.method = aoi::EvalOptions::Method::series;
            else if (m == "quadrature")
                cfg.eval.method = aoi::EvalOptions::Method::quadrature;
            else
                e.fail("method", "expected auto | series | quadrature");
        }
        try {
            cfg.eval.policy.validate();
        } catch (const DomainError& err) {
            throw ConfigError(std::string("eval: ") + err.what());
        }
    }
    if (r.has("analyze")) {
        auto a = r.child("analyze");
        if (a.has("zetas"))
            cfg.analyze.zetas = a.numbers("zetas");
        if (a.has("v_grid"))
            cfg.analyze.v_grid = a.text("v_grid");
        if (a.has("mc_cycles"))
            cfg.analyze.mc_cycles = a.count("mc_cycles");
    }
    if (r.has("sweep")) {
        auto s = r.child("sweep");
        if (s.has("target_aoi"))
            cfg.sweep.target_aoi = s.quantity("target_aoi", Dimension::time);
        if (s.has("zetas"))
            cfg.sweep.zetas = s.numbers("zetas");
    }
    if (r.has("simulate")) {
        auto s = r.child("simulate");
        if (s.has("duration"))
            cfg.simulate_duration = s.quantity("duration", Dimension::time);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw IoError(path + ": cannot open config file");
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config(root);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace aoi_hlf::cli

#endif
