#ifndef AOI_HLF_UPLINK_HPP
#define AOI_HLF_UPLINK_HPP

// Stochastic-geometry uplink: STP at a fixed distance, the target rate that
// meets a target STP, its average over the nearest-BS distance, and the
// resulting transmission latency. Closed forms assume pathloss exponent 4.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aoi_hlf/detail/parallel.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/quadrature.hpp"
#include "aoi_hlf/specfun.hpp"

namespace aoi_hlf::uplink {

/// Physical uplink parameters, SI units throughout.
struct NetworkConfig
{
    double tx_power = 1.0;          // W
    double noise_psd = 1e-13;       // W/Hz (-100 dBm/Hz)
    double bandwidth = 1e6;         // Hz
    double packet_bits = 5e5;       // bits
    double bs_density = 1e-4;       // BS per m^2
    double source_density = 1e-4;   // sources per m^2
    double pathloss_exponent = 4.0;
    double target_stp = 0.6;        // zeta
    double gen_rate = 15.0;         // rho_s, packets per second

    double noise_power() const { return noise_psd * bandwidth; }

    NetworkConfig with_target_stp(double zeta) const
    {
        NetworkConfig c = *this;
        c.target_stp = zeta;
        return c;
    }

    void validate() const
    {
        detail::require(tx_power > 0, "NetworkConfig: tx_power must be > 0");
        detail::require(noise_psd > 0, "NetworkConfig: noise_psd must be > 0");
        detail::require(bandwidth > 0, "NetworkConfig: bandwidth must be > 0");
        detail::require(packet_bits > 0, "NetworkConfig: packet_bits must be > 0");
        detail::require(bs_density > 0, "NetworkConfig: bs_density must be > 0");
        detail::require(source_density > 0, "NetworkConfig: source_density must be > 0");
        detail::require(gen_rate > 0, "NetworkConfig: gen_rate must be > 0");
        detail::require(pathloss_exponent > 2, "NetworkConfig: pathloss_exponent must be > 2");
    }

    // Preconditions of every closed-form operation.
    void validate_closed_form() const
    {
        validate();
        detail::require(pathloss_exponent == 4.0,
                        "closed-form uplink operations require pathloss_exponent = 4");
        detail::require(target_stp > 0 && target_stp < 1,
                        "target_stp must lie in (0, 1), got " + std::to_string(target_stp));
    }
};

struct UplinkDerived
{
    double m;         // m^2
    double mean_rate; // bit/s
    double tx_latency; // s
};

/// SINR threshold theta = 2^{rate/W} - 1.
inline double sinr_threshold(double rate, double bandwidth)
{
    return std::expm1(rate * std::numbers::ln2 / bandwidth);
}

/// STP at link distance r for the given rate (pathloss exponent 4).
inline double stp_at_distance(double r, double rate, const NetworkConfig& cfg)
{
    cfg.validate();
    detail::require(cfg.pathloss_exponent == 4.0, "stp_at_distance requires pathloss_exponent = 4");
    detail::require(r > 0, "stp_at_distance: r must be > 0");
    detail::require(rate >= 0, "stp_at_distance: rate must be >= 0");
    const double theta = sinr_threshold(rate, cfg.bandwidth);
    const double r2 = r * r;
    const double noise_term = r2 * r2 * cfg.noise_power() * theta / cfg.tx_power;
    const double interference_term =
        cfg.bs_density * std::numbers::pi * std::numbers::pi * r2 * std::sqrt(theta) / 2.0;
    return std::exp(-noise_term - interference_term);
}

/// Composite constant m with theta(r) = (m / r^2)^2 at the target STP.
/// Positive root of (N0 W / P) m^2 + (pi^2 lambda / 2) m + ln zeta = 0,
/// written without the subtraction that cancels as zeta -> 1.
inline double composite_m(const NetworkConfig& cfg)
{
    cfg.validate_closed_form();
    const double pi2_lambda = std::numbers::pi * std::numbers::pi * cfg.bs_density;
    const double neg_log_zeta = -std::log(cfg.target_stp);
    const double root =
        std::sqrt(pi2_lambda * pi2_lambda + 16.0 * cfg.noise_power() * neg_log_zeta / cfg.tx_power);
    return 4.0 * neg_log_zeta / (pi2_lambda + root);
}

inline double target_rate_at_distance(double r, const NetworkConfig& cfg)
{
    detail::require(r > 0, "target_rate_at_distance: r must be > 0");
    const double q = composite_m(cfg) / (r * r);
    return cfg.bandwidth * std::log1p(q * q) / std::numbers::ln2;
}

/// R-bar by quadrature of the Rayleigh-distance average, in the variable
/// u = lambda pi r^2 with the split at u = lambda pi m.
inline double mean_target_rate(const NetworkConfig& cfg, double rel_tol = 1e-9)
{
    const double x = composite_m(cfg) * cfg.bs_density * std::numbers::pi;
    auto integrand = [x](double u) {
        if (u <= 0)
            return 0.0; // integrable log singularity; never sampled by tanh-sinh
        if (u < x) {
            double q = u / x;
            return (2.0 * std::log(x / u) + std::log1p(q * q)) * std::exp(-u);
        }
        double q = x / u;
        return std::log1p(q * q) * std::exp(-u);
    };
    // Both pieces are requested well inside rel_tol so the sum meets it.
    const double inner = std::min(rel_tol, 1e-12);
    auto head = quad::finite(integrand, 0.0, x, inner * 1e3, 1e-300);
    auto tail = quad::semi_infinite(integrand, x, inner * 1e3, 1e-300);
    const double total = head.value + tail.value;
    if (head.error + tail.error > rel_tol * total)
        throw ConvergenceError("mean_target_rate: quadrature missed rel_tol");
    return cfg.bandwidth / std::numbers::ln2 * total;
}

/// Readings of the closed form for R-bar. `verbatim` is the printed
/// expression W/ln2 {ln m - Ci(x)cos x - Si(x)sin x + C + ln(lambda pi)};
/// the others apply a factor 2 and/or replace Si by si(x) = Si(x) - pi/2.
enum class MeanRateVariant { verbatim, doubled, si_shifted, doubled_si_shifted };

inline constexpr std::array<MeanRateVariant, 4> all_mean_rate_variants{
    MeanRateVariant::verbatim, MeanRateVariant::doubled, MeanRateVariant::si_shifted,
    MeanRateVariant::doubled_si_shifted};

inline std::string to_string(MeanRateVariant v)
{
    switch (v) {
    case MeanRateVariant::verbatim: return "verbatim";
    case MeanRateVariant::doubled: return "factor2";
    case MeanRateVariant::si_shifted: return "si_shift";
    case MeanRateVariant::doubled_si_shifted: return "factor2+si_shift";
    }
    return "?";
}

inline double mean_target_rate_closed_form(const NetworkConfig& cfg, MeanRateVariant variant)
{
    const double m = composite_m(cfg);
    const double lp = cfg.bs_density * std::numbers::pi;
    const double x = m * lp;
    const bool doubled =
        variant == MeanRateVariant::doubled || variant == MeanRateVariant::doubled_si_shifted;
    const bool shifted =
        variant == MeanRateVariant::si_shifted || variant == MeanRateVariant::doubled_si_shifted;
    const double si = specfun::sine_integral(x) - (shifted ? std::numbers::pi / 2 : 0.0);
    const double ci = specfun::cosine_integral(x);
    const double brace = std::log(m) - ci * std::cos(x) - si * std::sin(x) + std::numbers::egamma +
                         std::log(lp);
    return (doubled ? 2.0 : 1.0) * cfg.bandwidth / std::numbers::ln2 * brace;
}

struct VariantDeviation
{
    MeanRateVariant variant;
    double max_rel_dev; // max over the zeta grid of |closed/quad - 1|
    std::vector<double> ratios;
};

struct ClosedFormAdjudication
{
    std::vector<double> zetas;
    std::vector<double> quadrature;
    std::vector<VariantDeviation> variants;
    std::optional<MeanRateVariant> selected; // set iff exactly one variant matches
    int matching = 0;

    const VariantDeviation& deviation(MeanRateVariant v) const
    {
        for (const auto& d : variants)
            if (d.variant == v)
                return d;
        throw DomainError("unknown variant");
    }
};

/// Compares every closed-form reading against quadrature over a zeta grid.
inline ClosedFormAdjudication adjudicate_closed_form(const NetworkConfig& cfg,
                                                     const std::vector<double>& zetas,
                                                     double tol = 1e-6)
{
    ClosedFormAdjudication out;
    out.zetas = zetas;
    for (double z : zetas)
        out.quadrature.push_back(mean_target_rate(cfg.with_target_stp(z)));
    for (auto v : all_mean_rate_variants) {
        VariantDeviation d{v, 0.0, {}};
        for (std::size_t i = 0; i < zetas.size(); ++i) {
            double ratio = mean_target_rate_closed_form(cfg.with_target_stp(zetas[i]), v) /
                           out.quadrature[i];
            d.ratios.push_back(ratio);
            d.max_rel_dev = std::max(d.max_rel_dev, std::abs(ratio - 1.0));
        }
        if (d.max_rel_dev <= tol) {
            ++out.matching;
            out.selected = v;
        }
        out.variants.push_back(std::move(d));
    }
    if (out.matching != 1)
        out.selected.reset();
    return out;
}

/// Y = D / R-bar (quadrature R-bar).
inline double transmission_latency(const NetworkConfig& cfg)
{
    return cfg.packet_bits / mean_target_rate(cfg);
}

inline UplinkDerived derive(const NetworkConfig& cfg)
{
    const double rate = mean_target_rate(cfg);
    return {composite_m(cfg), rate, cfg.packet_bits / rate};
}

/// Distance-averaged STP when every source transmits at `rate`; the
/// alternative operating point for p_c.
inline double average_stp_at_rate(double rate, const NetworkConfig& cfg)
{
    cfg.validate();
    const double lp = cfg.bs_density * std::numbers::pi;
    // t = r^2 ~ Exp(lambda pi)
    auto f = [&](double t) {
        return t <= 0 ? lp : stp_at_distance(std::sqrt(t), rate, cfg) * lp * std::exp(-lp * t);
    };
    return quad::semi_infinite(f, 0.0, 1e-10).value;
}

struct StpEstimate
{
    double estimate;
    double half_width; // 99% binomial (normal approximation)
    std::uint64_t trials;
    std::uint64_t successes;
    double disk_radius; // m
};

namespace detail {

// Interferer disk radius: truncated mean interference below N0 W / 100, and
// its effect on the STP exponent (s * E[I_out]) below 1e-3.
inline double oracle_disk_radius(double r, double theta, const NetworkConfig& cfg)
{
    const double n = cfg.pathloss_exponent;
    const double c = 2.0 * std::numbers::pi * cfg.bs_density / (n - 2.0);
    const double by_noise = c * cfg.tx_power * 100.0 / cfg.noise_power();
    const double by_exponent = c * std::pow(r, n) * theta / 1e-3;
    return std::pow(std::max(by_noise, by_exponent), 1.0 / (n - 2.0));
}

} // namespace detail

/// Spatial Monte Carlo of the STP: HPPP interferers of density lambda around
/// the serving BS, unit-mean exponential fading on every link.
inline StpEstimate spatial_stp_oracle(double r, double rate, const NetworkConfig& cfg,
                                      std::uint64_t trials, std::uint64_t seed, unsigned workers = 0)
{
    cfg.validate();
    aoi_hlf::detail::require(r > 0, "spatial_stp_oracle: r must be > 0");
    aoi_hlf::detail::require(rate >= 0, "spatial_stp_oracle: rate must be >= 0");
    aoi_hlf::detail::require(trials >= 10000, "spatial_stp_oracle: trials must be >= 1e4");

    const double theta = sinr_threshold(rate, cfg.bandwidth);
    const double n = cfg.pathloss_exponent;
    const double radius = detail::oracle_disk_radius(r, theta, cfg);
    const double radius2 = radius * radius;
    const double lp = cfg.bs_density * std::numbers::pi;
    const double signal_scale = cfg.tx_power * std::pow(r, -n);
    const double noise = cfg.noise_power();
    const bool quartic = n == 4.0;

    constexpr std::uint64_t chunk_size = 1 << 15;
    const std::size_t chunks = (trials + chunk_size - 1) / chunk_size;
    std::vector<std::uint64_t> wins(chunks, 0);

    aoi_hlf::detail::for_each_chunk(chunks, workers, [&](std::size_t c) {
        auto gen = aoi_hlf::detail::substream(seed, c);
        std::exponential_distribution<double> expo(1.0);
        const std::uint64_t begin = c * chunk_size;
        const std::uint64_t end = std::min(trials, begin + chunk_size);
        std::uint64_t ok = 0;
        for (std::uint64_t t = begin; t < end; ++t) {
            const double h0 = expo(gen);
            if (theta == 0.0) {
                ++ok;
                continue;
            }
            const double budget = signal_scale * h0 / theta - noise;
            if (budget < 0)
                continue;
            double interference = 0.0, d2 = 0.0;
            bool failed = false;
            for (;;) {
                d2 += expo(gen) / lp;
                if (d2 > radius2)
                    break;
                const double gain = quartic ? 1.0 / (d2 * d2) : std::pow(d2, -n / 2.0);
                interference += cfg.tx_power * expo(gen) * gain;
                if (interference > budget) {
                    failed = true;
                    break;
                }
            }
            if (!failed)
                ++ok;
        }
        wins[c] = ok;
    });

    std::uint64_t successes = 0;
    for (auto w : wins)
        successes += w;
    const double p = static_cast<double>(successes) / static_cast<double>(trials);
    const double z99 = 2.5758293035489004;
    return {p, z99 * std::sqrt(p * (1 - p) / static_cast<double>(trials)), trials, successes, radius};
}

} // namespace aoi_hlf::uplink

#endif
