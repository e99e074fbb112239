#ifndef AOI_HLF_LATENCY_HPP
#define AOI_HLF_LATENCY_HPP

// Consensus latency: Gamma fitting and sampling, and a discrete-event model
// of the endorse -> order -> validate pipeline with MVCC invalidation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "aoi_hlf/detail/compensated_sum.hpp"
#include "aoi_hlf/detail/parallel.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/gamma_params.hpp"
#include "aoi_hlf/specfun.hpp"

namespace aoi_hlf::latency {

// ---------------------------------------------------------------------------
// Gamma fit and sampling

namespace detail {

// s = ln(mean) - mean(ln x), the sufficient statistic of the shape MLE.
inline double log_mean_gap(const std::vector<double>& samples, double& mean)
{
    if (samples.size() < 30)
        throw SampleError("fit_gamma_mle: need at least 30 samples, got " +
                          std::to_string(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        aoi_hlf::detail::require(std::isfinite(samples[i]) && samples[i] > 0,
                                 "fit_gamma_mle: sample " + std::to_string(i) +
                                     " is not strictly positive");
    // Sorted accumulation makes the fit independent of sample order.
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    aoi_hlf::detail::CompensatedSum<double> sum, log_sum;
    for (double x : sorted) {
        sum += x;
        log_sum += std::log(x);
    }
    const double n = static_cast<double>(samples.size());
    mean = sum.value() / n;
    const double s = std::log(mean) - log_sum.value() / n;
    if (!(s > 0))
        throw SampleError("fit_gamma_mle: degenerate sample (all values equal)");
    return s;
}

inline double thom_shape(double s)
{
    return (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
}

} // namespace detail

/// Thom's closed-form approximation of the shape MLE.
inline double thom_shape_estimate(const std::vector<double>& samples)
{
    double mean = 0;
    return detail::thom_shape(detail::log_mean_gap(samples, mean));
}

/// Maximum-likelihood Gamma(shape, rate): Thom start, Newton on
/// ln a - psi(a) = s.
inline GammaParams fit_gamma_mle(const std::vector<double>& samples)
{
    double mean = 0;
    const double s = detail::log_mean_gap(samples, mean);
    double a = detail::thom_shape(s);
    for (int it = 0; it < 100; ++it) {
        const double f = std::log(a) - specfun::digamma(a) - s;
        const double df = 1.0 / a - specfun::trigamma(a);
        double step = f / df;
        while (a - step <= 0)
            step /= 2;
        a -= step;
        if (std::abs(step) < 1e-10)
            return {a, a / mean};
    }
    throw ConvergenceError("fit_gamma_mle: Newton iteration did not converge");
}

/// Kolmogorov-Smirnov distance between the empirical CDF and Gamma(p).
inline double ks_distance(std::vector<double> samples, const GammaParams& p)
{
    p.validate();
    aoi_hlf::detail::require(!samples.empty(), "ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = samples[i];
        const double f = x > 0 ? specfun::regularized_lower_gamma(p.shape, p.rate * x) : 0.0;
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

// Asymptotic 1% critical value (Kolmogorov distribution).
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// i.i.d. Gamma draws (Marsaglia-Tsang rejection via the standard library).
inline std::vector<double> sample_gamma(const GammaParams& p, std::size_t count, std::uint64_t seed)
{
    p.validate();
    aoi_hlf::detail::require(count >= 1, "sample_gamma: count must be >= 1");
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> dist(p.shape, 1.0 / p.rate);
    std::vector<double> out(count);
    for (auto& x : out)
        x = dist(gen);
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline simulator

struct LatencyDist
{
    enum class Kind { constant, exponential, gamma };
    Kind kind = Kind::constant;
    double a = 0.0; // constant value | exponential mean | gamma shape
    double b = 0.0; // gamma rate

    static LatencyDist constant(double v) { return {Kind::constant, v, 0.0}; }
    static LatencyDist exponential(double mean) { return {Kind::exponential, mean, 0.0}; }
    static LatencyDist gamma(double shape, double rate) { return {Kind::gamma, shape, rate}; }

    double mean() const
    {
        switch (kind) {
        case Kind::constant: return a;
        case Kind::exponential: return a;
        case Kind::gamma: return a / b;
        }
        return 0;
    }

    // Infimum of the support.
    double minimum() const { return kind == Kind::constant ? a : 0.0; }

    void validate(const std::string& name) const
    {
        bool ok = false;
        switch (kind) {
        case Kind::constant: ok = std::isfinite(a) && a >= 0; break;
        case Kind::exponential: ok = std::isfinite(a) && a > 0; break;
        case Kind::gamma: ok = std::isfinite(a) && a > 0 && std::isfinite(b) && b > 0; break;
        }
        if (!ok)
            throw ConfigError(name + ": invalid latency distribution parameters");
    }

    template <typename Gen>
    double draw(Gen& gen) const
    {
        switch (kind) {
        case Kind::constant: return a;
        case Kind::exponential: return std::exponential_distribution<double>(1.0 / a)(gen);
        case Kind::gamma: return std::gamma_distribution<double>(this->a, 1.0 / b)(gen);
        }
        return a;
    }

    friend bool operator==(const LatencyDist&, const LatencyDist&) = default;
};

inline std::string to_string(LatencyDist::Kind k)
{
    switch (k) {
    case LatencyDist::Kind::constant: return "constant";
    case LatencyDist::Kind::exponential: return "exponential";
    case LatencyDist::Kind::gamma: return "gamma";
    }
    return "?";
}

struct PipelineConfig
{
    LatencyDist endorse_latency = LatencyDist::gamma(2.0, 4.0);
    double order_overhead = 0.15;
    LatencyDist validate_latency = LatencyDist::gamma(2.0, 2.5);
    std::size_t block_size = 10;
    double block_timeout = 1.0;
    std::size_t key_count = 10;
    double target_key_fraction = 0.3;
    double tx_rate = 4.0;

    void validate() const
    {
        endorse_latency.validate("endorse_latency");
        validate_latency.validate("validate_latency");
        if (!(std::isfinite(order_overhead) && order_overhead >= 0))
            throw ConfigError("order_overhead must be >= 0");
        if (block_size < 1)
            throw ConfigError("block_size must be >= 1");
        if (!(std::isfinite(block_timeout) && block_timeout > 0))
            throw ConfigError("block_timeout must be > 0");
        if (key_count < 1)
            throw ConfigError("key_count must be >= 1");
        if (!(target_key_fraction > 0 && target_key_fraction <= 1))
            throw ConfigError("target_key_fraction must lie in (0, 1]");
        if (key_count == 1 && target_key_fraction != 1)
            throw ConfigError("target_key_fraction must be 1 with a single key");
        if (!(std::isfinite(tx_rate) && tx_rate > 0))
            throw ConfigError("tx_rate must be > 0");
    }
};

enum class Verdict { valid, mvcc_invalid };

inline std::string to_string(Verdict v) { return v == Verdict::valid ? "valid" : "mvcc_invalid"; }

struct TxRecord
{
    std::uint64_t tx_id = 0;
    std::size_t key = 0;
    double submit_time = 0;
    double endorse_done = 0;
    std::uint64_t block_id = 0;
    double commit_time = 0;
    std::uint64_t read_version = 0;
    Verdict verdict = Verdict::valid;
    std::uint64_t commit_seq = 0; // position in the global validation order
};

struct Arrival
{
    double time;
    std::size_t key;
};

namespace detail {

enum class EventKind { submit, endorsed, timeout, ordered, validated };

struct Event
{
    double time;
    std::uint64_t seq;
    EventKind kind;
    std::uint64_t id; // tx id or block id

    bool operator>(const Event& o) const
    {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

struct Block
{
    std::vector<std::uint64_t> txs;
    bool open = true;
};

} // namespace detail

/// Runs the pipeline over a fixed arrival sequence. Endorse and validate
/// draws come from independent substreams of `seed`, in submission and
/// block order respectively.
inline std::vector<TxRecord> run_pipeline_with_arrivals(const PipelineConfig& cfg,
                                                        const std::vector<Arrival>& arrivals,
                                                        std::uint64_t seed)
{
    cfg.validate();
    auto endorse_gen = aoi_hlf::detail::substream(seed, 1);
    auto validate_gen = aoi_hlf::detail::substream(seed, 2);

    std::vector<TxRecord> txs(arrivals.size());
    std::vector<std::uint64_t> version(cfg.key_count, 0);
    std::vector<detail::Block> blocks;
    std::priority_queue<detail::Event, std::vector<detail::Event>, std::greater<>> queue;
    std::uint64_t seq = 0, commit_seq = 0;
    auto push = [&](double t, detail::EventKind k, std::uint64_t id) {
        queue.push({t, seq++, k, id});
    };

    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        const auto& a = arrivals[i];
        if (!(std::isfinite(a.time) && a.time >= 0))
            throw DomainError("arrival times must be finite and >= 0");
        if (a.key >= cfg.key_count)
            throw DomainError("arrival key out of range");
        txs[i].tx_id = i;
        txs[i].key = a.key;
        txs[i].submit_time = a.time;
        push(a.time, detail::EventKind::submit, i);
    }

    bool has_open = false;
    std::uint64_t open_block = 0;
    double order_free = 0, validate_free = 0;

    auto close_block = [&](double now, std::uint64_t b) {
        blocks[b].open = false;
        has_open = false;
        const double done = std::max(now, order_free) + cfg.order_overhead;
        order_free = done;
        push(done, detail::EventKind::ordered, b);
    };

    while (!queue.empty()) {
        const detail::Event ev = queue.top();
        queue.pop();
        switch (ev.kind) {
        case detail::EventKind::submit: {
            auto& tx = txs[ev.id];
            tx.read_version = version[tx.key];
            tx.endorse_done = ev.time + cfg.endorse_latency.draw(endorse_gen);
            push(tx.endorse_done, detail::EventKind::endorsed, ev.id);
            break;
        }
        case detail::EventKind::endorsed: {
            if (!has_open) {
                open_block = blocks.size();
                blocks.push_back({});
                has_open = true;
                push(ev.time + cfg.block_timeout, detail::EventKind::timeout, open_block);
            }
            auto& blk = blocks[open_block];
            blk.txs.push_back(ev.id);
            txs[ev.id].block_id = open_block;
            if (blk.txs.size() >= cfg.block_size)
                close_block(ev.time, open_block);
            break;
        }
        case detail::EventKind::timeout:
            if (blocks[ev.id].open)
                close_block(ev.time, ev.id);
            break;
        case detail::EventKind::ordered: {
            const double done = std::max(ev.time, validate_free) +
                                cfg.validate_latency.draw(validate_gen);
            validate_free = done;
            push(done, detail::EventKind::validated, ev.id);
            break;
        }
        case detail::EventKind::validated:
            for (auto id : blocks[ev.id].txs) {
                auto& tx = txs[id];
                tx.commit_time = ev.time;
                tx.commit_seq = commit_seq++;
                if (tx.read_version == version[tx.key]) {
                    tx.verdict = Verdict::valid;
                    ++version[tx.key];
                } else {
                    tx.verdict = Verdict::mvcc_invalid;
                }
            }
            break;
        }
    }
    return txs;
}

/// Poisson arrivals on [0, duration): key 0 is the monitored key with
/// probability target_key_fraction, the rest are uniform over keys 1..K-1.
inline std::vector<Arrival> generate_arrivals(const PipelineConfig& cfg, double duration,
                                              std::uint64_t seed)
{
    cfg.validate();
    aoi_hlf::detail::require(std::isfinite(duration) && duration > 0,
                             "run_pipeline: duration must be > 0");
    auto gen = aoi_hlf::detail::substream(seed, 0);
    std::exponential_distribution<double> gap(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Arrival> out;
    double t = 0;
    for (;;) {
        // Unit-rate gaps scaled by 1/rate keep arrival streams coupled across rates.
        t += gap(gen) / cfg.tx_rate;
        if (t >= duration)
            break;
        std::size_t key = 0;
        const double u = unit(gen);
        if (u >= cfg.target_key_fraction && cfg.key_count > 1) {
            const double w = (u - cfg.target_key_fraction) / (1.0 - cfg.target_key_fraction);
            key = 1 + std::min(cfg.key_count - 2,
                               static_cast<std::size_t>(w * static_cast<double>(cfg.key_count - 1)));
        }
        out.push_back({t, key});
    }
    return out;
}

/// Records sorted by tx_id.
inline std::vector<TxRecord> run_pipeline(const PipelineConfig& cfg, double duration,
                                          std::uint64_t seed)
{
    return run_pipeline_with_arrivals(cfg, generate_arrivals(cfg, duration, seed), seed);
}

/// commit - submit of every valid transaction on `key`, in commit order.
inline std::vector<double> consensus_latency_samples(const std::vector<TxRecord>& records,
                                                     std::size_t key)
{
    std::vector<const TxRecord*> hits;
    for (const auto& r : records)
        if (r.key == key && r.verdict == Verdict::valid)
            hits.push_back(&r);
    std::sort(hits.begin(), hits.end(), [](const TxRecord* a, const TxRecord* b) {
        return a->commit_time != b->commit_time ? a->commit_time < b->commit_time
                                                : a->commit_seq < b->commit_seq;
    });
    std::vector<double> out;
    out.reserve(hits.size());
    for (const auto* r : hits)
        out.push_back(r->commit_time - r->submit_time);
    return out;
}

} // namespace aoi_hlf::latency

#endif
