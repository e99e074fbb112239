#ifndef AOI_HLF_AOI_HPP
#define AOI_HLF_AOI_HPP

// AoI violation probability P[AoI >= v] = E[T^v] / E[T] for the
// blockchain-backed update process: closed-form series, a quadrature of the
// same renewal-reward ratio, and two Monte Carlo estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "aoi_hlf/detail/compensated_sum.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/gamma_params.hpp"
#include "aoi_hlf/quadrature.hpp"
#include "aoi_hlf/specfun.hpp"
#include "aoi_hlf/uplink.hpp"

namespace aoi_hlf::aoi {

using specfun::EvalPolicy;

struct AoiModel
{
    GammaParams consensus;       // X ~ Gamma(alpha, beta)
    double effective_rate = 1.0; // rho = rho_s * p_c
    double tx_latency = 0.0;     // Y

    double mean_cycle() const { return consensus.mean() + 1.0 / effective_rate; }

    void validate() const
    {
        consensus.validate();
        aoi_hlf::detail::require(std::isfinite(effective_rate) && effective_rate > 0,
                        "AoiModel: effective_rate must be > 0");
        aoi_hlf::detail::require(std::isfinite(tx_latency) && tx_latency >= 0,
                        "AoiModel: tx_latency must be >= 0");
    }
};

struct AoiQuery
{
    double target_aoi = 1.0; // v

    double consensus_budget(const AoiModel& m) const { return target_aoi - m.tx_latency; }

    void validate() const
    {
        aoi_hlf::detail::require(std::isfinite(target_aoi) && target_aoi > 0,
                        "AoiQuery: target_aoi must be > 0");
    }
};

struct SamplePathSummary
{
    double violation_fraction = 0;
    double standard_error = 0; // of violation_fraction
    double mean_cycle = 0;
    double mean_cycle_se = 0;
    double mean_excess = 0;
    std::vector<double> paoi_samples;
    std::uint64_t cycles = 0;
    std::uint64_t effective_count = 0;
    std::uint64_t invalid_count = 0;
};

// ---------------------------------------------------------------------------
// Series

/// `proof_consistent` follows the derivation step by step. `as_printed`
/// keeps the closed form's extra T_c^alpha factor on the middle term and the
/// +beta T_c argument in the last series; it is exposed for comparison only
/// and is returned without range checks.
enum class SeriesVariant { proof_consistent, as_printed };

namespace detail {

template <typename Real>
class SeriesSum
{
 public:
    SeriesSum(const char* name, Real tol, double peak_hint, int max_terms)
        : name_(name), tol_(tol), peak_hint_(peak_hint), max_terms_(max_terms)
    {
    }

    // `size` bounds the magnitude of everything that went into `term`.
    bool add(const Real& term, const Real& size, int index)
    {
        using std::abs;
        sum_ += term;
        magnitude_ += size;
        if (!specfun::detail::finite(sum_.value()) || !specfun::detail::finite(size))
            throw ConvergenceError(std::string(name_) + ": non-finite partial sum");
        small_run_ = size <= tol_ * abs(sum_.value()) ? small_run_ + 1 : 0;
        if (index > peak_hint_) {
            grow_run_ = size > prev_ ? grow_run_ + 1 : 0;
            if (grow_run_ >= 20)
                throw DivergenceError(std::string(name_) + ": terms grew for 20 consecutive indices");
        }
        prev_ = size;
        if (small_run_ >= 3)
            return true;
        if (index + 1 >= max_terms_)
            throw DivergenceError(std::string(name_) + ": max_terms reached");
        return false;
    }

    Real value() const { return sum_.value(); }
    Real magnitude() const { return magnitude_ + sum_.magnitude(); }

 private:
    const char* name_;
    Real tol_;
    double peak_hint_;
    int max_terms_;
    aoi_hlf::detail::CompensatedSum<Real> sum_;
    Real magnitude_{0};
    Real prev_{0};
    int small_run_ = 0;
    int grow_run_ = 0;
};

} // namespace detail

/// Closed-form series for P[AoI >= v]. Terminates each series at the
/// precision of Real and throws CancellationError when the accumulated
/// magnitude leaves less than policy.rel_tol of relative accuracy.
template <typename Real = double>
double violation_probability_series(const AoiModel& model, const AoiQuery& query,
                                    const EvalPolicy& policy = {},
                                    SeriesVariant variant = SeriesVariant::proof_consistent)
{
    using std::abs;
    using std::exp;
    using std::log;
    using std::pow;
    model.validate();
    query.validate();
    policy.validate();
    const double tc_d = query.consensus_budget(model);
    if (tc_d <= 0)
        return 1.0;

    // Peak term size is about e^{(rho + |rho - beta|) T_c}; give up early when
    // that cancellation alone would exhaust the working precision.
    const double digits_needed =
        (model.effective_rate + std::abs(model.effective_rate - model.consensus.rate)) * tc_d /
        std::log(10.0);
    if (digits_needed > std::numeric_limits<Real>::digits10 - 2)
        throw CancellationError("series: about " + std::to_string(static_cast<int>(digits_needed)) +
                                " digits of cancellation expected");

    const Real eps = specfun::detail::epsilon<Real>();
    const EvalPolicy inner{static_cast<double>(eps), std::max(policy.max_terms, 2000)};
    const Real a(model.consensus.shape), b(model.consensus.rate), rho(model.effective_rate);
    const Real tc(tc_d);
    const Real x = b * tc;
    const bool printed = variant == SeriesVariant::as_printed;

    const Real gam = specfun::lower_incomplete_gamma<Real>(a, x, inner);
    const Real q_upper = specfun::regularized_upper_gamma<Real>(a, x, inner);
    const Real gamma_a = specfun::detail::tgamma(a);

    // h_j = B(a+j+2, a) 1F1(a; 2a+j+2; -x); shared by every series below.
    std::vector<Real> beta_j, h;
    auto h_at = [&](std::size_t j) -> const Real& {
        while (h.size() <= j) {
            const std::size_t i = h.size();
            if (i == 0)
                beta_j.push_back(specfun::beta_fn(Real(a + 2), a));
            else
                beta_j.push_back(beta_j.back() * (a + Real(i + 1)) / (2 * a + Real(i + 1)));
            h.push_back(beta_j.back() *
                        specfun::kummer_1f1(a, Real(2 * a + Real(i + 2)), Real(-x), inner));
        }
        return h[j];
    };

    // First group: sum_n (a_n - b_n), scaled by rho / ((beta + rho alpha) Gamma(alpha)^2).
    const Real r = (rho - b) / rho;
    const Real rt = (rho - b) * tc;
    const Real rho_tc = rho * tc;
    const Real a_scale = pow(b / rho, a + 1) * gam;
    const Real b_scale = pow(x, 2 * a + 1);
    double outer_hint = static_cast<double>(abs(rt)) + static_cast<double>(a);
    if (abs(r) < 1 && r != 0)
        outer_hint += static_cast<double>(a / -log(abs(r)));
    detail::SeriesSum<Real> outer("series (outer)", eps, outer_hint, inner.max_terms);
    Real ga = gamma_a;    // Gamma(a+n)/n! r^n
    Real power(1);        // rt^n / n!
    for (int n = 0;; ++n) {
        if (n > 0) {
            ga *= (a + Real(n - 1)) / Real(n) * r;
            power *= rt / Real(n);
        }
        detail::SeriesSum<Real> ks("series (inner)", eps, static_cast<double>(rho_tc),
                                   inner.max_terms);
        Real p(1); // (-rho tc)^k / k!
        for (int k = 0;; ++k) {
            if (k > 0)
                p *= -rho_tc / Real(k);
            const Real t = p * h_at(static_cast<std::size_t>(n + k)) / (a + Real(n + k + 1));
            if (ks.add(t, abs(t), k))
                break;
        }
        const Real an = a_scale * ga;
        const Real bn_scale = b_scale * power / (a + Real(n));
        const Real bn = bn_scale * ks.value();
        if (outer.add(an - bn, abs(an) + abs(bn_scale) * ks.magnitude(), n))
            break;
    }
    const Real first_scale = rho / ((b + rho * a) * gamma_a * gamma_a);

    // Second group: alpha gamma - S2 - M + S4.
    const Real m_term = pow(x, a + 1) * specfun::beta_fn(a, Real(2)) *
                        specfun::kummer_1f1(a, Real(a + 2), Real(-x), inner) *
                        (printed ? pow(tc, a) : Real(1));
    detail::SeriesSum<Real> mixed("series (middle)", eps, static_cast<double>(x), inner.max_terms);
    Real e = pow(x, 2 * a + 1) / gamma_a; // (-1)^n x^{2a+n+1} / (n! Gamma(a))
    for (int n = 0;; ++n) {
        if (n > 0)
            e *= -x / Real(n);
        const Real hn = h_at(static_cast<std::size_t>(n));
        const Real s2 = e * hn / (a + Real(n + 1));
        const Real s4 = printed ? e * beta_j[static_cast<std::size_t>(n)] *
                                      specfun::kummer_1f1(a, Real(2 * a + Real(n + 2)), x, inner) /
                                      (a + Real(n))
                                : e * hn / (a + Real(n));
        if (mixed.add(s4 - s2, abs(s2) + abs(s4), n))
            break;
    }
    const Real second_scale = rho / ((b + rho * a) * gamma_a);
    const Real brace = a * gam - m_term + mixed.value();

    const Real total = first_scale * outer.value() + second_scale * brace + q_upper;
    const Real magnitude = first_scale * outer.magnitude() +
                           second_scale * (abs(a * gam) + abs(m_term) + mixed.magnitude()) +
                           abs(q_upper);
    const double value = static_cast<double>(total);
    if (printed)
        return value;

    // Rounding in the special functions is a small multiple of eps per term.
    const double error = 64.0 * static_cast<double>(eps * magnitude);
    if (error > policy.rel_tol * std::max(std::abs(value), 1e-6))
        throw CancellationError("series: cancellation leaves error ~" + std::to_string(error) +
                                " on value " + std::to_string(value));
    const double slack = std::max(error, 1e-12);
    if (value < -slack || value > 1 + slack)
        throw ConvergenceError("series: result " + std::to_string(value) + " outside [0, 1]");
    return std::clamp(value, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Quadrature

namespace detail {

// e^{-z} 1F1(a; a+1; z) = 1F1(1; a+1; -z) for large z > 0, by its
// asymptotic expansion (a/z) sum_n (1-a)_n z^{-n}.
inline double scaled_kummer_asymptotic(double a, double z)
{
    double term = 1.0, sum = 1.0;
    for (int n = 0; n < 200; ++n) {
        const double next = term * (1.0 - a + n) / z;
        if (std::abs(next) >= std::abs(term) && n > 0)
            break;
        term = next;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum))
            return a / z * sum;
    }
    throw ConvergenceError("expected_excess: asymptotic expansion did not converge");
}

// int_0^s f_X(u) e^{-rho (s-u)} du
//   = e^{-rho s} (beta s)^a / Gamma(a+1) 1F1(a; a+1; (rho - beta) s).
inline double delayed_density_mass(double a, double b, double rho, double s)
{
    const double c = rho - b;
    const double z = c * s;
    if (std::abs(z) < 40.0)
        return std::exp(-rho * s + a * std::log(b * s) - std::lgamma(a + 1)) *
               specfun::kummer_1f1(a, a + 1, z);
    if (z < 0)
        return std::exp(-rho * s + a * std::log(b / -c)) * specfun::regularized_lower_gamma(a, -z);
    const double scaled = z >= 4.0 * a + 40.0
                              ? scaled_kummer_asymptotic(a, z)
                              : std::exp(-z) * specfun::kummer_1f1(a, a + 1, z, {1e-15, 5000});
    return std::exp(-b * s + a * std::log(b * s) - std::lgamma(a + 1)) * scaled;
}

// E[(X + T_int - s)^+] for s >= 0.
inline double expected_excess(const AoiModel& m, double s)
{
    const double a = m.consensus.shape, b = m.consensus.rate, rho = m.effective_rate;
    if (s <= 0)
        return m.mean_cycle() - s;
    const double q = specfun::regularized_upper_gamma(a, b * s);
    const double f1 = (delayed_density_mass(a, b, rho, s) + q) / rho;
    const double f23 = a / b * specfun::regularized_upper_gamma(a + 1, b * s) - s * q;
    return f1 + f23;
}

} // namespace detail

/// P[AoI >= v] from E[T^v] = int_0^{T_c} E[(W - (T_c - x))^+] f_X(x) dx
/// + E[T] Q(alpha, beta T_c), W = X + T_int.
inline double violation_probability_quadrature(const AoiModel& model, const AoiQuery& query,
                                               double rel_tol = 1e-9)
{
    model.validate();
    query.validate();
    const double tc = query.consensus_budget(model);
    if (tc <= 0)
        return 1.0;
    const auto& g = model.consensus;
    auto integrand = [&](double x) {
        if (x <= 0)
            return 0.0; // tanh-sinh never samples the endpoint itself
        return detail::expected_excess(model, tc - x) * specfun::gamma_pdf(x, g);
    };
    const double et = model.mean_cycle();
    const double tail = et * specfun::regularized_upper_gamma(g.shape, g.rate * tc);
    // The tolerance applies to the numerator body + tail, not the body alone.
    const double floor = rel_tol * tail + 1e-15 * et;
    // x^{alpha-1} is smooth enough for Gauss-Kronrod once alpha >= 2.
    const double body = g.shape >= 2.0 ? quad::smooth(integrand, 0.0, tc, rel_tol, floor).value
                                       : quad::finite(integrand, 0.0, tc, rel_tol, floor).value;
    const double p = (body + tail) / et;
    return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Facade

struct EvalOptions
{
    enum class Method { automatic, series, quadrature };
    Method method = Method::automatic;
    EvalPolicy policy{1e-10, 2000};
    bool allow_multiprecision = true;
    double crosscheck_tol = 1e-3;
    double quadrature_rel_tol = 1e-9;
};

struct Evaluation
{
    double value = 0;
    std::string method; // boundary | series | series-mp50 | series-mp100 | quadrature
    std::string diagnostic;
    std::optional<double> series;
    std::optional<double> quadrature;
};

using mp50 = boost::multiprecision::cpp_bin_float_50;
using mp100 = boost::multiprecision::cpp_bin_float_100;

/// Series first, escalating precision on cancellation or divergence; the
/// quadrature value is authoritative whenever the two disagree by more than
/// crosscheck_tol or the series cannot be evaluated.
inline Evaluation violation_probability(const AoiModel& model, const AoiQuery& query,
                                        const EvalOptions& opt = {})
{
    model.validate();
    query.validate();
    Evaluation ev;
    if (query.consensus_budget(model) <= 0) {
        ev.value = 1.0;
        ev.method = "boundary";
        return ev;
    }

    auto try_series = [&]() {
        struct Attempt
        {
            const char* name;
            double (*fn)(const AoiModel&, const AoiQuery&, const EvalPolicy&, SeriesVariant);
        };
        std::vector<Attempt> attempts{{"series", &violation_probability_series<double>}};
        if (opt.allow_multiprecision) {
            attempts.push_back({"series-mp50", &violation_probability_series<mp50>});
            attempts.push_back({"series-mp100", &violation_probability_series<mp100>});
        }
        for (const auto& at : attempts) {
            try {
                ev.series = at.fn(model, query, opt.policy, SeriesVariant::proof_consistent);
                ev.method = at.name;
                return;
            } catch (const ConvergenceError& e) {
                ev.diagnostic += std::string(at.name) + ": " + e.what() + "; ";
            }
        }
    };

    if (opt.method != EvalOptions::Method::quadrature)
        try_series();
    if (opt.method == EvalOptions::Method::series) {
        if (!ev.series)
            throw ConvergenceError("series evaluation failed: " + ev.diagnostic);
        ev.value = *ev.series;
        return ev;
    }

    try {
        ev.quadrature = violation_probability_quadrature(model, query, opt.quadrature_rel_tol);
    } catch (const ConvergenceError& e) {
        if (!ev.series)
            throw ConvergenceError("series and quadrature both failed: " + ev.diagnostic +
                                   "quadrature: " + e.what());
        ev.diagnostic += std::string("quadrature: ") + e.what() + "; ";
        ev.value = *ev.series;
        return ev;
    }

    if (ev.series && std::abs(*ev.series - *ev.quadrature) <= opt.crosscheck_tol) {
        ev.value = *ev.series;
        return ev;
    }
    if (ev.series)
        ev.diagnostic += "series disagrees with quadrature by " +
                         std::to_string(std::abs(*ev.series - *ev.quadrature)) + "; ";
    ev.value = *ev.quadrature;
    ev.method = "quadrature";
    return ev;
}

// ---------------------------------------------------------------------------
// Monte Carlo

using ConsensusSampler = std::function<double(std::mt19937_64&)>;

inline ConsensusSampler gamma_sampler(const GammaParams& p)
{
    return [dist = std::gamma_distribution<double>(p.shape, 1.0 / p.rate)](
               std::mt19937_64& gen) mutable { return dist(gen); };
}

namespace detail {

inline constexpr int warmup_cycles = 100;
inline constexpr std::size_t batch_count = 100;

// Ratio sum(num)/sum(den) with a batch-means standard error.
struct RatioBatches
{
    std::vector<double> num, den;
    std::size_t per_batch;
    std::size_t filled = 0;
    double cur_num = 0, cur_den = 0;

    explicit RatioBatches(std::uint64_t n)
        : per_batch(std::max<std::uint64_t>(1, n / batch_count))
    {
    }

    void add(double a, double b)
    {
        cur_num += a;
        cur_den += b;
        if (++filled == per_batch) {
            num.push_back(cur_num);
            den.push_back(cur_den);
            cur_num = cur_den = 0;
            filled = 0;
        }
    }

    // {ratio, se}; a trailing partial batch counts toward the ratio only.
    std::pair<double, double> ratio() const
    {
        double sn = cur_num, sd = cur_den;
        for (std::size_t i = 0; i < num.size(); ++i) {
            sn += num[i];
            sd += den[i];
        }
        const double r = sd > 0 ? sn / sd : 0.0;
        const std::size_t k = num.size();
        if (k < 2)
            return {r, std::numeric_limits<double>::infinity()};
        double ss = 0, mean_den = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = num[i] - r * den[i];
            ss += d * d;
            mean_den += den[i];
        }
        mean_den /= static_cast<double>(k);
        return {r, std::sqrt(ss / static_cast<double>(k * (k - 1))) / mean_den};
    }

    std::pair<double, double> mean_den() const
    {
        const std::size_t k = den.size();
        if (k < 2)
            return {k ? den[0] / static_cast<double>(per_batch) : 0.0,
                    std::numeric_limits<double>::infinity()};
        double s = 0, s2 = 0;
        for (double d : den) {
            const double m = d / static_cast<double>(per_batch);
            s += m;
            s2 += m * m;
        }
        const double mean = s / static_cast<double>(k);
        const double var = (s2 / static_cast<double>(k) - mean * mean) * static_cast<double>(k) /
                           static_cast<double>(k - 1);
        return {mean, std::sqrt(std::max(0.0, var) / static_cast<double>(k))};
    }
};

} // namespace detail

/// Renewal Monte Carlo over `cycles` update cycles for every v in `targets`
/// on one shared sample path.
inline std::vector<SamplePathSummary>
violation_probability_mc_grid(const AoiModel& model, const std::vector<double>& targets,
                              std::uint64_t cycles, std::uint64_t seed, ConsensusSampler sampler,
                              std::size_t paoi_limit = 100000)
{
    model.validate();
    aoi_hlf::detail::require(cycles >= 10000, "violation_probability_mc: cycles must be >= 1e4");
    for (double v : targets)
        AoiQuery{v}.validate();
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> interval(model.effective_rate);
    const double y = model.tx_latency;

    std::vector<detail::RatioBatches> acc(targets.size(), detail::RatioBatches(cycles));
    std::vector<double> excess_sum(targets.size(), 0.0);
    std::vector<double> paoi;
    paoi.reserve(std::min<std::uint64_t>(cycles, paoi_limit));

    double x_prev = sampler(gen);
    for (int i = 0; i < detail::warmup_cycles; ++i) {
        double x = sampler(gen);
        interval(gen);
        x_prev = x;
    }
    for (std::uint64_t c = 0; c < cycles; ++c) {
        const double x = sampler(gen);
        const double t = x + interval(gen);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const double tv = std::min(std::max(x_prev + t + y - targets[i], 0.0), t);
            acc[i].add(tv, t);
            excess_sum[i] += tv;
        }
        if (paoi.size() < paoi_limit)
            paoi.push_back(x_prev + y + t);
        x_prev = x;
    }

    std::vector<SamplePathSummary> out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto& s = out[i];
        std::tie(s.violation_fraction, s.standard_error) = acc[i].ratio();
        std::tie(s.mean_cycle, s.mean_cycle_se) = acc[i].mean_den();
        s.mean_excess = excess_sum[i] / static_cast<double>(cycles);
        s.cycles = s.effective_count = cycles;
        s.paoi_samples = paoi;
    }
    return out;
}

inline std::vector<SamplePathSummary> violation_probability_mc_grid(
    const AoiModel& model, const std::vector<double>& targets, std::uint64_t cycles,
    std::uint64_t seed)
{
    return violation_probability_mc_grid(model, targets, cycles, seed,
                                         gamma_sampler(model.consensus));
}

inline SamplePathSummary violation_probability_mc(const AoiModel& model, const AoiQuery& query,
                                                  std::uint64_t cycles, std::uint64_t seed)
{
    return violation_probability_mc_grid(model, {query.target_aoi}, cycles, seed).front();
}

inline SamplePathSummary violation_probability_mc(const AoiModel& model, const AoiQuery& query,
                                                  std::uint64_t cycles, std::uint64_t seed,
                                                  ConsensusSampler sampler)
{
    return violation_probability_mc_grid(model, {query.target_aoi}, cycles, seed,
                                         std::move(sampler))
        .front();
}

struct PathOptions
{
    std::uint64_t min_updates = 1000;
    std::size_t paoi_limit = 100000;
};

/// Event-level sample path: Poisson(rho_s) generations thinned by
/// p_c = rho / rho_s, arrival G + Y, MVCC-effective iff the arrival is not
/// before the previous effective packet's commit, commit after a consensus
/// draw. Returns the time-average of 1{AoI >= v} over [0, horizon].
inline SamplePathSummary physical_sample_path_mc(const uplink::NetworkConfig& net,
                                                 const AoiModel& model, const AoiQuery& query,
                                                 double horizon, std::uint64_t seed,
                                                 ConsensusSampler sampler,
                                                 const PathOptions& opt = {})
{
    net.validate();
    model.validate();
    query.validate();
    aoi_hlf::detail::require(std::isfinite(horizon) && horizon > 0, "physical_sample_path_mc: horizon must be > 0");
    const double rho_s = net.gen_rate;
    const double p_c = model.effective_rate / rho_s;
    aoi_hlf::detail::require(p_c <= 1.0, "physical_sample_path_mc: effective_rate exceeds gen_rate");
    const double y = model.tx_latency, v = query.target_aoi;

    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> gap(rho_s);
    std::bernoulli_distribution delivered(p_c);

    SamplePathSummary out;
    // Update j holds AoI = t - gen_time on [commit, next commit).
    double commit = 0.0, gen_time = 0.0; // virtual update at t = 0
    double pending_commit = 0.0, pending_gen = 0.0;
    bool pending = false;
    double violated = 0.0;
    std::uint64_t cycles_seen = 0;
    std::vector<std::pair<double, double>> cycle_stats; // (excess, length)

    auto close_interval = [&](double end) {
        const double start = std::max(commit, gen_time + v);
        const double stop = std::min(end, horizon);
        return stop > start ? stop - start : 0.0;
    };
    auto apply_update = [&]() {
        const double excess = close_interval(pending_commit);
        violated += excess;
        if (out.paoi_samples.size() < opt.paoi_limit)
            out.paoi_samples.push_back(pending_commit - gen_time);
        if (pending_commit <= horizon) {
            cycle_stats.emplace_back(excess, pending_commit - commit);
            ++cycles_seen;
        }
        commit = pending_commit;
        gen_time = pending_gen;
        pending = false;
    };

    double g = 0.0;
    for (;;) {
        g += gap(gen);
        const double arrival = g + y;
        if (pending && pending_commit <= arrival)
            apply_update();
        if (g > horizon && arrival > horizon)
            break;
        if (!delivered(gen))
            continue;
        const double last_commit = pending ? pending_commit : commit;
        if (arrival < last_commit) {
            ++out.invalid_count;
            continue;
        }
        pending = true;
        pending_gen = g;
        pending_commit = arrival + sampler(gen);
        ++out.effective_count;
    }
    violated += close_interval(horizon);

    if (cycles_seen < opt.min_updates)
        throw SampleError("physical_sample_path_mc: horizon too short (" +
                          std::to_string(cycles_seen) + " updates)");

    out.cycles = cycles_seen;
    out.violation_fraction = violated / horizon;
    if (cycles_seen >= 2) {
        detail::RatioBatches rb(cycles_seen);
        double excess = 0;
        for (auto [e, len] : cycle_stats) {
            rb.add(e, len);
            excess += e;
        }
        out.standard_error = rb.ratio().second;
        std::tie(out.mean_cycle, out.mean_cycle_se) = rb.mean_den();
        out.mean_excess = excess / static_cast<double>(cycles_seen);
    } else {
        out.standard_error = std::numeric_limits<double>::infinity();
        out.mean_cycle = horizon;
        out.mean_excess = violated;
    }
    return out;
}

inline SamplePathSummary physical_sample_path_mc(const uplink::NetworkConfig& net,
                                                 const AoiModel& model, const AoiQuery& query,
                                                 double horizon, std::uint64_t seed,
                                                 const PathOptions& opt = {})
{
    return physical_sample_path_mc(net, model, query, horizon, seed,
                                   gamma_sampler(model.consensus), opt);
}

// ---------------------------------------------------------------------------
// Target-STP sweep

/// Operating point for the per-transmission success probability.
enum class SuccessModel { target_stp, distance_averaged };

struct SweepOptions
{
    SuccessModel success = SuccessModel::target_stp;
    EvalOptions eval;
    double low_contrast = 1e-3; // max - min below this triggers a warning
};

struct SweepPoint
{
    double zeta;
    double tx_latency;
    double success_prob;
    double effective_rate;
    double probability;
    std::string method;
};

struct SweepResult
{
    std::vector<SweepPoint> points;
    std::size_t argmin = 0;
    double argmin_zeta = 0;
    bool degenerate = false;    // every probability equal, so no unique minimizer
    bool interior = false;      // argmin is neither grid end
    bool non_monotonic = false;
    bool low_contrast = false;
    std::vector<std::size_t> local_minima; // interior strict local minima
};

inline const GammaParams& lookup_fit(const std::map<double, GammaParams>& fits, double zeta)
{
    for (const auto& [z, p] : fits)
        if (std::abs(z - zeta) <= 1e-9)
            return p;
    throw DomainError("no Gamma fit for zeta = " + std::to_string(zeta));
}

inline SweepResult sweep_target_stp(const uplink::NetworkConfig& net,
                                    const std::map<double, GammaParams>& fits, double v,
                                    const std::vector<double>& grid, const SweepOptions& opt = {})
{
    aoi_hlf::detail::require(!grid.empty(), "sweep_target_stp: empty grid");
    SweepResult res;
    for (double z : grid) {
        aoi_hlf::detail::require(z > 0 && z < 1, "sweep_target_stp: grid points must lie in (0, 1)");
        const auto cfg = net.with_target_stp(z);
        const double rate = uplink::mean_target_rate(cfg);
        const double y = cfg.packet_bits / rate;
        const double pc = opt.success == SuccessModel::target_stp
                              ? z
                              : uplink::average_stp_at_rate(rate, cfg);
        AoiModel model{lookup_fit(fits, z), net.gen_rate * pc, y};
        auto ev = violation_probability(model, AoiQuery{v}, opt.eval);
        res.points.push_back({z, y, pc, model.effective_rate, ev.value, ev.method});
    }
    const auto& pts = res.points;
    auto lo = std::min_element(pts.begin(), pts.end(),
                               [](const auto& a, const auto& b) { return a.probability < b.probability; });
    auto hi = std::max_element(pts.begin(), pts.end(),
                               [](const auto& a, const auto& b) { return a.probability < b.probability; });
    res.argmin = static_cast<std::size_t>(lo - pts.begin());
    res.argmin_zeta = lo->zeta;
    const double contrast = hi->probability - lo->probability;
    res.degenerate = pts.size() > 1 && contrast == 0.0;
    res.low_contrast = contrast < opt.low_contrast;
    res.interior = !res.degenerate && res.argmin > 0 && res.argmin + 1 < pts.size();
    bool up = false, down = false;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        up |= pts[i].probability > pts[i - 1].probability;
        down |= pts[i].probability < pts[i - 1].probability;
    }
    res.non_monotonic = up && down;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i)
        if (pts[i].probability < pts[i - 1].probability &&
            pts[i].probability < pts[i + 1].probability)
            res.local_minima.push_back(i);
    return res;
}

} // namespace aoi_hlf::aoi

#endif
