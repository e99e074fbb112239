#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aoi_hlf/aoi.hpp"
#include "support/oracles.hpp"

using namespace aoi_hlf;
using namespace aoi_hlf::aoi;

namespace {

const std::map<double, GammaParams> tabulated_fits{{0.3, {5.64, 3.01}}, {0.4, {5.94, 2.45}},
                                              {0.5, {5.39, 2.85}}, {0.6, {5.42, 2.84}},
                                              {0.7, {7.18, 3.73}}, {0.8, {7.71, 4.12}},
                                              {0.9, {7.50, 4.35}}};

AoiModel table_model(double zeta)
{
    uplink::NetworkConfig net;
    return {tabulated_fits.at(zeta), net.gen_rate * zeta,
            uplink::transmission_latency(net.with_target_stp(zeta))};
}

ConsensusSampler zero_consensus()
{
    return [](std::mt19937_64&) { return 0.0; };
}

} // namespace

TEST(Boundary, BudgetExhaustedMeansCertainViolation)
{
    AoiModel m{{5.94, 2.45}, 6.0, 0.8};
    for (double v : {0.1, 0.5, 0.8}) {
        EXPECT_EQ(violation_probability_series(m, AoiQuery{v}), 1.0);
        EXPECT_EQ(violation_probability_quadrature(m, AoiQuery{v}), 1.0);
        auto ev = violation_probability(m, AoiQuery{v});
        EXPECT_EQ(ev.value, 1.0);
        EXPECT_EQ(ev.method, "boundary");
    }
    EXPECT_EQ(violation_probability_mc(m, AoiQuery{0.8}, 10000, 1).violation_fraction, 1.0);
}

TEST(Boundary, ContinuousAtZeroBudget)
{
    AoiModel m{{5.94, 2.45}, 6.0, 0.8};
    EXPECT_NEAR(violation_probability_series(m, AoiQuery{0.8 + 1e-9}), 1.0, 1e-9);
    EXPECT_NEAR(violation_probability_quadrature(m, AoiQuery{0.8 + 1e-9}), 1.0, 1e-9);
}

TEST(Series, MatchesQuadratureOnTabulatedFits)
{
    for (double zeta : {0.4, 0.8}) {
        auto m = table_model(zeta);
        for (double v : {2.0, 4.0, 6.0}) {
            double q = violation_probability_quadrature(m, AoiQuery{v});
            double s = violation_probability_series<mp100>(m, AoiQuery{v});
            EXPECT_NEAR(s, q, 1e-6) << zeta << " " << v;
            auto ev = violation_probability(m, AoiQuery{v});
            EXPECT_NEAR(ev.value, q, 1e-6);
            EXPECT_NE(ev.method, "quadrature") << ev.diagnostic;
        }
    }
}

TEST(Series, DoubleWorksWhereCancellationIsMild)
{
    auto m = table_model(0.4);
    double q = violation_probability_quadrature(m, AoiQuery{2.0});
    EXPECT_NEAR(violation_probability_series<double>(m, AoiQuery{2.0}), q, 1e-8);
}

TEST(Series, CancellationIsDetectedNotHidden)
{
    auto m = table_model(0.8);
    EXPECT_THROW(violation_probability_series<double>(m, AoiQuery{6.0}), CancellationError);
}

TEST(Series, PrintedVariantDisagrees)
{
    auto m = table_model(0.4);
    double q = violation_probability_quadrature(m, AoiQuery{4.0});
    double p = violation_probability_series<mp100>(m, AoiQuery{4.0}, {}, SeriesVariant::as_printed);
    EXPECT_GT(std::abs(p - q), 0.1);
}

TEST(Series, DivergenceFallsBackToQuadrature)
{
    // rho < beta / 2 makes the (rho - beta)^n expansion diverge.
    AoiModel m{{7.71, 4.12}, 1.0, 0.5};
    AoiQuery q{5.0};
    EvalOptions only_series;
    only_series.method = EvalOptions::Method::series;
    EXPECT_THROW(violation_probability(m, q, only_series), ConvergenceError);
    auto ev = violation_probability(m, q);
    EXPECT_EQ(ev.method, "quadrature");
    EXPECT_FALSE(ev.diagnostic.empty());
    EXPECT_DOUBLE_EQ(ev.value, violation_probability_quadrature(m, q));
}

TEST(Quadrature, MatchesNestedIntegration)
{
    struct Spot
    {
        double a, b, rho, y, v;
    };
    for (Spot s : {Spot{5.94, 2.45, 6.0, 0.33687, 4.0}, Spot{7.71, 4.12, 12.0, 0.96346, 3.0},
                   Spot{2.0, 1.5, 3.0, 0.2, 2.5}}) {
        AoiModel m{{s.a, s.b}, s.rho, s.y};
        EXPECT_NEAR(violation_probability_quadrature(m, AoiQuery{s.v}),
                    oracle::nested_violation_probability(s.a, s.b, s.rho, s.y, s.v), 1e-6);
    }
}

TEST(Quadrature, DelayedDensityMassAllBranches)
{
    struct Case
    {
        double a, b, rho, s;
    };
    // small |z|, large negative z, large positive z (series and asymptotic)
    for (Case c : {Case{5.94, 2.45, 6.0, 3.0}, Case{7.5, 4.35, 0.5, 30.0}, Case{7.5, 4.35, 13.5, 60.0},
                   Case{5.0, 1.0, 13.0, 5.0}, Case{2.5, 1.0, 6.0, 9.0}}) {
        auto f = [&](double u) {
            return u <= 0 ? 0.0
                          : std::exp(c.a * std::log(c.b) + (c.a - 1) * std::log(u) - c.b * u -
                                     std::lgamma(c.a) - c.rho * (c.s - u));
        };
        double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, c.s, 15, 1e-13);
        EXPECT_NEAR(aoi::detail::delayed_density_mass(c.a, c.b, c.rho, c.s) / ref, 1.0, 1e-9)
            << c.a << " " << c.rho << " " << c.s;
    }
}

TEST(Quadrature, MonotoneInTargetAndLatency)
{
    AoiModel m{{5.42, 2.84}, 9.0, 0.5};
    double prev = 1.0;
    for (double v = 0.6; v < 10; v += 0.2) {
        double p = violation_probability_quadrature(m, AoiQuery{v});
        EXPECT_LE(p, prev + 1e-9) << v;
        EXPECT_GE(p, 0.0);
        prev = p;
    }
    prev = 0.0;
    for (double y = 0.0; y < 4; y += 0.25) {
        m.tx_latency = y;
        double p = violation_probability_quadrature(m, AoiQuery{4.0});
        EXPECT_GE(p, prev - 1e-9) << y;
        prev = p;
    }
    EXPECT_LT(violation_probability_quadrature({{5.42, 2.84}, 9.0, 0.5}, AoiQuery{40.0}), 1e-12);
}

TEST(Quadrature, SmallBudgetsConverge)
{
    // Budgets where the tail term dominates and the body integral is tiny.
    const std::vector<std::pair<AoiModel, double>> mid{
        {{{5.1835633136262977, 4.3187176705459045}, 11.226072322939638, 0.0}, 0.12893335436117415},
        {{{2.8044576632398224, 5.7372463309011135}, 15.87413361681015, 0.0}, 0.11036230794334756}};
    for (const auto& [m, tc] : mid) {
        const double q = oracle::nested_violation_probability(m.consensus.shape, m.consensus.rate,
                                                              m.effective_rate, 0.0, tc);
        EXPECT_NEAR(violation_probability_quadrature(m, AoiQuery{tc}), q, 1e-8) << tc;
    }
    // 0 <= E[(W - s)^+] <= E[T] brackets the body by E[T] P[X <= T_c].
    const std::vector<std::pair<AoiModel, double>> tiny{
        {{{1.2500589231530073, 7.5714055156202686}, 29.185927725982911, 0.0}, 0.0002215174581523538},
        {{{5.94, 2.45}, 6.0, 0.0}, 1e-9}};
    for (const auto& [m, tc] : tiny) {
        const double q = boost::math::gamma_q(m.consensus.shape, m.consensus.rate * tc);
        const double p = violation_probability_quadrature(m, AoiQuery{tc});
        EXPECT_GE(p, q - 1e-15);
        EXPECT_LE(p, 1.0);
    }
}

TEST(MonteCarlo, AgreesWithSeriesOnVGrid)
{
    auto m = table_model(0.4);
    std::vector<double> vs{2, 3, 4, 5, 6};
    auto mc = violation_probability_mc_grid(m, vs, 1000000, 17);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        double s = violation_probability(m, AoiQuery{vs[i]}).value;
        EXPECT_LE(std::abs(mc[i].violation_fraction - s), 3 * mc[i].standard_error) << vs[i];
        EXPECT_NEAR(mc[i].mean_excess / mc[i].mean_cycle, mc[i].violation_fraction,
                    3 * mc[i].standard_error);
    }
    EXPECT_LE(std::abs(mc[0].mean_cycle - m.mean_cycle()), 3 * mc[0].mean_cycle_se);
}

TEST(MonteCarlo, ExponentialCycleClosedForm)
{
    for (auto [rho, v] : {std::pair{6.0, 0.5}, std::pair{12.0, 0.25}}) {
        AoiModel m{{1.0, 1.0}, rho, 0.0};
        auto s = violation_probability_mc(m, AoiQuery{v}, 1000000, 3, zero_consensus());
        EXPECT_LE(std::abs(s.violation_fraction - std::exp(-rho * v)), 3 * s.standard_error);
    }
}

TEST(MonteCarlo, DeterministicAndValidated)
{
    auto m = table_model(0.6);
    auto a = violation_probability_mc(m, AoiQuery{3.0}, 20000, 5);
    auto b = violation_probability_mc(m, AoiQuery{3.0}, 20000, 5);
    EXPECT_EQ(a.violation_fraction, b.violation_fraction);
    EXPECT_EQ(a.paoi_samples, b.paoi_samples);
    EXPECT_THROW(violation_probability_mc(m, AoiQuery{3.0}, 9999, 5), DomainError);
    EXPECT_THROW(violation_probability_mc(m, AoiQuery{-1.0}, 20000, 5), DomainError);
}

TEST(MonteCarlo, PeakAgeIsCycleAfterTheLastUpdate)
{
    AoiModel m{{5.0, 2.0}, 5.0, 0.7};
    auto s = violation_probability_mc(m, AoiQuery{3.0}, 100000, 8);
    auto ms = oracle::mean_se(s.paoi_samples);
    // PAoI = X_{k-1} + Y + X_k + T_int
    double expected = 2 * 2.5 + 0.7 + 0.2;
    EXPECT_LE(std::abs(ms.mean - expected), 4 * ms.se);
}

TEST(SamplePath, AgreesWithRenewalMonteCarlo)
{
    uplink::NetworkConfig net;
    auto m = table_model(0.6);
    const double v = 4.0;
    const double cycles = 300000;
    auto path = physical_sample_path_mc(net, m, AoiQuery{v}, cycles * m.mean_cycle(), 21);
    auto renewal = violation_probability_mc(m, AoiQuery{v}, 300000, 22);
    double se = std::hypot(path.standard_error, renewal.standard_error);
    EXPECT_LE(std::abs(path.violation_fraction - renewal.violation_fraction), 3 * se);
    EXPECT_LE(std::abs(path.violation_fraction - violation_probability(m, AoiQuery{v}).value),
              3 * path.standard_error);
    EXPECT_LE(std::abs(path.mean_cycle - m.mean_cycle()), 3 * path.mean_cycle_se);
    EXPECT_GT(path.invalid_count, 0u);
    EXPECT_GT(path.effective_count, path.cycles - 1);
}

TEST(SamplePath, ZeroConsensusExponentialForm)
{
    uplink::NetworkConfig net;
    for (auto [rho, v] : {std::pair{6.0, 0.5}, std::pair{12.0, 0.25}}) {
        AoiModel m{{1.0, 1.0}, rho, 0.0};
        auto s = physical_sample_path_mc(net, m, AoiQuery{v}, 1e6 / rho, 4, zero_consensus());
        EXPECT_LE(std::abs(s.violation_fraction - std::exp(-rho * v)), 3 * s.standard_error);
        EXPECT_EQ(s.invalid_count, 0u);
    }
}

TEST(SamplePath, NoTrafficMeansAgeGrowsPastTarget)
{
    uplink::NetworkConfig net;
    net.gen_rate = 1e-12;
    AoiModel m{{5.0, 2.0}, 1e-12, 0.5};
    PathOptions opt;
    opt.min_updates = 0;
    for (double h : {10.0, 100.0, 1000.0}) {
        auto s = physical_sample_path_mc(net, m, AoiQuery{2.0}, h, 1, opt);
        EXPECT_DOUBLE_EQ(s.violation_fraction, (h - 2.0) / h);
    }
}

TEST(SamplePath, Errors)
{
    uplink::NetworkConfig net;
    auto m = table_model(0.6);
    EXPECT_THROW(physical_sample_path_mc(net, m, AoiQuery{3.0}, 100.0, 1), SampleError);
    m.effective_rate = 20.0;
    EXPECT_THROW(physical_sample_path_mc(net, m, AoiQuery{3.0}, 1e5, 1), DomainError);
}

TEST(Sweep, TabulatedFitsAtFourSeconds)
{
    std::vector<double> grid;
    for (const auto& [z, p] : tabulated_fits)
        grid.push_back(z);
    auto res = sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 4.0, grid);
    ASSERT_EQ(res.points.size(), grid.size());
    EXPECT_TRUE(res.non_monotonic);
    for (std::size_t i = 1; i < grid.size(); ++i)
        EXPECT_GT(res.points[i].tx_latency, res.points[i - 1].tx_latency);
    for (const auto& p : res.points) {
        EXPECT_NEAR(p.effective_rate, 15.0 * p.zeta, 1e-12);
        std::printf("zeta=%.1f Y=%.5f P=%.6f (%s)\n", p.zeta, p.tx_latency, p.probability,
                    p.method.c_str());
    }
    std::printf("argmin zeta=%.1f interior=%d\n", res.argmin_zeta, res.interior);
}

TEST(Sweep, BelowLatencyIsDegenerate)
{
    std::vector<double> grid{0.3, 0.4, 0.5};
    auto res = sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 0.2, grid);
    for (const auto& p : res.points)
        EXPECT_EQ(p.probability, 1.0);
    EXPECT_TRUE(res.degenerate);
    EXPECT_FALSE(res.interior);
}

TEST(Sweep, DoublingPacketSize)
{
    std::vector<double> grid{0.3, 0.5, 0.7, 0.9};
    uplink::NetworkConfig net;
    auto base = sweep_target_stp(net, tabulated_fits, 4.0, grid);
    net.packet_bits *= 2;
    auto big = sweep_target_stp(net, tabulated_fits, 4.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(big.points[i].tx_latency, 2 * base.points[i].tx_latency, 1e-12);
        EXPECT_GE(big.points[i].probability, base.points[i].probability - 1e-9);
    }
}

TEST(Sweep, LargeTargetAndSinglePoint)
{
    auto far = sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 100.0, {0.3, 0.6, 0.9});
    EXPECT_TRUE(far.low_contrast);
    for (const auto& p : far.points)
        EXPECT_LT(p.probability, 1e-10);
    auto one = sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 4.0, {0.6});
    EXPECT_EQ(one.argmin_zeta, 0.6);
    EXPECT_THROW(sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 4.0, {0.65}), DomainError);
}

TEST(Sweep, DistanceAveragedOperatingPoint)
{
    SweepOptions opt;
    opt.success = SuccessModel::distance_averaged;
    auto res = sweep_target_stp(uplink::NetworkConfig{}, tabulated_fits, 4.0, {0.4, 0.8}, opt);
    for (const auto& p : res.points) {
        EXPECT_GT(p.success_prob, 0.0);
        EXPECT_LT(p.success_prob, 1.0);
        EXPECT_NE(p.success_prob, p.zeta);
    }
}

TEST(Model, Validation)
{
    EXPECT_THROW(violation_probability_quadrature({{0, 1}, 1, 0}, AoiQuery{1}), DomainError);
    EXPECT_THROW(violation_probability_quadrature({{1, 1}, 0, 0}, AoiQuery{1}), DomainError);
    EXPECT_THROW(violation_probability_quadrature({{1, 1}, 1, -1}, AoiQuery{1}), DomainError);
    EXPECT_THROW(violation_probability_series({{1, 1}, 1, 0}, AoiQuery{0}), DomainError);
}
