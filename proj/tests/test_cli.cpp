#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "aoi_hlf/cli/app.hpp"

using namespace aoi_hlf;
using namespace aoi_hlf::cli;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("aoi_hlf_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

int run_args(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr)
{
    args.insert(args.begin(), "aoi_hlf");
    std::vector<const char*> argv;
    for (auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream o, e;
    int rc = run(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out)
        *out = o.str();
    if (err)
        *err = e.str();
    return rc;
}

std::string message_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Units, ConvertsToSi)
{
    EXPECT_DOUBLE_EQ(parse_quantity("-100 dBm/Hz", Dimension::spectral_density), 1e-13);
    EXPECT_DOUBLE_EQ(parse_quantity("30 dBm", Dimension::power), 1.0);
    EXPECT_DOUBLE_EQ(parse_quantity("500 Kb", Dimension::bits), 5e5);
    EXPECT_DOUBLE_EQ(parse_quantity("0.0001 /km^2", Dimension::area_density), 1e-10);
    EXPECT_DOUBLE_EQ(parse_quantity("1 MHz", Dimension::frequency), 1e6);
    EXPECT_DOUBLE_EQ(parse_quantity("250ms", Dimension::time), 0.25);
}

TEST(Units, RejectsMissingUnknownAndMismatchedUnits)
{
    EXPECT_THROW(parse_quantity("1", Dimension::power), ConfigError);
    EXPECT_THROW(parse_quantity("1 furlong", Dimension::power), ConfigError);
    EXPECT_THROW(parse_quantity("1 MHz", Dimension::power), ConfigError);
    EXPECT_THROW(parse_quantity("W", Dimension::power), ConfigError);
}

TEST(Config, DefaultMatchesReferenceScenario)
{
    const auto cfg = default_config();
    EXPECT_DOUBLE_EQ(cfg.network.tx_power, 1.0);
    EXPECT_DOUBLE_EQ(cfg.network.noise_psd, 1e-13);
    EXPECT_DOUBLE_EQ(cfg.network.bandwidth, 1e6);
    EXPECT_DOUBLE_EQ(cfg.network.packet_bits, 5e5);
    EXPECT_DOUBLE_EQ(cfg.network.gen_rate, 15.0);
    EXPECT_EQ(cfg.fits.size(), 8u);
    EXPECT_DOUBLE_EQ(aoi::lookup_fit(cfg.fits, 1.0).shape, 6.57);
    EXPECT_TRUE(cfg.pipeline.has_value());
    EXPECT_EQ(cfg.gamma_source, GammaSource::table);
    EXPECT_EQ(cfg.seeds, std::vector<std::uint64_t>{7});
}

TEST(Config, ErrorsNameTheKeyPath)
{
    auto msg = [](const std::string& yaml) {
        return message_of([&] { parse_config(YAML::Load(yaml)); });
    };
    EXPECT_NE(msg("network: {bs_density: \"1e-4\"}").find("network.bs_density"), std::string::npos);
    EXPECT_NE(msg("network: {bandwidth: \"1 W\"}").find("network.bandwidth"), std::string::npos);
    EXPECT_NE(msg("fits: [{zeta: 1.5, shape: 2, rate: \"1 /s\"}]").find("fits[0].zeta"),
              std::string::npos);
    EXPECT_NE(msg("pipeline: {endorse_latency: {dist: weibull}}").find("pipeline.endorse_latency.dist"),
              std::string::npos);
    EXPECT_NE(msg("colour: blue").find("colour"), std::string::npos);
    EXPECT_NE(msg("output: {format: xml}").find("output.format"), std::string::npos);
    EXPECT_THROW(parse_config(YAML::Load("pipeline: {key_count: 1}")), ConfigError);
    EXPECT_THROW(parse_config(YAML::Load("eval: {rel_tol: 0.5}")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.yaml"), IoError);
}

TEST(Config, DistributionForms)
{
    auto cfg = parse_config(YAML::Load(R"(
pipeline:
  endorse_latency: {dist: exponential, mean: "250 ms"}
  validate_latency: {dist: constant, value: "0.5 s"}
  order_overhead: "0 s"
)"));
    ASSERT_TRUE(cfg.pipeline);
    EXPECT_EQ(cfg.pipeline->endorse_latency, latency::LatencyDist::exponential(0.25));
    EXPECT_EQ(cfg.pipeline->validate_latency, latency::LatencyDist::constant(0.5));
}

TEST(Grid, RangesListsAndYOffsets)
{
    auto g = parse_grid("Y+0.1:8:0.25", "v", 0.4);
    ASSERT_FALSE(g.empty());
    EXPECT_DOUBLE_EQ(g.front(), 0.5);
    EXPECT_LE(g.back(), 8.0);
    EXPECT_GT(g.back() + 0.25, 8.0);
    EXPECT_EQ(parse_grid("0.3:0.9:0.1", "z").size(), 7u);
    EXPECT_EQ(parse_grid("0.4,0.6", "z"), (std::vector<double>{0.4, 0.6}));
    EXPECT_TRUE(parse_grid("", "v").empty());
    EXPECT_TRUE(parse_grid("5:1:1", "v").empty());
    EXPECT_THROW(parse_grid("1:2:0", "v"), ConfigError);
    EXPECT_THROW(parse_grid("1:2", "v"), ConfigError);
    EXPECT_THROW(parse_grid("Y:2:1", "z"), ConfigError);
    EXPECT_THROW(parse_grid("Yx:2:1", "v", 1.0), ConfigError);
}

TEST(Output, CsvRoundTripIsExact)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-5, 5);
    Table t{{"a", "b", "c", "d"}, {}};
    for (int i = 0; i < 200; ++i)
        t.add({std::pow(10.0, u(gen)), u(gen), std::string(i % 2 ? "series" : "v<=Y"),
               Cell{std::monostate{}}});
    t.add({1.0 - 1e-14, 1e-300, std::string("x"), 0.0});
    std::stringstream ss;
    write_csv(ss, t);
    EXPECT_EQ(read_csv(ss), t);
    // Near-one values keep their distance from one.
    EXPECT_NE(std::get<double>(t.rows.back()[0]), 1.0);
}

TEST(Output, JsonMirrorsCsv)
{
    Table t{{"zeta", "probability", "method", "mc"}, {}};
    t.add({0.4, 0.123456789012345, std::string("series"), Cell{std::monostate{}}});
    t.add({0.6, 3.0, std::string("boundary"), 0.5});
    const auto j = to_json(t);
    EXPECT_EQ(from_json(nlohmann::ordered_json::parse(j.dump())), t);
    EXPECT_EQ(j[0]["probability"].get<double>(), 0.123456789012);
    EXPECT_TRUE(j[0]["mc"].is_null());
}

TEST(Simulate, RoundTripThroughFitIsExact)
{
    auto cfg = default_config();
    std::ostringstream records, log;
    const auto simulated = cmd_simulate(cfg, 600, 3, records, log);
    std::istringstream in(records.str());
    const auto refit = cmd_fit_stream(in, "records", log);
    EXPECT_EQ(simulated, refit);
    EXPECT_EQ(records.str().substr(0, records.str().find('\n')), latency_header);
}

TEST(Simulate, SameSeedGivesIdenticalBytes)
{
    auto cfg = default_config();
    std::ostringstream a, b, log;
    cmd_simulate(cfg, 300, 21, a, log);
    cmd_simulate(cfg, 300, 21, b, log);
    EXPECT_EQ(a.str(), b.str());
    std::ostringstream c;
    cmd_simulate(cfg, 300, 22, c, log);
    EXPECT_NE(a.str(), c.str());
}

TEST(Simulate, DefaultsLandInTableEnvelope)
{
    auto cfg = default_config();
    std::ostringstream records, log;
    const auto t = cmd_simulate(cfg, 2000, 7, records, log);
    const double a = std::get<double>(t.rows[0][t.column("shape")]);
    const double b = std::get<double>(t.rows[0][t.column("rate")]);
    RecordProperty("shape", std::to_string(a));
    RecordProperty("rate", std::to_string(b));
    EXPECT_GT(a, 5.0);
    EXPECT_LT(a, 8.5);
    EXPECT_GT(b, 2.0);
    EXPECT_LT(b, 4.8);
    EXPECT_LT(std::get<double>(t.rows[0][t.column("ks")]),
              std::get<double>(t.rows[0][t.column("ks_critical_1pct")]));
}

TEST(Simulate, ShortHorizonIsUnderSampled)
{
    auto cfg = default_config();
    std::ostringstream records, log;
    const auto msg = message_of([&] { cmd_simulate(cfg, 5, 1, records, log); });
    EXPECT_NE(msg.find("need at least 30"), std::string::npos);
    EXPECT_THROW(cmd_simulate(cfg, 5, 1, records, log), SampleError);
    cfg.pipeline.reset();
    EXPECT_THROW(cmd_simulate(cfg, 100, 1, records, log), ConfigError);
}

TEST(Fit, RecoversGammaFromSingleColumnFile)
{
    const GammaParams truth{6.57, 3.82};
    const auto xs = latency::sample_gamma(truth, 100000, 99);
    const auto path = temp_file("gamma.csv");
    {
        std::ofstream f(path);
        f << "latency\n";
        for (double x : xs)
            f << shortest(x) << '\n';
    }
    std::ostringstream log;
    const auto t = cmd_fit(path.string(), log);
    EXPECT_NEAR(std::get<double>(t.rows[0][t.column("shape")]) / truth.shape, 1.0, 0.05);
    EXPECT_NEAR(std::get<double>(t.rows[0][t.column("rate")]) / truth.rate, 1.0, 0.05);
    EXPECT_EQ(std::get<double>(t.rows[0][t.column("n")]), 100000.0);
}

TEST(Fit, BadInputsNameTheLine)
{
    const auto neg = temp_file("neg.csv");
    write_text(neg, "1.5\n2.5\n-0.3\n1.0\n");
    std::ostringstream log;
    const auto msg = message_of([&] { cmd_fit(neg.string(), log); });
    EXPECT_NE(msg.find("neg.csv:3"), std::string::npos) << msg;
    EXPECT_THROW(cmd_fit(neg.string(), log), IoError);

    const auto junk = temp_file("junk.csv");
    write_text(junk, "submit_time,commit_time,key,verdict\n0,1,0,valid\n0,x,0,valid\n");
    EXPECT_NE(message_of([&] { cmd_fit(junk.string(), log); }).find("junk.csv:3"),
              std::string::npos);

    const auto flat = temp_file("flat.csv");
    std::string text;
    for (int i = 0; i < 50; ++i)
        text += "2.25\n";
    write_text(flat, text);
    EXPECT_THROW(cmd_fit(flat.string(), log), SampleError);

    const auto few = temp_file("few.csv");
    write_text(few, "1\n2\n3\n");
    EXPECT_THROW(cmd_fit(few.string(), log), SampleError);
    EXPECT_THROW(cmd_fit(temp_file("missing.csv").string(), log), IoError);
}

TEST(Fit, FourColumnFileKeepsValidTargetRows)
{
    std::istringstream in("submit_time,commit_time,key,verdict\n"
                          "0,2,0,valid\n1,9,0,mvcc_invalid\n1,8,3,valid\n2,5,0,valid\n");
    EXPECT_EQ(read_latency_samples(in, "x"), (std::vector<double>{2, 3}));
}

TEST(Analyze, EmptyGridGivesEmptyTable)
{
    auto cfg = default_config();
    std::ostringstream log;
    const auto t = cmd_analyze(cfg, "", 1, log);
    EXPECT_TRUE(t.rows.empty());
    EXPECT_EQ(t.columns.size(), 11u);
}

TEST(Analyze, CurvesDecreaseAndFlagSubYTargets)
{
    auto cfg = default_config();
    cfg.analyze.mc_cycles = 20000;
    std::ostringstream log;
    const auto t = cmd_analyze(cfg, "Y-0.05:8:1", 5, log);
    const auto iz = t.column("zeta"), ip = t.column("probability"), iflag = t.column("flag"),
               iv = t.column("v"), iy = t.column("Y"), imc = t.column("mc"),
               ise = t.column("mc_se");
    ASSERT_EQ(t.rows.size() % 3, 0u);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const double v = std::get<double>(r[iv]), y = std::get<double>(r[iy]);
        const double p = std::get<double>(r[ip]);
        if (v <= y) {
            EXPECT_EQ(p, 1.0);
            EXPECT_EQ(std::get<std::string>(r[iflag]), "v<=Y");
        } else {
            EXPECT_EQ(std::get<std::string>(r[iflag]), "");
            EXPECT_LE(std::abs(std::get<double>(r[imc]) - p),
                      4 * std::get<double>(r[ise]) + 1e-4);
        }
        if (i > 0 && std::get<double>(t.rows[i - 1][iz]) == std::get<double>(r[iz])) {
            EXPECT_LE(p, std::get<double>(t.rows[i - 1][ip]));
        }
    }
}

TEST(Analyze, MissingFitIsAConfigError)
{
    auto cfg = default_config();
    cfg.analyze.zetas = {0.45};
    std::ostringstream log;
    EXPECT_THROW(cmd_analyze(cfg, "1:2:1", 1, log), ConfigError);
}

TEST(Sweep, SinglePointIsTheMinimizer)
{
    auto cfg = default_config();
    std::ostringstream log;
    const auto out = cmd_sweep(cfg, 4.0, {0.6}, 1, log);
    ASSERT_EQ(out.table.rows.size(), 1u);
    EXPECT_EQ(out.result.argmin_zeta, 0.6);
    EXPECT_EQ(std::get<std::string>(out.table.rows[0][out.table.column("is_argmin")]), "true");
}

TEST(Sweep, LargeTargetWarnsLowContrast)
{
    auto cfg = default_config();
    std::ostringstream log;
    const auto out = cmd_sweep(cfg, 100.0, cfg.sweep.zetas, 1, log);
    EXPECT_TRUE(out.result.low_contrast);
    EXPECT_NE(log.str().find("low contrast"), std::string::npos);
    for (const auto& p : out.result.points)
        EXPECT_LT(p.probability, 1e-3);
}

TEST(Sweep, SimulatedSourceAppliesOneFitToEveryZeta)
{
    auto cfg = default_config();
    cfg.gamma_source = GammaSource::simulate;
    cfg.simulate_duration = 500;
    std::ostringstream log;
    const auto fits = resolve_fits(cfg, {0.4, 0.7}, 3, log);
    EXPECT_EQ(fits.at(0.4), fits.at(0.7));
    EXPECT_NE(log.str().find("fit: shape="), std::string::npos);
}

TEST(App, ExitCodes)
{
    std::string out, err;
    EXPECT_EQ(run_args({"sweep", "--zeta-grid", "0.6"}, &out, &err), exit_ok);
    EXPECT_NE(out.find("is_argmin"), std::string::npos);

    EXPECT_EQ(run_args({"bogus"}), exit_usage);
    EXPECT_EQ(run_args({}), exit_usage);
    EXPECT_EQ(run_args({"sweep", "--format", "xml"}), exit_usage);

    const auto bad = temp_file("bad.yaml");
    write_text(bad, "network: {tx_power: \"1 parsec\"}\n");
    EXPECT_EQ(run_args({"sweep", "--config", bad.string()}, &out, &err), exit_config);
    EXPECT_NE(err.find("network.tx_power"), std::string::npos);
    EXPECT_EQ(run_args({"sweep", "--zeta-grid", "0.45"}), exit_config);

    EXPECT_EQ(run_args({"fit", temp_file("absent.csv").string()}), exit_io);
    EXPECT_EQ(run_args({"sweep", "--zeta-grid", "0.6", "--out", "/nonexistent/dir/x.csv"}), exit_io);

    const auto flat = temp_file("flat2.csv");
    std::string text;
    for (int i = 0; i < 40; ++i)
        text += "1.0\n";
    write_text(flat, text);
    EXPECT_EQ(run_args({"fit", flat.string()}), exit_numeric);
    EXPECT_EQ(run_args({"simulate", "--duration", "3", "--out", temp_file("s.csv").string()}),
              exit_numeric);
}

TEST(App, OutputFileAndJson)
{
    const auto path = temp_file("sweep.json");
    std::string out, err;
    ASSERT_EQ(run_args({"sweep", "--zeta-grid", "0.5,0.6", "--format", "json", "--out",
                        path.string()},
                       &out, &err),
              exit_ok);
    std::ifstream in(path);
    const auto j = nlohmann::ordered_json::parse(in);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["zeta"].get<double>(), 0.5);
}

TEST(App, SeedWithoutConfigSeedsIsPrinted)
{
    const auto cfgfile = temp_file("noseed.yaml");
    write_text(cfgfile, "pipeline: {tx_rate: \"4 /s\"}\n");
    std::string out, err;
    ASSERT_EQ(run_args({"simulate", "--config", cfgfile.string(), "--duration", "200", "--out",
                        temp_file("ns.csv").string()},
                       &out, &err),
              exit_ok);
    EXPECT_NE(err.find("master seed: "), std::string::npos);
    ASSERT_EQ(run_args({"simulate", "--seed", "4", "--config", cfgfile.string(), "--duration",
                        "200", "--out", temp_file("ns.csv").string()},
                       &out, &err),
              exit_ok);
    EXPECT_EQ(err.find("master seed: "), std::string::npos);
}
