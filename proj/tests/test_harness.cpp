#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "whitebilevel/error.hpp"
#include "whitebilevel/harness.hpp"
#include "whitebilevel/image_io.hpp"
#include "whitebilevel/synthetic.hpp"

namespace fs = std::filesystem;
using namespace wb::harness;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("wb_test_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Small, fast configuration: 16x16 synthetic images, few outer iterations.
ExperimentConfig small_config(const std::string& name, std::size_t images = 1) {
    ExperimentConfig cfg;
    cfg.synthetic.count = images;
    cfg.synthetic.height = cfg.synthetic.width = 16;
    cfg.kernels = {wb::GaussianBlur{5, 1.0}};
    cfg.bsnr = {20.0};
    cfg.bilevel.max_it = 6;
    cfg.grid.count = 8;
    cfg.threads = 1;
    cfg.out = scratch(name);
    return cfg;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(WHITEBILEVEL_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST(Config, GridValidationAndValues) {
    GridSpec g;
    g.count = 2;
    EXPECT_THROW(g.validate(), wb::ConfigError);
    g.count = 1;
    EXPECT_THROW(g.validate(), wb::ConfigError);
    g.count = 5;
    g.lambda_min = 1e-2;
    g.lambda_max = 1e2;
    const auto v = g.values();
    ASSERT_EQ(v.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(v[i], std::pow(10.0, -2.0 + static_cast<double>(i)), 1e-12 * v[i]);
    g.lambda_min = 1e3;
    EXPECT_THROW(g.validate(), wb::ConfigError);
}

TEST(Config, JsonParsingIsStrict) {
    const auto cfg = config_from_json(nlohmann::json::parse(R"({
        "synthetic": {"count": 2, "height": 32, "width": 32},
        "kernels": ["gaussian", {"kind": "motion", "length": 7, "angle_deg": 30}],
        "bsnr": [10, 40],
        "losses": ["white"],
        "grid": {"count": 12}
    })"));
    EXPECT_EQ(cfg.synthetic.count, 2u);
    ASSERT_EQ(cfg.kernels.size(), 2u);
    EXPECT_EQ(std::get<wb::MotionBlur>(cfg.kernels[1]).length, 7u);
    EXPECT_EQ(cfg.losses, std::vector<wb::LossTag>{wb::LossTag::White});
    EXPECT_EQ(cfg.grid.count, 12u);

    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bsnrs": [10]})")), wb::ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"grid": {"count": 2}})")), wb::ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"losses": []})")), wb::ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"losses": ["l2"]})")), wb::ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bilevel": {"alpha": 0}})")), wb::ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"kernels": ["box"]})")), wb::ConfigError);

    // to_json round-trips.
    EXPECT_EQ(to_json(config_from_json(to_json(cfg))), to_json(cfg));
}

TEST(Config, HashIgnoresOutputLocationAndThreads) {
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.out = "elsewhere";
    b.threads = 7;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(provenance_of(b).line(), "config_hash=" + config_hash(b) + " seed=2");
}

TEST(Config, LoadResolvesImagesRelativeToFile) {
    const fs::path dir = scratch("load");
    fs::create_directories(dir / "imgs");
    wb::io::write_pgm(dir / "imgs" / "a.pgm", wb::make_synthetic_image(16, 16, 1));
    std::ofstream(dir / "cfg.json") << R"({
        // comments are allowed
        "images": ["imgs/a.pgm"], "out": "res"
    })";
    const auto cfg = load_config(dir / "cfg.json");
    ASSERT_EQ(cfg.images.size(), 1u);
    EXPECT_TRUE(fs::exists(cfg.images[0]));
    EXPECT_EQ(image_ids(cfg), std::vector<std::string>{"a"});
    EXPECT_THROW(load_config(dir / "missing.json"), wb::Error);
}

TEST(Instances, IdRoundTripAndSeeds) {
    const Instance i{"synth00", "gaussian", 17.5};
    EXPECT_EQ(i.id(), "synth00__gaussian__b17.5");
    const Instance back = Instance::parse(i.id());
    EXPECT_EQ(back.image, "synth00");
    EXPECT_EQ(back.kernel, "gaussian");
    EXPECT_EQ(back.bsnr, 17.5);
    EXPECT_THROW(Instance::parse("synth00_gaussian_b10"), wb::ConfigError);
    EXPECT_THROW(Instance::parse("a__b__bxyz"), wb::ConfigError);
    EXPECT_EQ(instance_seed(1, i), instance_seed(1, i));
    EXPECT_NE(instance_seed(1, i), instance_seed(2, i));
    EXPECT_NE(instance_seed(1, i), instance_seed(1, Instance{"synth01", "gaussian", 17.5}));

    ExperimentConfig cfg;
    cfg.synthetic.count = 3;
    cfg.bsnr = {10, 40};
    EXPECT_EQ(instances(cfg).size(), 3u * 2u * 2u);
}

TEST(Degrade, DeterministicWithMatchingSidecars) {
    ExperimentConfig cfg = small_config("degrade");
    cfg.bsnr = {10.0, 40.0};
    const auto insts = cmd_degrade(cfg);
    ASSERT_EQ(insts.size(), 2u);
    const Layout layout{cfg.out};
    const std::string y0 = slurp(layout.observed(insts[0]));
    const std::string side0 = slurp(layout.noise_sidecar(insts[0]));
    cmd_degrade(cfg);
    EXPECT_EQ(slurp(layout.observed(insts[0])), y0);
    EXPECT_EQ(slurp(layout.noise_sidecar(insts[0])), side0);

    const auto lo = read_noise_sidecar(layout.noise_sidecar(insts[0]));
    const auto hi = read_noise_sidecar(layout.noise_sidecar(insts[1]));
    EXPECT_NEAR(lo.sigma / hi.sigma, std::pow(10.0, 1.5), 1e-12);
    EXPECT_EQ(lo.config_hash, config_hash(cfg));

    // Sidecar sigma is exactly the sampler's sigma.
    const wb::Image gt = wb::io::read_f64(layout.ground_truth("synth00"));
    const wb::ConvOperator op(wb::make_gaussian_kernel(5, 1.0), 16, 16);
    const auto noisy = wb::add_awgn_bsnr(op.apply(gt), 10.0, instance_seed(cfg.seed, insts[0]));
    EXPECT_EQ(lo.sigma, noisy.sigma);
    EXPECT_EQ(wb::io::read_f64(layout.observed(insts[0])), noisy.noisy);
    EXPECT_NE(slurp(layout.observed(insts[0]) .replace_extension(".pgm")).find("config_hash="), std::string::npos);

    EXPECT_THROW(cmd_degrade(cfg, "nope"), wb::ConfigError);
}

TEST(Learn, WhiteNeedsNoSideDataOthersFailExplicitly) {
    ExperimentConfig cfg = small_config("learn");
    const auto insts = cmd_degrade(cfg);
    const Layout layout{cfg.out};
    fs::remove(layout.ground_truth("synth00"));
    fs::remove(layout.noise_sidecar(insts[0]));
    const auto rec = cmd_learn(cfg, insts[0].id(), wb::LossTag::White);
    EXPECT_GT(rec.lambda_hat, 0.0);
    EXPECT_FALSE(rec.psnr.has_value());
    EXPECT_THROW(cmd_learn(cfg, insts[0].id(), wb::LossTag::Mse), wb::MissingSideData);
    EXPECT_THROW(cmd_learn(cfg, insts[0].id(), wb::LossTag::Gauss), wb::MissingSideData);
    EXPECT_THROW(cmd_learn(cfg, "synth09__gaussian__b20", wb::LossTag::White), wb::MissingSideData);
}

TEST(Learn, OutputsCarryProvenanceAndConsistentLambda) {
    ExperimentConfig cfg = small_config("learn_out");
    const auto insts = cmd_degrade(cfg);
    const auto rec = cmd_learn(cfg, insts[0].id(), wb::LossTag::Gauss);
    EXPECT_DOUBLE_EQ(rec.lambda_hat, std::exp(rec.beta_hat));
    ASSERT_TRUE(rec.psnr.has_value());
    const fs::path stem = Layout{cfg.out}.run_stem(insts[0], wb::LossTag::Gauss);
    const auto record = nlohmann::json::parse(slurp(stem.string() + ".record.json"));
    EXPECT_EQ(record["config_hash"], config_hash(cfg));
    std::ifstream trace(stem.string() + ".trace.jsonl");
    std::string line;
    std::vector<nlohmann::json> lines;
    while (std::getline(trace, line)) lines.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(lines.size(), rec.outer_iterations);
    for (const auto& j : lines) EXPECT_EQ(j["config_hash"], config_hash(cfg));
    const auto& chosen = lines.at(record["selected_iteration"].get<std::size_t>());
    EXPECT_DOUBLE_EQ(chosen["lambda"].get<double>(), rec.lambda_hat);
    EXPECT_DOUBLE_EQ(std::exp(chosen["beta"].get<double>()), rec.lambda_hat);
}

TEST(Grid, RowsColumnsAndDiscrepancySignChange) {
    ExperimentConfig cfg = small_config("grid");
    cfg.grid.count = 12;
    const auto insts = cmd_degrade(cfg);
    const auto g = cmd_grid(cfg, insts[0].id());
    ASSERT_EQ(g.rows.size(), 12u);
    for (const auto& r : g.rows) {
        EXPECT_EQ(r.status, "ok");
        EXPECT_TRUE(std::isfinite(r.q_mse) && std::isfinite(r.q_gauss) && std::isfinite(r.q_white));
    }
    ASSERT_TRUE(g.argmin_mse.has_value());
    // Residual energy grows with lambda; the discrepancy crosses zero next to the Q_GAUSS minimum.
    std::size_t best = 0;
    for (std::size_t k = 1; k < g.rows.size(); ++k)
        if (g.rows[k].q_gauss < g.rows[best].q_gauss) best = k;
    EXPECT_LT(g.rows.front().discrepancy, 0.0);
    EXPECT_GT(g.rows.back().discrepancy, 0.0);
    bool crossing = false;
    for (std::size_t k = (best ? best - 1 : 0); k + 1 < g.rows.size() && k <= best; ++k)
        crossing |= g.rows[k].discrepancy * g.rows[k + 1].discrepancy <= 0.0;
    EXPECT_TRUE(crossing);

    const std::string csv = slurp(Layout{cfg.out}.grid_csv(insts[0]));
    EXPECT_EQ(csv.rfind("# config_hash=", 0), 0u);
    EXPECT_NE(csv.find("\nlambda,Q_MSE,Q_GAUSS,Q_WHITE,discrepancy,PSNR,SSIM,agd_iterations,agd_converged,status\n"),
              std::string::npos);
}

TEST(Batch, CountsAggregatesAndDeterminism) {
    ExperimentConfig cfg = small_config("batch", 3);
    cfg.bsnr = {15.0, 30.0};
    cfg.bilevel.max_it = 3;
    const auto res = cmd_batch(cfg);
    EXPECT_TRUE(res.failures.empty());
    ASSERT_EQ(res.records.size(), 18u);
    ASSERT_EQ(res.aggregates.size(), 6u);
    for (const auto& a : res.aggregates) {
        std::vector<double> v;
        for (const auto& r : res.records)
            if (r.kernel == a.kernel && r.bsnr == a.bsnr && r.loss == a.loss) v.push_back(*r.psnr);
        ASSERT_EQ(v.size(), 3u);
        const double m = (v[0] + v[1] + v[2]) / 3;
        EXPECT_NEAR(a.psnr_mean, m, 1e-12);
        const double var = ((v[0] - m) * (v[0] - m) + (v[1] - m) * (v[1] - m) + (v[2] - m) * (v[2] - m)) / 2;
        EXPECT_NEAR(a.psnr_std, std::sqrt(var), 1e-12);
    }
    const fs::path records = fs::path(cfg.out) / "records.csv";
    const auto back = read_records_csv(records);
    ASSERT_EQ(back.size(), 18u);
    EXPECT_EQ(back[5].lambda_hat, res.records[5].lambda_hat);
    EXPECT_EQ(read_aggregate_csv(fs::path(cfg.out) / "aggregate.csv").size(), 6u);

    const std::string first = slurp(records);
    cfg.threads = 2;
    cmd_batch(cfg);
    EXPECT_EQ(slurp(records), first);
}

TEST(Batch, ThreadCountResolution) {
    ExperimentConfig cfg;
    cfg.threads = 3;
    EXPECT_EQ(batch_threads(cfg), 3u);
    cfg.threads = 0;
    setenv("WHITEBILEVEL_THREADS", "2", 1);
    EXPECT_EQ(batch_threads(cfg), 2u);
    setenv("WHITEBILEVEL_THREADS", "zero", 1);
    EXPECT_THROW(batch_threads(cfg), wb::ConfigError);
    unsetenv("WHITEBILEVEL_THREADS");
    EXPECT_GE(batch_threads(cfg), 1u);
}

TEST(Aggregate, SingleRecordHasZeroSpread) {
    ExperimentRecord r;
    r.kernel = "gaussian";
    r.bsnr = 10;
    r.loss = wb::LossTag::Mse;
    r.psnr = 25.0;
    r.ssim = 0.8;
    ExperimentRecord skipped = r;
    skipped.psnr.reset();
    const auto a = aggregate({r, skipped});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].count, 1u);
    EXPECT_EQ(a[0].psnr_std, 0.0);
    EXPECT_EQ(a[0].psnr_mean, 25.0);
}

TEST(Report, PercentGap) {
    EXPECT_NEAR(percent_gap(26.05, 26.50), 1.698, 1e-3);
    EXPECT_EQ(percent_gap(3.0, 3.0), 0.0);
}

TEST(Report, SingleRecordBandAndDeterministicPlots) {
    const fs::path dir = scratch("report");
    fs::create_directories(dir);
    std::ofstream(dir / "aggregate.csv") << "# config_hash=00000000000000ab seed=1\n"
                                         << "kernel,bsnr,loss,count,psnr_mean,psnr_std,ssim_mean,ssim_std\n"
                                         << "gaussian,10,mse,1,25,0,0.8,0\n";
    std::ofstream(dir / "records.csv")
        << "# config_hash=00000000000000ab seed=1\n"
        << "image,kernel,bsnr,loss,lambda_hat,beta_hat,q_value,outer_iterations,converged,residual_energy,psnr,ssim\n"
        << "synth00,gaussian,10,mse,0.01,-4.6,1,3,0,0.001,25,0.8\n";
    cmd_report(dir);
    const fs::path svg = dir / "report" / "psnr_gaussian.svg";
    const std::string text = slurp(svg);
    EXPECT_NE(text.find("config_hash=00000000000000ab seed=1"), std::string::npos);

    // The band polygon collapses onto the mean: upper and lower points coincide.
    const std::regex poly("<polygon[^>]*points=\"([^\"]*)\"");
    std::smatch m;
    ASSERT_TRUE(std::regex_search(text, m, poly));
    std::istringstream pts(m[1].str());
    std::string p, q;
    pts >> p >> q;
    EXPECT_EQ(p, q);

    const auto again = render_plots(dir / "report" / "plot_data.csv", dir / "again");
    ASSERT_FALSE(again.empty());
    for (const auto& f : again) EXPECT_EQ(slurp(f), slurp(dir / "report" / f.filename()));
    EXPECT_TRUE(fs::exists(dir / "report" / "table.txt"));

    EXPECT_THROW(cmd_report(scratch("report_missing")), wb::IoError);
}

TEST(Cli, ExitCodes) {
    const fs::path out = scratch("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("learn --loss l7 --out " + out.string()), 2);
    EXPECT_EQ(run_cli("grid --out " + out.string()), 2);
    EXPECT_EQ(run_cli("learn --synthetic 1 --out " + out.string() + " --instance synth00__gaussian__b10"), 1);
    EXPECT_EQ(run_cli("degrade --synthetic 1 --bsnr 20 --kernel gaussian --quiet --out " + out.string()), 0);
    EXPECT_EQ(run_cli("report " + (out / "nothing").string()), 1);
}
