// Command-line front end: degrade, learn, grid, batch, report.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "whitebilevel/error.hpp"
#include "whitebilevel/harness.hpp"

namespace {

namespace fs = std::filesystem;
using namespace wb;
using namespace wb::harness;

constexpr int kExitOk = 0;
constexpr int kExitItemFailure = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> loss;
    std::optional<double> bsnr;
    std::optional<std::string> kernel;
    std::optional<std::size_t> synthetic;
    std::string image;
    std::string instance;
    std::string report_dir;
    bool quiet = false;
    bool no_eval = false;
};

ExperimentConfig resolve_config(const Options& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out = *o.out;
    if (o.synthetic) cfg.synthetic.count = *o.synthetic;
    if (o.loss) cfg.losses = {parse_loss_tag(*o.loss)};
    if (o.bsnr) cfg.bsnr = {*o.bsnr};
    if (o.kernel) {
        std::optional<KernelSpec> chosen;
        for (const auto& k : cfg.kernels)
            if (kernel_name(k) == *o.kernel) chosen = k;
        if (!chosen) {
            if (*o.kernel == "gaussian") chosen = GaussianBlur{};
            else if (*o.kernel == "motion") chosen = MotionBlur{};
            else throw ConfigError("unknown kernel '" + *o.kernel + "' (expected gaussian or motion)");
        }
        cfg.kernels = {*chosen};
    }
    cfg.validate();
    return cfg;
}

void print_record(const ExperimentRecord& r) {
    std::cout << r.instance().id() << " " << to_string(r.loss) << " lambda=" << r.lambda_hat
              << " iterations=" << r.outer_iterations << " converged=" << (r.converged ? "yes" : "no");
    if (r.psnr) std::cout << " psnr=" << *r.psnr;
    if (r.ssim) std::cout << " ssim=" << *r.ssim;
    std::cout << "\n";
}

int run_degrade(const Options& o) {
    const ExperimentConfig cfg = resolve_config(o);
    const auto written = cmd_degrade(cfg, o.image);
    if (!o.quiet) std::cerr << "wrote " << written.size() << " degraded instances to " << (cfg.out / "data") << "\n";
    return kExitOk;
}

int run_learn(const Options& o) {
    const ExperimentConfig cfg = resolve_config(o);
    std::vector<std::string> ids;
    if (!o.instance.empty()) {
        ids.push_back(o.instance);
    } else {
        for (const auto& inst : instances(cfg))
            if (o.image.empty() || inst.image == o.image) ids.push_back(inst.id());
    }
    int status = kExitOk;
    for (const auto& id : ids) {
        for (LossTag loss : cfg.losses) {
            try {
                print_record(cmd_learn(cfg, id, loss, !o.no_eval));
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                std::cerr << "error: " << id << " " << to_string(loss) << ": " << e.what() << "\n";
                status = kExitItemFailure;
            }
        }
    }
    return status;
}

int run_grid(const Options& o) {
    const ExperimentConfig cfg = resolve_config(o);
    if (o.instance.empty()) throw ConfigError("grid needs --instance <image>__<kernel>__b<bsnr>");
    const GridResult g = cmd_grid(cfg, o.instance);
    const Instance inst = Instance::parse(o.instance);
    if (!o.quiet) std::cerr << "wrote " << Layout{cfg.out}.grid_csv(inst) << "\n";
    int status = kExitOk;
    for (const auto& row : g.rows) {
        if (row.status != "ok") {
            std::cerr << "flagged row lambda=" << row.lambda << ": " << row.status << "\n";
            status = kExitItemFailure;
        }
    }
    if (g.argmin_mse) {
        const auto& best = g.rows[*g.argmin_mse];
        std::cout << o.instance << " grid optimum lambda=" << best.lambda << " psnr=" << best.psnr
                  << " ssim=" << best.ssim << "\n";
        if (g.argmin_on_boundary) {
            std::cerr << "error: Q_MSE argmin sits on the grid boundary; widen the grid\n";
            status = kExitItemFailure;
        }
    }
    return status;
}

int run_batch(const Options& o) {
    const ExperimentConfig cfg = resolve_config(o);
    LogFn log;
    if (!o.quiet) log = [](const std::string& msg) { std::cerr << msg << "\n"; };
    const BatchResult result = cmd_batch(cfg, log);
    for (const auto& a : result.aggregates) {
        std::cout << a.kernel << " bsnr=" << a.bsnr << " " << to_string(a.loss) << " n=" << a.count
                  << " psnr=" << a.psnr_mean << "+-" << a.psnr_std << " ssim=" << a.ssim_mean << "+-" << a.ssim_std
                  << "\n";
    }
    if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " item(s) failed; see " << (cfg.out / "failures.txt") << "\n";
        return kExitItemFailure;
    }
    return kExitOk;
}

int run_report(const Options& o) {
    fs::path dir = o.report_dir;
    if (dir.empty()) dir = resolve_config(o).out;
    cmd_report(dir);
    if (!o.quiet) std::cerr << "wrote " << (dir / "report") << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn the TV deblurring parameter by bilevel optimization"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Base seed for noise realizations");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--loss", o.loss, "Restrict to one loss: mse, gauss or white");
        sub->add_option("--bsnr", o.bsnr, "Restrict to one BSNR level (dB)");
        sub->add_option("--kernel", o.kernel, "Restrict to one kernel: gaussian or motion");
        sub->add_option("--synthetic", o.synthetic, "Number of synthetic ground-truth images");
        sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
    };

    auto* degrade = app.add_subcommand("degrade", "Blur and add noise to the ground-truth images");
    add_common(degrade);
    degrade->add_option("--image", o.image, "Only this image id");

    auto* learn = app.add_subcommand("learn", "Learn lambda for degraded instances");
    add_common(learn);
    learn->add_option("--instance", o.instance, "Instance id <image>__<kernel>__b<bsnr>");
    learn->add_option("--image", o.image, "Only instances of this image id");
    learn->add_flag("--no-eval", o.no_eval, "Skip PSNR/SSIM even when the ground truth exists");

    auto* grid = app.add_subcommand("grid", "Sweep lambda over the configured grid");
    add_common(grid);
    grid->add_option("--instance", o.instance, "Instance id <image>__<kernel>__b<bsnr>")->required();

    auto* batch = app.add_subcommand("batch", "Degrade and learn every image, BSNR level and loss");
    add_common(batch);

    auto* report = app.add_subcommand("report", "Plots and tables from a batch result directory");
    add_common(report);
    report->add_option("dir", o.report_dir, "Batch result directory (defaults to --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*degrade) return run_degrade(o);
        if (*learn) return run_learn(o);
        if (*grid) return run_grid(o);
        if (*batch) return run_batch(o);
        if (*report) return run_report(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitItemFailure;
    }
    return kExitOk;
}
