#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whitebilevel/agd.hpp"
#include "whitebilevel/bilevel.hpp"
#include "whitebilevel/degradation.hpp"
#include "whitebilevel/huber_tv.hpp"
#include "whitebilevel/losses.hpp"

namespace wb::harness {

namespace fs = std::filesystem;

/// Deterministically generated ground-truth images, ids synth00, synth01, ...
struct SyntheticSet {
    std::size_t count = 0;
    std::size_t height = 64;
    std::size_t width = 64;
    std::uint64_t seed = 1;
};

struct GridSpec {
    double lambda_min = 1e-4;
    double lambda_max = 1e2;
    std::size_t count = 40;

    void validate() const;
    /// Ascending, log-spaced, endpoints included.
    std::vector<double> values() const;
};

struct ExperimentConfig {
    std::vector<fs::path> images;
    SyntheticSet synthetic;
    std::vector<KernelSpec> kernels{GaussianBlur{}, MotionBlur{}};
    std::vector<double> bsnr{10.0, 17.5, 25.0, 32.5, 40.0};
    std::vector<LossTag> losses{LossTag::Mse, LossTag::Gauss, LossTag::White};
    AGDConfig agd;
    BilevelConfig bilevel;
    HuberParams huber{1e-3};
    GridSpec grid;
    fs::path out = "results";
    std::uint64_t seed = 1;
    /// Upper bound on batch workers; 0 defers to WHITEBILEVEL_THREADS or the core count.
    std::size_t threads = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const fs::path& path);

/// FNV-1a over the canonical JSON of the config, excluding `out` and
/// `threads` (they do not change any result). 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Stamped into every output file.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;

    std::string line() const;
};
Provenance provenance_of(const ExperimentConfig& cfg);

/// One degraded observation: <image>__<kernel>__b<bsnr>.
struct Instance {
    std::string image;
    std::string kernel;
    double bsnr = 0.0;

    std::string id() const;
    static Instance parse(const std::string& id);
};

/// Output layout under cfg.out.
struct Layout {
    fs::path root;

    fs::path data_dir() const { return root / "data"; }
    fs::path runs_dir() const { return root / "runs"; }
    fs::path grids_dir() const { return root / "grids"; }
    fs::path report_dir() const { return root / "report"; }

    fs::path ground_truth(const std::string& image) const;
    fs::path observed(const Instance& inst) const;
    fs::path kernel(const Instance& inst) const;
    fs::path noise_sidecar(const Instance& inst) const;
    fs::path run_stem(const Instance& inst, LossTag loss) const;
    fs::path grid_csv(const Instance& inst) const;
};

/// Image ids in config order: input file stems, then the synthetic set.
std::vector<std::string> image_ids(const ExperimentConfig& cfg);
/// All (image, kernel, bsnr) combinations in config order.
std::vector<Instance> instances(const ExperimentConfig& cfg);

/// Noise seed for one instance, a pure function of the base seed and the id.
std::uint64_t instance_seed(std::uint64_t base_seed, const Instance& inst);

struct NoiseSidecar {
    std::string kernel_kind;
    double bsnr = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string generator;
    std::string config_hash;
};
nlohmann::json to_json(const NoiseSidecar& s);
NoiseSidecar read_noise_sidecar(const fs::path& path);

/// Writes ground truth, observation, kernel and noise sidecar for every
/// instance of `image` (or of all images when empty). Returns the instances.
std::vector<Instance> cmd_degrade(const ExperimentConfig& cfg, const std::string& image = {});

struct ExperimentRecord {
    std::string image;
    std::string kernel;
    double bsnr = 0.0;
    LossTag loss = LossTag::White;
    double lambda_hat = 0.0;
    double beta_hat = 0.0;
    double q_value = 0.0;
    std::size_t outer_iterations = 0;
    bool converged = false;
    std::string stop_reason;
    /// ||A x_hat - y||^2 / m
    double residual_energy = 0.0;
    std::optional<double> psnr;
    std::optional<double> ssim;
    double wall_seconds = 0.0;

    Instance instance() const { return {image, kernel, bsnr}; }
};
nlohmann::json to_json(const ExperimentRecord& r);

/// Trains lambda for one instance. Reads only what the loss needs: y and the
/// kernel always, the ground truth for MSE, the noise sidecar for GAUSS.
/// Throws MissingSideData otherwise. Writes <run>.trace.jsonl, <run>.xhat.f64
/// and <run>.record.json. With `evaluate`, PSNR/SSIM are filled in afterwards
/// when the ground truth exists.
ExperimentRecord cmd_learn(const ExperimentConfig& cfg, const std::string& instance, LossTag loss,
                           bool evaluate = true);

struct GridRow {
    double lambda = 0.0;
    double q_mse = 0.0;
    double q_gauss = 0.0;
    double q_white = 0.0;
    /// (||r||^2 - m sigma^2) / (m sigma^2), signed.
    double discrepancy = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::size_t agd_iterations = 0;
    bool agd_converged = false;
    /// "ok" or the error that flagged the row.
    std::string status = "ok";
};

struct GridResult {
    std::vector<GridRow> rows;
    /// Row with the smallest Q_MSE among unflagged rows (needs the ground truth).
    std::optional<std::size_t> argmin_mse;
    bool argmin_on_boundary = false;
};

/// Lower solve at every grid lambda, warm-started from the largest lambda
/// down. Columns needing absent side data are NaN. Writes the CSV.
GridResult cmd_grid(const ExperimentConfig& cfg, const std::string& instance);

struct Aggregate {
    std::string kernel;
    double bsnr = 0.0;
    LossTag loss = LossTag::White;
    std::size_t count = 0;
    double psnr_mean = 0.0;
    double psnr_std = 0.0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
};

/// Sample standard deviation; 0 for fewer than two records.
std::vector<Aggregate> aggregate(const std::vector<ExperimentRecord>& records);

struct BatchResult {
    std::vector<ExperimentRecord> records;
    std::vector<Aggregate> aggregates;
    /// "<instance> <loss>: <message>" per failed item.
    std::vector<std::string> failures;
};

/// Progress sink; calls are serialized.
using LogFn = std::function<void(const std::string&)>;

/// Degrades and learns every (image, kernel, bsnr, loss), one worker per
/// image, then writes records.csv, timings.csv and aggregate.csv. Failed
/// items are listed in the result and in failures.txt.
BatchResult cmd_batch(const ExperimentConfig& cfg, const LogFn& log = {});
std::size_t batch_threads(const ExperimentConfig& cfg);

/// Reads aggregate.csv and records.csv from `result_dir`, writes
/// report/plot_data.csv, one PSNR and one SSIM SVG per kernel, and
/// report/table.{txt,csv}. Throws IoError on missing or malformed input.
void cmd_report(const fs::path& result_dir);

/// SVG files rendered from a plot_data.csv; rerunning on the same CSV gives
/// identical bytes. Returns the written paths.
std::vector<fs::path> render_plots(const fs::path& plot_data_csv, const fs::path& out_dir);

/// 100 (M - v) / M
double percent_gap(double value, double max_value);

// CSV helpers shared by the commands and the tests.
std::vector<ExperimentRecord> read_records_csv(const fs::path& path);
std::vector<Aggregate> read_aggregate_csv(const fs::path& path);

}  // namespace wb::harness
