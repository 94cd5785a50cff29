#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "common.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/harness.hpp"

namespace wb::harness {

namespace {

const char* kRecordsHeader =
    "image,kernel,bsnr,loss,lambda_hat,beta_hat,q_value,outer_iterations,converged,residual_energy,psnr,ssim";

std::string opt(const std::optional<double>& v) { return v ? detail::fmt(*v) : std::string(); }

std::string records_csv(const std::vector<ExperimentRecord>& records, const Provenance& prov) {
    std::ostringstream out;
    out << "# " << prov.line() << "\n" << kRecordsHeader << "\n";
    for (const auto& r : records) {
        out << r.image << "," << r.kernel << "," << detail::fmt(r.bsnr) << "," << to_string(r.loss) << ","
            << detail::fmt(r.lambda_hat) << "," << detail::fmt(r.beta_hat) << "," << detail::fmt(r.q_value) << ","
            << r.outer_iterations << "," << (r.converged ? 1 : 0) << "," << detail::fmt(r.residual_energy) << ","
            << opt(r.psnr) << "," << opt(r.ssim) << "\n";
    }
    return out.str();
}

std::string timings_csv(const std::vector<ExperimentRecord>& records, const Provenance& prov) {
    std::ostringstream out;
    out << "# " << prov.line() << "\nimage,kernel,bsnr,loss,wall_seconds\n";
    for (const auto& r : records) {
        out << r.image << "," << r.kernel << "," << detail::fmt(r.bsnr) << "," << to_string(r.loss) << ","
            << detail::fmt_fixed(r.wall_seconds, 3) << "\n";
    }
    return out.str();
}

std::string aggregate_csv(const std::vector<Aggregate>& rows, const Provenance& prov) {
    std::ostringstream out;
    out << "# " << prov.line() << "\nkernel,bsnr,loss,count,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
    for (const auto& a : rows) {
        out << a.kernel << "," << detail::fmt(a.bsnr) << "," << to_string(a.loss) << "," << a.count << ","
            << detail::fmt(a.psnr_mean) << "," << detail::fmt(a.psnr_std) << "," << detail::fmt(a.ssim_mean) << ","
            << detail::fmt(a.ssim_std) << "\n";
    }
    return out.str();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<Aggregate> aggregate(const std::vector<ExperimentRecord>& records) {
    // Groups keep the order in which they first appear.
    std::vector<std::tuple<std::string, double, LossTag>> keys;
    std::map<std::tuple<std::string, double, LossTag>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
        if (!r.psnr) continue;
        const auto key = std::make_tuple(r.kernel, r.bsnr, r.loss);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) keys.push_back(key);
        it->second.first.push_back(*r.psnr);
        if (r.ssim) it->second.second.push_back(*r.ssim);
    }
    std::vector<Aggregate> out;
    for (const auto& key : keys) {
        const auto& [psnrs, ssims] = groups.at(key);
        Aggregate a;
        std::tie(a.kernel, a.bsnr, a.loss) = key;
        a.count = psnrs.size();
        std::tie(a.psnr_mean, a.psnr_std) = mean_std(psnrs);
        std::tie(a.ssim_mean, a.ssim_std) = mean_std(ssims);
        out.push_back(a);
    }
    return out;
}

std::size_t batch_threads(const ExperimentConfig& cfg) {
    std::size_t n = cfg.threads;
    if (n == 0) {
        if (const char* env = std::getenv("WHITEBILEVEL_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1) {
                throw ConfigError(std::string("WHITEBILEVEL_THREADS must be a positive integer, got '") + env + "'");
            }
            n = static_cast<std::size_t>(v);
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

BatchResult cmd_batch(const ExperimentConfig& cfg, const LogFn& log) {
    cfg.validate();
    const Layout layout{cfg.out};
    const Provenance prov = provenance_of(cfg);
    const auto images = image_ids(cfg);
    if (images.empty()) throw ConfigError("batch needs at least one image");

    const std::size_t per_image = cfg.kernels.size() * cfg.bsnr.size() * cfg.losses.size();
    std::vector<std::optional<ExperimentRecord>> slots(images.size() * per_image);
    std::vector<std::vector<std::string>> failures(images.size());
    std::mutex log_mutex;
    auto say = [&](const std::string& msg) {
        if (!log) return;
        std::lock_guard lock(log_mutex);
        log(msg);
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < images.size(); i = next++) {
            std::vector<Instance> insts;
            try {
                insts = cmd_degrade(cfg, images[i]);
            } catch (const std::exception& e) {
                failures[i].push_back(images[i] + " degrade: " + e.what());
                say("FAILED degrade " + images[i] + ": " + e.what());
                continue;
            }
            for (std::size_t k = 0; k < insts.size(); ++k) {
                for (std::size_t l = 0; l < cfg.losses.size(); ++l) {
                    const LossTag loss = cfg.losses[l];
                    const std::string item = insts[k].id() + " " + std::string(to_string(loss));
                    try {
                        slots[i * per_image + k * cfg.losses.size() + l] = cmd_learn(cfg, insts[k].id(), loss);
                        say("done " + item);
                    } catch (const std::exception& e) {
                        failures[i].push_back(item + ": " + e.what());
                        say("FAILED " + item + ": " + e.what());
                    }
                }
            }
        }
    };

    const std::size_t n_threads = std::min(batch_threads(cfg), images.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    BatchResult result;
    for (auto& s : slots)
        if (s) result.records.push_back(std::move(*s));
    for (auto& f : failures)
        for (auto& msg : f) result.failures.push_back(std::move(msg));
    result.aggregates = aggregate(result.records);

    detail::write_file(layout.root / "records.csv", records_csv(result.records, prov));
    detail::write_file(layout.root / "timings.csv", timings_csv(result.records, prov));
    detail::write_file(layout.root / "aggregate.csv", aggregate_csv(result.aggregates, prov));
    if (!result.failures.empty()) {
        std::string text = "# " + prov.line() + "\n";
        for (const auto& f : result.failures) text += f + "\n";
        detail::write_file(layout.root / "failures.txt", text);
    } else {
        fs::remove(layout.root / "failures.txt");
    }
    return result;
}

std::vector<ExperimentRecord> read_records_csv(const fs::path& path) {
    const auto t = detail::read_csv(path);
    const std::string what = path.string();
    std::vector<ExperimentRecord> out;
    for (const auto& row : t.rows) {
        ExperimentRecord r;
        r.image = row[t.column("image")];
        r.kernel = row[t.column("kernel")];
        r.bsnr = detail::parse_double(row[t.column("bsnr")], what);
        try {
            r.loss = parse_loss_tag(row[t.column("loss")]);
        } catch (const ConfigError& e) {
            throw IoError(what + ": " + e.what());
        }
        r.lambda_hat = detail::parse_double(row[t.column("lambda_hat")], what);
        r.beta_hat = detail::parse_double(row[t.column("beta_hat")], what);
        r.q_value = detail::parse_double(row[t.column("q_value")], what);
        r.outer_iterations = static_cast<std::size_t>(detail::parse_double(row[t.column("outer_iterations")], what));
        r.converged = row[t.column("converged")] == "1";
        r.residual_energy = detail::parse_double(row[t.column("residual_energy")], what);
        if (const auto& s = row[t.column("psnr")]; !s.empty()) r.psnr = detail::parse_double(s, what);
        if (const auto& s = row[t.column("ssim")]; !s.empty()) r.ssim = detail::parse_double(s, what);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Aggregate> read_aggregate_csv(const fs::path& path) {
    const auto t = detail::read_csv(path);
    const std::string what = path.string();
    std::vector<Aggregate> out;
    for (const auto& row : t.rows) {
        Aggregate a;
        a.kernel = row[t.column("kernel")];
        a.bsnr = detail::parse_double(row[t.column("bsnr")], what);
        try {
            a.loss = parse_loss_tag(row[t.column("loss")]);
        } catch (const ConfigError& e) {
            throw IoError(what + ": " + e.what());
        }
        a.count = static_cast<std::size_t>(detail::parse_double(row[t.column("count")], what));
        a.psnr_mean = detail::parse_double(row[t.column("psnr_mean")], what);
        a.psnr_std = detail::parse_double(row[t.column("psnr_std")], what);
        a.ssim_mean = detail::parse_double(row[t.column("ssim_mean")], what);
        a.ssim_std = detail::parse_double(row[t.column("ssim_std")], what);
        out.push_back(a);
    }
    return out;
}

}  // namespace wb::harness
