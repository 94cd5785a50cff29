#include <chrono>
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "data.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/image_io.hpp"
#include "whitebilevel/metrics.hpp"

namespace wb::harness {

using nlohmann::json;

json to_json(const ExperimentRecord& r) {
    json j = {{"image", r.image},
              {"kernel", r.kernel},
              {"bsnr", r.bsnr},
              {"loss", std::string(to_string(r.loss))},
              {"lambda_hat", r.lambda_hat},
              {"beta_hat", r.beta_hat},
              {"q_value", r.q_value},
              {"outer_iterations", r.outer_iterations},
              {"converged", r.converged},
              {"stop_reason", r.stop_reason},
              {"residual_energy", r.residual_energy},
              {"psnr", nullptr},
              {"ssim", nullptr},
              {"wall_seconds", r.wall_seconds}};
    if (r.psnr) j["psnr"] = *r.psnr;
    if (r.ssim) j["ssim"] = *r.ssim;
    return j;
}

namespace {

LossKind make_loss(LossTag tag, const Layout& layout, const Instance& inst) {
    switch (tag) {
        case LossTag::Mse:
            return MseLoss{detail::load_ground_truth(layout, inst.image)};
        case LossTag::Gauss:
            return GaussLoss{read_noise_sidecar(layout.noise_sidecar(inst)).sigma};
        case LossTag::White:
            break;
    }
    return WhiteLoss{};
}

}  // namespace

ExperimentRecord cmd_learn(const ExperimentConfig& cfg, const std::string& instance, LossTag loss, bool evaluate) {
    cfg.validate();
    const Layout layout{cfg.out};
    const Provenance prov = provenance_of(cfg);
    const Instance inst = Instance::parse(instance);

    const auto start = std::chrono::steady_clock::now();
    detail::Observation obs = detail::load_observation(layout, inst);
    const LossKind kind = make_loss(loss, layout, inst);
    auto op = std::make_shared<const ConvOperator>(obs.kernel, obs.y.height(), obs.y.width());
    BilevelResult result = solve_bilevel(obs.y, op, kind, cfg.huber, cfg.agd, cfg.bilevel);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ExperimentRecord rec;
    rec.image = inst.image;
    rec.kernel = inst.kernel;
    rec.bsnr = inst.bsnr;
    rec.loss = loss;
    rec.lambda_hat = result.lambda_hat;
    rec.beta_hat = result.beta_hat;
    rec.q_value = result.q_value;
    rec.outer_iterations = result.trace.size();
    rec.converged = result.converged;
    rec.stop_reason = result.stop_reason;
    rec.residual_energy = squared_norm(residual(result.x_hat, *op, obs.y)) / static_cast<double>(obs.y.size());
    rec.wall_seconds = seconds;

    // Evaluation happens after training and only when the ground truth exists.
    if (evaluate && fs::exists(layout.ground_truth(inst.image))) {
        const Image gt = detail::load_ground_truth(layout, inst.image);
        rec.psnr = psnr(result.x_hat, gt);
        if (gt.height() >= 11 && gt.width() >= 11) rec.ssim = ssim(result.x_hat, gt);
    }

    const fs::path stem = layout.run_stem(inst, loss);
    fs::create_directories(stem.parent_path());
    std::ostringstream trace;
    for (const auto& t : result.trace) {
        json line = to_json(t);
        line["config_hash"] = prov.config_hash;
        line["seed"] = prov.seed;
        trace << line.dump() << "\n";
    }
    detail::write_file(fs::path(stem.string() + ".trace.jsonl"), trace.str());
    io::write_f64(fs::path(stem.string() + ".xhat.f64"), result.x_hat,
                  {{"instance", inst.id()},
                   {"loss", std::string(to_string(loss))},
                   {"lambda_hat", rec.lambda_hat},
                   {"config_hash", prov.config_hash},
                   {"seed", prov.seed}});
    io::write_pgm(fs::path(stem.string() + ".xhat.pgm"), result.x_hat, prov.line());
    json record = to_json(rec);
    record["config_hash"] = prov.config_hash;
    record["seed"] = prov.seed;
    record["selected_iteration"] = result.selected;
    detail::write_file(fs::path(stem.string() + ".record.json"), record.dump(2) + "\n");
    return rec;
}

}  // namespace wb::harness
