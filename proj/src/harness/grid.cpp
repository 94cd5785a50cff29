#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "common.hpp"
#include "data.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/metrics.hpp"

namespace wb::harness {

GridResult cmd_grid(const ExperimentConfig& cfg, const std::string& instance) {
    cfg.validate();
    const Layout layout{cfg.out};
    const Provenance prov = provenance_of(cfg);
    const Instance inst = Instance::parse(instance);
    const detail::Observation obs = detail::load_observation(layout, inst);
    auto op = std::make_shared<const ConvOperator>(obs.kernel, obs.y.height(), obs.y.width());

    std::optional<Image> gt;
    if (fs::exists(layout.ground_truth(inst.image))) gt = detail::load_ground_truth(layout, inst.image);
    std::optional<double> sigma;
    if (fs::exists(layout.noise_sidecar(inst))) sigma = read_noise_sidecar(layout.noise_sidecar(inst)).sigma;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> lambdas = cfg.grid.values();
    GridResult result;
    result.rows.resize(lambdas.size());

    const TVProblem base(op, obs.y, lambdas.back(), cfg.huber);
    Image warm = obs.y;
    for (std::size_t k = lambdas.size(); k-- > 0;) {
        GridRow& row = result.rows[k];
        row.lambda = lambdas[k];
        row.q_mse = row.q_gauss = row.q_white = row.discrepancy = row.psnr = row.ssim = nan;
        try {
            const TVProblem problem = base.with_lambda(lambdas[k]);
            AGDResult lower = solve_lower(warm, problem, cfg.agd);
            row.agd_iterations = lower.iterations;
            row.agd_converged = lower.converged;
            const Image& x = lower.minimizer;
            row.q_white = q_value(rho(WhiteLoss{}, x, *op, obs.y));
            if (sigma) {
                row.q_gauss = q_value(rho(GaussLoss{*sigma}, x, *op, obs.y));
                const double expected = static_cast<double>(x.size()) * *sigma * *sigma;
                row.discrepancy = (squared_norm(residual(x, *op, obs.y)) - expected) / expected;
            }
            if (gt) {
                row.q_mse = q_value(rho(MseLoss{*gt}, x, *op, obs.y));
                row.psnr = psnr(x, *gt);
                if (gt->height() >= 11 && gt->width() >= 11) row.ssim = ssim(x, *gt);
            }
            warm = std::move(lower.minimizer);
        } catch (const Error& e) {
            row.status = e.what();
            warm = obs.y;
        }
    }

    if (gt) {
        for (std::size_t k = 0; k < result.rows.size(); ++k) {
            const auto& row = result.rows[k];
            if (row.status != "ok") continue;
            if (!result.argmin_mse || row.q_mse < result.rows[*result.argmin_mse].q_mse) result.argmin_mse = k;
        }
        if (result.argmin_mse) {
            result.argmin_on_boundary = *result.argmin_mse == 0 || *result.argmin_mse + 1 == result.rows.size();
        }
    }

    std::ostringstream csv;
    csv << "# " << prov.line() << " instance=" << inst.id() << "\n";
    csv << "lambda,Q_MSE,Q_GAUSS,Q_WHITE,discrepancy,PSNR,SSIM,agd_iterations,agd_converged,status\n";
    for (const auto& row : result.rows) {
        std::string status = row.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        csv << detail::fmt(row.lambda) << "," << detail::fmt(row.q_mse) << "," << detail::fmt(row.q_gauss) << ","
            << detail::fmt(row.q_white) << "," << detail::fmt(row.discrepancy) << "," << detail::fmt(row.psnr) << "," << detail::fmt(row.ssim) << ","
            << row.agd_iterations << "," << (row.agd_converged ? 1 : 0) << "," << status << "\n";
    }
    detail::write_file(layout.grid_csv(inst), csv.str());
    return result;
}

}  // namespace wb::harness
