#include "whitebilevel/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "whitebilevel/error.hpp"

namespace wb {

namespace {

constexpr double kVanishingJacobian = 1e-30;

}  // namespace

void BilevelConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (!(tol_d > 0.0)) throw InvalidArgument("tol_d must be positive");
    if (max_it < 1) throw InvalidArgument("max_it must be at least 1");
    if (!(cg_tol > 0.0)) throw InvalidArgument("cg_tol must be positive");
    if (!std::isfinite(beta0)) throw InvalidArgument("beta0 must be finite");
    if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
}

double reparam(double beta) { return std::exp(beta); }

CGResult hessian_solve(const Image& x_star, const TVProblem& problem, const Image& rhs, const BilevelConfig& cfg) {
    require_same_shape(x_star, rhs, "Hessian solve");
    const HessianAt hessian(problem, x_star);
    const std::size_t n = rhs.size();
    const std::size_t max_iters = cfg.cg_max_iters ? cfg.cg_max_iters : n;

    CGResult out;
    out.solution = Image(rhs.height(), rhs.width());
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) {
        out.converged = true;
        return out;
    }

    // Jacobi-preconditioned CG; convergence is judged on the plain residual.
    Image inv_diag = hessian.diagonal();
    for (double& v : inv_diag.data()) v = 1.0 / v;
    Image& u = out.solution;
    Image r = rhs;
    Image z = r;
    for (std::size_t j = 0; j < n; ++j) z[j] *= inv_diag[j];
    Image p = z;
    Image hp(rhs.height(), rhs.width());
    double rz = dot(r, z);
    const double target = cfg.cg_tol * rhs_norm;
    for (std::size_t k = 0; k < max_iters; ++k) {
        hessian.apply_into(p, hp);
        const double curvature = dot(p, hp);
        if (!(curvature > 0.0)) {
            throw NegativeCurvature("non-positive curvature " + std::to_string(curvature) +
                                    " at CG iteration " + std::to_string(k));
        }
        const double step = rz / curvature;
        double rr = 0.0;
        double rz_next = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            u[j] += step * p[j];
            r[j] -= step * hp[j];
            z[j] = r[j] * inv_diag[j];
            rr += r[j] * r[j];
            rz_next += r[j] * z[j];
        }
        out.iterations = k + 1;
        if (std::sqrt(rr) <= target) {
            out.converged = true;
            break;
        }
        const double beta = rz_next / rz;
        for (std::size_t j = 0; j < n; ++j) p[j] = z[j] + beta * p[j];
        rz = rz_next;
    }
    // Report the true residual rather than the recursively updated one.
    hessian.apply_into(u, hp);
    hp -= rhs;
    out.relative_residual = norm2(hp) / rhs_norm;
    return out;
}

Image dxstar_dbeta(const Image& x_star, const TVProblem& problem, double beta, const BilevelConfig& cfg,
                   CGResult* cg_info) {
    CGResult cg = hessian_solve(x_star, problem, problem.dgrad_dlambda(x_star), cfg);
    Image out = std::move(cg.solution);
    out *= -reparam(beta);
    if (cg_info) {
        cg_info->iterations = cg.iterations;
        cg_info->relative_residual = cg.relative_residual;
        cg_info->converged = cg.converged;
    }
    return out;
}

double gn_direction(const RhoVector& rho, const std::vector<double>& jrho) {
    if (rho.values.size() != jrho.size()) {
        throw DimensionMismatch("rho has " + std::to_string(rho.values.size()) + " entries, Jacobian " +
                                std::to_string(jrho.size()));
    }
    double jj = 0.0;
    double jr = 0.0;
    for (std::size_t i = 0; i < jrho.size(); ++i) {
        jj += jrho[i] * jrho[i];
        jr += jrho[i] * rho.values[i];
    }
    if (jj < kVanishingJacobian) {
        throw VanishingJacobian("J^T J = " + std::to_string(jj) + "; the loss is flat in beta");
    }
    return -jr / jj;
}

nlohmann::json to_json(const TraceRecord& record) {
    return {{"iteration", record.iteration},
            {"beta", record.beta},
            {"lambda", record.lambda},
            {"q", record.q_value},
            {"d", record.direction},
            {"agd_iterations", record.agd_iterations},
            {"agd_converged", record.agd_converged},
            {"cg_iterations", record.cg_iterations},
            {"cg_converged", record.cg_converged}};
}

void write_trace_jsonl(std::ostream& out, const std::vector<TraceRecord>& trace) {
    for (const auto& record : trace) out << to_json(record).dump() << "\n";
}

GNOutcome gauss_newton_scalar(const std::function<GNEvaluation(double, std::size_t)>& evaluate,
                              const GNOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
    GNOutcome out;
    out.stop_reason = "max_it reached";
    double beta = options.beta0;
    for (std::size_t i = 0; i < options.max_it; ++i) {
        const double lambda = reparam(beta);
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            out.stop_reason = "lambda left the representable range";
            break;
        }
        const GNEvaluation eval = evaluate(beta, i);
        GNStep step;
        step.beta = beta;
        step.q_value = q_value(eval.rho);
        bool flat = false;
        try {
            step.direction = gn_direction(eval.rho, eval.jacobian);
        } catch (const VanishingJacobian&) {
            flat = true;
        }
        out.steps.push_back(step);
        if (step.q_value < out.steps[out.selected].q_value) out.selected = out.steps.size() - 1;
        if (flat) {
            out.stop_reason = "vanishing Jacobian";
            break;
        }
        if (std::abs(step.direction) <= options.tol_d) {
            out.converged = true;
            out.stop_reason = "converged";
            out.selected = out.steps.size() - 1;
            break;
        }
        beta += std::clamp(options.alpha * step.direction, -options.max_step, options.max_step);
    }
    if (out.steps.empty()) throw Error("Gauss-Newton stopped before the first evaluation");
    return out;
}

BilevelResult solve_bilevel(const Image& y, std::shared_ptr<const ConvOperator> op, const LossKind& kind,
                            const HuberParams& huber, const AGDConfig& agd, const BilevelConfig& cfg) {
    cfg.validate();
    agd.validate();
    if (!y.all_finite()) throw InvalidArgument("observed image has non-finite samples");

    const TVProblem base(std::move(op), y, reparam(cfg.beta0), huber);

    std::vector<TraceRecord> trace;
    Image warm = y;
    Image best_x;
    double best_q = std::numeric_limits<double>::infinity();

    auto evaluate = [&](double beta, std::size_t iteration) {
        const TVProblem problem = base.with_lambda(reparam(beta));
        AGDResult lower = solve_lower(warm, problem, agd);

        TraceRecord record;
        record.iteration = iteration;
        record.beta = beta;
        record.lambda = problem.lambda();
        record.agd_iterations = lower.iterations;
        record.agd_converged = lower.converged;

        GNEvaluation eval;
        eval.rho = rho(kind, lower.minimizer, problem.op(), y);
        record.q_value = q_value(eval.rho);

        CGResult cg;
        const Image dx = dxstar_dbeta(lower.minimizer, problem, beta, cfg, &cg);
        record.cg_iterations = cg.iterations;
        record.cg_converged = cg.converged;
        eval.jacobian = rho_jacobian_beta(kind, lower.minimizer, dx, problem.op(), y);

        trace.push_back(record);
        if (record.q_value < best_q) {
            best_q = record.q_value;
            best_x = lower.minimizer;
        }
        warm = std::move(lower.minimizer);
        return eval;
    };

    GNOptions options;
    options.beta0 = cfg.beta0;
    options.alpha = cfg.alpha;
    options.tol_d = cfg.tol_d;
    options.max_it = cfg.max_it;
    options.max_step = cfg.max_step;
    const GNOutcome outcome = gauss_newton_scalar(evaluate, options);

    BilevelResult result;
    for (std::size_t i = 0; i < outcome.steps.size(); ++i) trace[i].direction = outcome.steps[i].direction;
    result.trace = std::move(trace);
    result.selected = outcome.selected;
    result.converged = outcome.converged;
    result.stop_reason = outcome.stop_reason;
    // The converged iterate is the last one and `warm` holds its minimizer.
    result.x_hat = outcome.converged ? std::move(warm) : std::move(best_x);
    const TraceRecord& chosen = result.trace[result.selected];
    result.beta_hat = chosen.beta;
    result.lambda_hat = chosen.lambda;
    result.q_value = chosen.q_value;
    return result;
}

}  // namespace wb
