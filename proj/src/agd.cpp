#include "whitebilevel/agd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "whitebilevel/error.hpp"

namespace wb {

void AGDConfig::validate() const {
    if (!(tol > 0.0)) throw InvalidArgument("AGD tolerance must be positive");
    if (max_iters < 1) throw InvalidArgument("AGD max_iters must be at least 1");
}

AGDResult solve_lower(const Image& x0, const TVProblem& problem, const AGDConfig& cfg, const AGDTraceFn& trace) {
    cfg.validate();
    require_same_shape(x0, problem.observed(), "lower-level initial point");
    const double lipschitz = problem.lipschitz_bound();
    if (!std::isfinite(lipschitz) || lipschitz <= 0.0) {
        throw InvalidArgument("Lipschitz bound is not finite: " + std::to_string(lipschitz));
    }
    const double tau = 1.0 / lipschitz;

    const std::size_t n = x0.size();
    Image x_prev = x0;
    Image x = x0;
    Image z(x0.height(), x0.width());
    Image grad(x0.height(), x0.width());
    double theta = 1.0;

    AGDResult result;
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        const double momentum = (theta - 1.0) / theta_next;

        for (std::size_t j = 0; j < n; ++j) z[j] = x[j] + momentum * (x[j] - x_prev[j]);
        problem.gradient_into(z, grad);

        // x_prev <- x_{t+1}, then swap so that x holds x_{t+1} and x_prev holds x_t.
        double step_sq = 0.0;
        double x_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double next = z[j] - tau * grad[j];
            const double diff = next - x[j];
            step_sq += diff * diff;
            x_sq += x[j] * x[j];
            x_prev[j] = next;
        }
        std::swap(x, x_prev);
        const double step_norm = std::sqrt(step_sq);
        if (!std::isfinite(step_norm)) {
            throw DivergenceError("non-finite iterate at AGD iteration " + std::to_string(t + 1));
        }
        theta = theta_next;
        result.iterations = t + 1;
        result.final_step_norm = step_norm;

        if (trace) trace(t + 1, problem.value(x), step_norm);
        if (step_norm <= cfg.tol * std::max(std::sqrt(x_sq), 1.0)) {
            result.converged = true;
            break;
        }
    }

    result.final_objective = problem.value(x);
    if (!std::isfinite(result.final_objective)) {
        throw DivergenceError("non-finite objective at the AGD output");
    }
    result.minimizer = std::move(x);
    return result;
}

}  // namespace wb
