#pragma once

#include <cstddef>
#include <functional>

#include "whitebilevel/huber_tv.hpp"
#include "whitebilevel/image.hpp"

namespace wb {

struct AGDConfig {
    /// Relative stopping tolerance on ||x_{t+1} - x_t||.
    double tol = 1e-6;
    std::size_t max_iters = 50000;

    void validate() const;
};

struct AGDResult {
    Image minimizer;
    std::size_t iterations = 0;
    double final_step_norm = 0.0;
    double final_objective = 0.0;
    bool converged = false;
};

/// Per-iteration hook: (iteration, objective, step norm). Objective is only
/// evaluated when a callback is installed.
using AGDTraceFn = std::function<void(std::size_t, double, double)>;

/// Nesterov accelerated gradient descent with the fixed step 1/L, L being
/// TVProblem::lipschitz_bound(). Always performs at least one iteration and
/// stops once ||x_{t+1} - x_t|| <= tol * max(||x_t||, 1).
/// Throws DivergenceError on non-finite iterates.
AGDResult solve_lower(const Image& x0, const TVProblem& problem, const AGDConfig& cfg,
                      const AGDTraceFn& trace = {});

}  // namespace wb
