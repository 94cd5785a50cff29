#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whitebilevel/agd.hpp"
#include "whitebilevel/huber_tv.hpp"
#include "whitebilevel/losses.hpp"

namespace wb {

struct BilevelConfig {
    double beta0 = 2.0;
    /// Fixed damping of the Gauss-Newton step, in (0, 1).
    double alpha = 0.1;
    double tol_d = 1e-5;
    std::size_t max_it = 60;
    /// Cap on the beta increment |alpha * d| per outer iteration.
    double max_step = 8.0;
    double cg_tol = 1e-8;
    /// 0 means "number of pixels".
    std::size_t cg_max_iters = 0;

    void validate() const;
};

/// lambda = exp(beta)
double reparam(double beta);

struct CGResult {
    Image solution;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Solves  hess F(x_star) u = rhs  by conjugate gradients on the matrix-free
/// Hessian. Throws NegativeCurvature if a search direction has p^T H p <= 0.
CGResult hessian_solve(const Image& x_star, const TVProblem& problem, const Image& rhs, const BilevelConfig& cfg);

/// dx*/dbeta = -exp(beta) * hess^{-1} * (d grad / d lambda).
Image dxstar_dbeta(const Image& x_star, const TVProblem& problem, double beta, const BilevelConfig& cfg,
                   CGResult* cg_info = nullptr);

/// Scalar Gauss-Newton step d = -<J, rho> / <J, J>.
/// Throws VanishingJacobian when <J, J> < 1e-30.
double gn_direction(const RhoVector& rho, const std::vector<double>& jrho);

/// Residual vector and its beta-derivative at one Gauss-Newton iterate.
struct GNEvaluation {
    RhoVector rho;
    std::vector<double> jacobian;
};

struct GNOptions {
    double beta0 = 2.0;
    /// Damping in (0, 1].
    double alpha = 0.1;
    double tol_d = 1e-5;
    std::size_t max_it = 60;
    double max_step = 8.0;
};

struct GNStep {
    double beta = 0.0;
    double q_value = 0.0;
    /// Zero when the Jacobian vanished at this iterate.
    double direction = 0.0;
};

struct GNOutcome {
    std::vector<GNStep> steps;
    /// Last step when converged, otherwise the step with the smallest Q.
    std::size_t selected = 0;
    bool converged = false;
    std::string stop_reason;
};

/// Damped scalar Gauss-Newton: beta += clamp(alpha * d, +-max_step) with
/// d = -<J, rho> / <J, J>, until |d| <= tol_d or max_it evaluations.
/// `evaluate(beta, iteration)` may throw to abort; VanishingJacobian and a
/// non-finite lambda end the loop with a stop reason instead.
GNOutcome gauss_newton_scalar(const std::function<GNEvaluation(double, std::size_t)>& evaluate,
                              const GNOptions& options);

struct TraceRecord {
    std::size_t iteration = 0;
    double beta = 0.0;
    double lambda = 0.0;
    double q_value = 0.0;
    double direction = 0.0;
    std::size_t agd_iterations = 0;
    bool agd_converged = false;
    std::size_t cg_iterations = 0;
    bool cg_converged = false;
};

nlohmann::json to_json(const TraceRecord& record);
/// One JSON object per line.
void write_trace_jsonl(std::ostream& out, const std::vector<TraceRecord>& trace);

struct BilevelResult {
    double lambda_hat = 0.0;
    double beta_hat = 0.0;
    Image x_hat;
    double q_value = 0.0;
    std::vector<TraceRecord> trace;
    /// Index of the trace record that produced lambda_hat.
    std::size_t selected = 0;
    bool converged = false;
    std::string stop_reason;
};

/// Gauss-Newton bilevel loop over beta = log(lambda). Each outer iteration
/// warm-starts the lower solve from the previous minimizer (y at the start),
/// differentiates x* implicitly and takes beta += alpha * d. Stops when
/// |d| <= tol_d (converged, last iterate returned) or on max_it / a flat
/// loss / lambda leaving the representable range, in which case the iterate
/// with the smallest Q is returned.
BilevelResult solve_bilevel(const Image& y, std::shared_ptr<const ConvOperator> op, const LossKind& kind,
                            const HuberParams& huber, const AGDConfig& agd, const BilevelConfig& cfg);

}  // namespace wb
