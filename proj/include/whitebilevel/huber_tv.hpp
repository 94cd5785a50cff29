#pragma once

#include <array>
#include <memory>
#include <vector>

#include "whitebilevel/image.hpp"
#include "whitebilevel/operators.hpp"

namespace wb {

using Vec2 = std::array<double, 2>;

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

/// Smoothing radius of the C^2 Huber function.
struct HuberParams {
    double eps = 1e-3;

    explicit HuberParams(double eps_ = 1e-3);
};

// C^2 Huber smoothing of the Euclidean norm on R^2:
//   h(v) = 3/(4 eps) |v|^2 - 1/(8 eps^3) |v|^4   for |v| <  eps
//   h(v) = |v| - 3 eps / 8                        for |v| >= eps
double huber_value(const Vec2& v, double eps);
Vec2 huber_grad(const Vec2& v, double eps);
/// Eigenvalues lie in [0, 3/(2 eps)]; the upper bound is attained at v = 0.
Sym2 huber_hess(const Vec2& v, double eps);

/// Sum of huber_value over all pixel 2-vectors of the field.
double huber_total(const GradField& g, double eps);

/// Lower-level objective F(x) = 1/2 ||A x - y||^2 + lambda * sum_j h((Dx)_j).
/// Immutable; evaluation is reentrant.
class TVProblem {
public:
    TVProblem(std::shared_ptr<const ConvOperator> op, Image observed, double lambda, HuberParams huber);

    const ConvOperator& op() const { return *op_; }
    std::shared_ptr<const ConvOperator> op_ptr() const { return op_; }
    const Image& observed() const { return observed_; }
    double lambda() const { return lambda_; }
    double eps() const { return huber_.eps; }
    const HuberParams& huber() const { return huber_; }

    /// Same operator and data, different regularization weight.
    TVProblem with_lambda(double lambda) const;

    double value(const Image& x) const;
    /// A^T(Ax - y) + lambda D^T grad_h(Dx)
    Image gradient(const Image& x) const;
    /// (A^T A + lambda D^T hess_h(Dx) D) u, matrix-free.
    Image hessian_vec(const Image& x, const Image& u) const;
    /// d gradient / d lambda = D^T grad_h(Dx).
    Image dgrad_dlambda(const Image& x) const;

    // In-place variants for the solver loops.
    void gradient_into(const Image& x, Image& out) const;
    void dgrad_dlambda_into(const Image& x, Image& out) const;
    /// ||A||^2 + 12 lambda / eps, an upper bound on the gradient Lipschitz constant.
    double lipschitz_bound() const;

private:
    void check(const Image& x) const;

    std::shared_ptr<const ConvOperator> op_;
    Image observed_;
    Image adjoint_observed_;  // A^T y, cached
    double lambda_;
    HuberParams huber_;
};

/// The Huber-Hessian blocks evaluated once at a fixed point, for repeated
/// Hessian-vector products (conjugate gradients, power iteration).
class HessianAt {
public:
    HessianAt(const TVProblem& problem, const Image& x);
    Image apply(const Image& u) const;
    void apply_into(const Image& u, Image& out) const;
    /// Diagonal of the Hessian, for Jacobi preconditioning.
    Image diagonal() const;

private:
    std::shared_ptr<const ConvOperator> op_;
    double lambda_;
    std::size_t height_;
    std::size_t width_;
    std::vector<Sym2> blocks_;
};

}  // namespace wb
