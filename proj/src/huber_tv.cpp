#include "whitebilevel/huber_tv.hpp"

#include <cmath>
#include <string>

#include "whitebilevel/error.hpp"

namespace wb {

HuberParams::HuberParams(double eps_) : eps(eps_) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("Huber eps must be positive");
}

double huber_value(const Vec2& v, double eps) {
    const double s = v[0] * v[0] + v[1] * v[1];
    const double norm = std::sqrt(s);
    if (norm < eps) return 3.0 / (4.0 * eps) * s - s * s / (8.0 * eps * eps * eps);
    return norm - 3.0 * eps / 8.0;
}

Vec2 huber_grad(const Vec2& v, double eps) {
    const double s = v[0] * v[0] + v[1] * v[1];
    const double norm = std::sqrt(s);
    double scale;
    if (norm < eps) {
        scale = 3.0 / (2.0 * eps) - s / (2.0 * eps * eps * eps);
    } else {
        scale = 1.0 / norm;
    }
    return {scale * v[0], scale * v[1]};
}

Sym2 huber_hess(const Vec2& v, double eps) {
    const double s = v[0] * v[0] + v[1] * v[1];
    const double norm = std::sqrt(s);
    if (norm < eps) {
        const double e3 = eps * eps * eps;
        const double diag = 3.0 / (2.0 * eps) - s / (2.0 * e3);
        const double outer = -1.0 / e3;  // -(1/(2 eps^3)) * 2 v v^T
        return {diag + outer * v[0] * v[0], outer * v[0] * v[1], diag + outer * v[1] * v[1]};
    }
    const double inv = 1.0 / norm;
    const double inv3 = inv * inv * inv;
    return {inv - v[0] * v[0] * inv3, -v[0] * v[1] * inv3, inv - v[1] * v[1] * inv3};
}

double huber_total(const GradField& g, double eps) {
    require_same_shape(g.horizontal, g.vertical, "gradient field planes");
    double total = 0.0;
    for (std::size_t j = 0; j < g.horizontal.size(); ++j) {
        total += huber_value({g.horizontal[j], g.vertical[j]}, eps);
    }
    return total;
}

TVProblem::TVProblem(std::shared_ptr<const ConvOperator> op, Image observed, double lambda, HuberParams huber)
    : op_(std::move(op)), observed_(std::move(observed)), lambda_(lambda), huber_(huber) {
    if (!op_) throw InvalidArgument("TV problem needs an operator");
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
        throw InvalidArgument("lambda must be positive and finite, got " + std::to_string(lambda_));
    }
    check(observed_);
    adjoint_observed_ = op_->adjoint(observed_);
}

TVProblem TVProblem::with_lambda(double lambda) const {
    TVProblem copy = *this;
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be positive and finite, got " + std::to_string(lambda));
    }
    copy.lambda_ = lambda;
    return copy;
}

void TVProblem::check(const Image& x) const {
    if (x.height() != op_->height() || x.width() != op_->width()) {
        throw DimensionMismatch("image " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                                " does not match problem " + std::to_string(op_->height()) + "x" +
                                std::to_string(op_->width()));
    }
}

double TVProblem::value(const Image& x) const {
    check(x);
    Image r = op_->apply(x);
    r -= observed_;
    return 0.5 * squared_norm(r) + lambda_ * huber_total(grad_apply(x), huber_.eps);
}

void TVProblem::dgrad_dlambda_into(const Image& x, Image& out) const {
    check(x);
    thread_local GradField g;
    grad_apply_into(x, g);
    const double eps = huber_.eps;
    const double inner_a = 3.0 / (2.0 * eps);
    const double inner_b = 1.0 / (2.0 * eps * eps * eps);
    double* gh = g.horizontal.data().data();
    double* gv = g.vertical.data().data();
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double s = gh[j] * gh[j] + gv[j] * gv[j];
        const double scale = (s < eps * eps) ? inner_a - inner_b * s : 1.0 / std::sqrt(s);
        gh[j] *= scale;
        gv[j] *= scale;
    }
    grad_adjoint_into(g, out);
}

Image TVProblem::dgrad_dlambda(const Image& x) const {
    Image out;
    dgrad_dlambda_into(x, out);
    return out;
}

void TVProblem::gradient_into(const Image& x, Image& out) const {
    thread_local Image tv;
    dgrad_dlambda_into(x, tv);
    op_->normal_into(x, out);
    double* o = out.data().data();
    const double* aty = adjoint_observed_.data().data();
    const double* t = tv.data().data();
    for (std::size_t j = 0; j < out.size(); ++j) o[j] += lambda_ * t[j] - aty[j];
}

Image TVProblem::gradient(const Image& x) const {
    Image out;
    gradient_into(x, out);
    return out;
}

Image TVProblem::hessian_vec(const Image& x, const Image& u) const {
    check(u);
    return HessianAt(*this, x).apply(u);
}

double TVProblem::lipschitz_bound() const { return op_->norm_sq() + 12.0 * lambda_ / huber_.eps; }

HessianAt::HessianAt(const TVProblem& problem, const Image& x)
    : op_(problem.op_ptr()), lambda_(problem.lambda()), height_(x.height()), width_(x.width()) {
    if (x.height() != op_->height() || x.width() != op_->width()) {
        throw DimensionMismatch("Hessian linearization point does not match the problem");
    }
    const GradField g = grad_apply(x);
    blocks_.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        blocks_[j] = huber_hess({g.horizontal[j], g.vertical[j]}, problem.eps());
    }
}

void HessianAt::apply_into(const Image& u, Image& out) const {
    if (u.size() != blocks_.size()) throw DimensionMismatch("Hessian-vector product dimension mismatch");
    thread_local GradField du;
    thread_local Image tv;
    grad_apply_into(u, du);
    double* gh = du.horizontal.data().data();
    double* gv = du.vertical.data().data();
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const Sym2& b = blocks_[j];
        const double h = gh[j];
        const double v = gv[j];
        gh[j] = b.xx * h + b.xy * v;
        gv[j] = b.xy * h + b.yy * v;
    }
    grad_adjoint_into(du, tv);
    op_->normal_into(u, out);
    out.axpy(lambda_, tv);
}

Image HessianAt::diagonal() const {
    // Each pixel p also sees its own
    // block through (-1,-1) and the blocks of its left and upper neighbours.
    Image diag(height_, width_, op_->normal_diagonal());
    for (std::size_t r = 0; r < height_; ++r) {
        const std::size_t up = (r == 0) ? height_ - 1 : r - 1;
        for (std::size_t c = 0; c < width_; ++c) {
            const std::size_t left = (c == 0) ? width_ - 1 : c - 1;
            const Sym2& own = blocks_[r * width_ + c];
            const double tv = own.xx + 2.0 * own.xy + own.yy + blocks_[r * width_ + left].xx +
                              blocks_[up * width_ + c].yy;
            diag(r, c) += lambda_ * tv;
        }
    }
    return diag;
}

Image HessianAt::apply(const Image& u) const {
    Image out;
    apply_into(u, out);
    return out;
}

}  // namespace wb
