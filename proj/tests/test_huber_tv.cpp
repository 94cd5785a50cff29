#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "whitebilevel/degradation.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/huber_tv.hpp"

using wb::HuberParams;
using wb::Image;
using wb::TVProblem;
using wb::Vec2;

namespace {

std::shared_ptr<const wb::ConvOperator> gaussian_op(std::size_t n) {
    return std::make_shared<const wb::ConvOperator>(wb::make_gaussian_kernel(5, 1.0), n, n);
}

std::shared_ptr<const wb::ConvOperator> identity_op(std::size_t n) {
    return std::make_shared<const wb::ConvOperator>(wb::Kernel::identity(), n, n);
}

Vec2 random_vec(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng)};
}

}  // namespace

TEST(Huber, Values) {
    const double eps = 1e-3;
    EXPECT_EQ(wb::huber_value({0, 0}, eps), 0.0);
    EXPECT_NEAR(wb::huber_value({1, 0}, eps), 0.999625, 1e-15);
    const double c = std::cos(0.3), s = std::sin(0.3);
    EXPECT_NEAR(wb::huber_value({eps * c, eps * s}, eps), 5 * eps / 8, 1e-15);
}

TEST(Huber, GradientAndHessianClosedForms) {
    const double eps = 1e-2;
    const Vec2 g0 = wb::huber_grad({0, 0}, eps);
    EXPECT_EQ(g0[0], 0.0);
    EXPECT_EQ(g0[1], 0.0);
    const wb::Sym2 h0 = wb::huber_hess({0, 0}, eps);
    EXPECT_NEAR(h0.xx, 3 / (2 * eps), 1e-12);
    EXPECT_NEAR(h0.yy, 3 / (2 * eps), 1e-12);
    EXPECT_EQ(h0.xy, 0.0);

    // Outside the ball: eigenvalues {0, 1/|v|}.
    const Vec2 v{3.0, 4.0};
    const wb::Sym2 h = wb::huber_hess(v, eps);
    Eigen::Matrix2d m;
    m << h.xx, h.xy, h.xy, h.yy;
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
    EXPECT_NEAR(ev[0], 0.0, 1e-15);
    EXPECT_NEAR(ev[1], 0.2, 1e-15);
}

TEST(Huber, SeamContinuity) {
    std::mt19937_64 rng(5);
    for (double eps : {1e-3, 1e-2, 1.0}) {
        for (int k = 0; k < 10; ++k) {
            const double th = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
            const Vec2 in{eps * (1 - 1e-12) * std::cos(th), eps * (1 - 1e-12) * std::sin(th)};
            const Vec2 out{eps * (1 + 1e-12) * std::cos(th), eps * (1 + 1e-12) * std::sin(th)};
            EXPECT_NEAR(wb::huber_value(in, eps), wb::huber_value(out, eps), 1e-8 * wb::huber_value(out, eps));
            const Vec2 gi = wb::huber_grad(in, eps), go = wb::huber_grad(out, eps);
            EXPECT_NEAR(gi[0], go[0], 1e-8);
            EXPECT_NEAR(gi[1], go[1], 1e-8);
            const Vec2 unit{std::cos(th), std::sin(th)};
            EXPECT_NEAR(go[0], unit[0], 1e-8);
            const wb::Sym2 hi = wb::huber_hess(in, eps), ho = wb::huber_hess(out, eps);
            const double scale = 1.0 / eps;
            EXPECT_NEAR(hi.xx, ho.xx, 1e-8 * scale);
            EXPECT_NEAR(hi.xy, ho.xy, 1e-8 * scale);
            EXPECT_NEAR(hi.yy, ho.yy, 1e-8 * scale);
        }
    }
}

TEST(Huber, MatchesFiniteDifferencesAndClosedForm) {
    std::mt19937_64 rng(11);
    for (double eps : {1e-3, 1e-2}) {
        for (int k = 0; k < 40; ++k) {
            const Vec2 v = random_vec(rng, k % 2 ? 3 * eps : 0.5);
            const double d = 1e-4 * eps;
            const Vec2 g = wb::huber_grad(v, eps);
            const wb::Sym2 h = wb::huber_hess(v, eps);
            const Eigen::Matrix2d ref = oracle::huber_hess_ref(v[0], v[1], eps);
            EXPECT_NEAR(h.xx, ref(0, 0), 1e-10 * ref.norm());
            EXPECT_NEAR(h.xy, ref(0, 1), 1e-10 * ref.norm());
            EXPECT_NEAR(h.yy, ref(1, 1), 1e-10 * ref.norm());
            for (int a = 0; a < 2; ++a) {
                Vec2 p = v, m = v;
                p[a] += d;
                m[a] -= d;
                const double fd = (wb::huber_value(p, eps) - wb::huber_value(m, eps)) / (2 * d);
                EXPECT_NEAR(g[a], fd, 1e-6 * std::max(1.0, std::abs(g[a])));
                const Vec2 gp = wb::huber_grad(p, eps), gm = wb::huber_grad(m, eps);
                const double hrow = 1.0 / eps;
                EXPECT_NEAR((a == 0 ? h.xx : h.xy), (gp[0] - gm[0]) / (2 * d), 1e-6 * hrow);
                EXPECT_NEAR((a == 0 ? h.xy : h.yy), (gp[1] - gm[1]) / (2 * d), 1e-6 * hrow);
            }
        }
    }
}

TEST(Huber, HessianEigenvaluesWithinBound) {
    std::mt19937_64 rng(3);
    const double eps = 1e-3;
    for (int k = 0; k < 200; ++k) {
        const Vec2 v = random_vec(rng, 2 * eps);
        const wb::Sym2 h = wb::huber_hess(v, eps);
        Eigen::Matrix2d m;
        m << h.xx, h.xy, h.xy, h.yy;
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
        EXPECT_GE(ev[0], -1e-9);
        EXPECT_LE(ev[1], 3 / (2 * eps) * (1 + 1e-12));
    }
    EXPECT_THROW(HuberParams(0.0), wb::InvalidArgument);
}

TEST(HuberTotal, Examples) {
    wb::GradField g(1, 1);
    EXPECT_EQ(wb::huber_total(g, 1e-3), 0.0);
    g.horizontal[0] = 1.0;
    EXPECT_NEAR(wb::huber_total(g, 1e-3), 0.999625, 1e-15);
    wb::GradField f(3, 4);
    for (std::size_t i = 0; i < 12; ++i) {
        f.horizontal[i] = 0.3;
        f.vertical[i] = -0.0004;
    }
    EXPECT_NEAR(wb::huber_total(f, 1e-3), 12 * wb::huber_value({0.3, -0.0004}, 1e-3), 1e-13);
}

TEST(TVProblem, ValueByComposition) {
    const Image y = oracle::random_image(6, 6, 1);
    const Image x = oracle::random_image(6, 6, 2);
    auto op = gaussian_op(6);
    const TVProblem p(op, y, 0.3, HuberParams(1e-2));
    const double want = 0.5 * wb::squared_norm(op->apply(x) - y) + 0.3 * wb::huber_total(wb::grad_apply(x), 1e-2);
    EXPECT_NEAR(p.value(x), want, 1e-13 * want);

    const Image c(6, 6, 0.4);
    EXPECT_EQ(TVProblem(identity_op(6), c, 1.0, HuberParams()).value(c), 0.0);
    const TVProblem tiny(op, y, 1e-30, HuberParams());
    EXPECT_NEAR(tiny.value(x), 0.5 * wb::squared_norm(op->apply(x) - y), 1e-12);
}

TEST(TVProblem, GradientMatchesFiniteDifferences) {
    std::uint64_t seed = 1;
    for (double lambda : {1e-3, 1e-1, 10.0}) {
        for (double eps : {1e-3, 1e-2}) {
            for (bool smooth : {false, true}) {
                const Image y = oracle::random_image(12, 12, seed++);
                // Smooth points keep most pixel gradients inside the Huber ball.
                Image x = smooth ? Image(12, 12, 0.5) + oracle::random_image(12, 12, seed++, -eps, eps)
                                 : oracle::random_image(12, 12, seed++);
                const TVProblem p(gaussian_op(12), y, lambda, HuberParams(eps));
                const Image g = p.gradient(x);
                Image fd(12, 12);
                const double h = 1e-3 * eps;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    Image e(12, 12);
                    e[i] = 1.0;
                    fd[i] = oracle::central_diff([&](const Image& z) { return p.value(z); }, x, e, h);
                }
                EXPECT_LT(oracle::rel_err(g, fd), 1e-5) << "lambda " << lambda << " eps " << eps;
            }
        }
    }
}

TEST(TVProblem, HessianVecMatchesFiniteDifferencesAndDenseAssembly) {
    std::uint64_t seed = 50;
    for (double lambda : {1e-3, 1e-1, 10.0}) {
        for (double eps : {1e-3, 1e-2}) {
            const Image y = oracle::random_image(12, 12, seed++);
            const Image x = Image(12, 12, 0.5) + oracle::random_image(12, 12, seed++, -2 * eps, 2 * eps);
            const Image u = oracle::random_image(12, 12, seed++, -1, 1);
            const TVProblem p(gaussian_op(12), y, lambda, HuberParams(eps));
            const Image hv = p.hessian_vec(x, u);
            const double d = 1e-4 * eps;
            const Image fd = (1.0 / (2 * d)) * (p.gradient(x + d * u) - p.gradient(x - d * u));
            EXPECT_LT(oracle::rel_err(hv, fd), 1e-4);

            const Eigen::MatrixXd dense = oracle::dense_hessian(p.op().kernel(), x, lambda, eps);
            EXPECT_LT(oracle::rel_err(hv, oracle::to_image(dense * oracle::to_vec(u), 12, 12)), 1e-11);
            const wb::HessianAt at(p, x);
            EXPECT_LT(oracle::rel_err(at.apply(u), hv), 1e-13);
            const Image diag = at.diagonal();
            for (std::size_t i = 0; i < diag.size(); ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                EXPECT_NEAR(diag[i], dense(ii, ii), 1e-10 * std::abs(dense(ii, ii)));
            }
        }
    }
}

TEST(TVProblem, HessianVecEdgeCases) {
    const Image y = oracle::random_image(8, 8, 1);
    const Image x = oracle::random_image(8, 8, 2);
    auto op = gaussian_op(8);
    const TVProblem p(op, y, 0.5, HuberParams());
    EXPECT_EQ(p.hessian_vec(x, Image(8, 8)), Image(8, 8, 0.0));
    const Image u = oracle::random_image(8, 8, 3);
    const TVProblem tiny(op, y, 1e-30, HuberParams());
    EXPECT_LT(oracle::rel_err(tiny.hessian_vec(x, u), op->normal(u)), 1e-12);
}

TEST(TVProblem, GradientIsAffineInLambda) {
    const Image y = oracle::random_image(12, 12, 1);
    const Image x = oracle::random_image(12, 12, 2);
    const TVProblem p1(gaussian_op(12), y, 0.2, HuberParams());
    const TVProblem p2 = p1.with_lambda(0.7);
    const Image dg = p1.dgrad_dlambda(x);
    EXPECT_LT(oracle::rel_err(p2.gradient(x) - p1.gradient(x), 0.5 * dg), 1e-10);
    const Image want = wb::grad_adjoint([&] {
        wb::GradField g = wb::grad_apply(x), out(12, 12);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const Vec2 hg = wb::huber_grad({g.horizontal[i], g.vertical[i]}, 1e-3);
            out.horizontal[i] = hg[0];
            out.vertical[i] = hg[1];
        }
        return out;
    }());
    EXPECT_LT(oracle::rel_err(dg, want), 1e-13);
    EXPECT_EQ(p1.dgrad_dlambda(Image(12, 12, 0.3)), Image(12, 12, 0.0));
}

TEST(TVProblem, ZeroGradientAtTrivialMinimizer) {
    const Image c(5, 5, 0.25);
    const TVProblem p(identity_op(5), c, 2.0, HuberParams());
    EXPECT_LT(wb::norm2(p.gradient(c)), 1e-15);
}

TEST(TVProblem, LipschitzBound) {
    const TVProblem p(identity_op(4), Image(4, 4), 1.0, HuberParams(1e-3));
    EXPECT_NEAR(p.lipschitz_bound(), 12001.0, 1e-9);
    EXPECT_NEAR(p.with_lambda(1e-30).lipschitz_bound(), 1.0, 1e-12);

    std::uint64_t seed = 7;
    for (int k = 0; k < 6; ++k) {
        const double lambda = k % 2 ? 0.1 : 3.0;
        const Image x = Image(8, 8, 0.5) + oracle::random_image(8, 8, seed++, -1e-3, 1e-3);
        const TVProblem q(gaussian_op(8), oracle::random_image(8, 8, seed++), lambda, HuberParams(1e-3));
        const wb::HessianAt at(q, x);
        const double top = oracle::power_iteration([&](const Image& v) { return at.apply(v); }, 8, 8, seed++);
        EXPECT_LE(top, q.lipschitz_bound());
    }
}

TEST(TVProblem, Validation) {
    const Image y(4, 4);
    EXPECT_THROW(TVProblem(identity_op(4), y, 0.0, HuberParams()), wb::InvalidArgument);
    EXPECT_THROW(TVProblem(identity_op(4), y, -1.0, HuberParams()), wb::InvalidArgument);
    EXPECT_THROW(TVProblem(nullptr, y, 1.0, HuberParams()), wb::InvalidArgument);
    const TVProblem p(identity_op(4), y, 1.0, HuberParams());
    EXPECT_THROW(p.value(Image(3, 4)), wb::DimensionMismatch);
    EXPECT_THROW(p.with_lambda(std::nan("")), wb::InvalidArgument);
}
