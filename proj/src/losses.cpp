#include "whitebilevel/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "whitebilevel/error.hpp"

namespace wb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double checked_energy(const Image& r) {
    const double energy = squared_norm(r);
    if (energy < kDegenerateResidual) {
        throw DegenerateResidual("whiteness loss is undefined for a zero residual");
    }
    return energy;
}

void validate(const LossKind& kind, const Image& y) {
    if (const auto* mse = std::get_if<MseLoss>(&kind)) {
        require_same_shape(mse->ground_truth, y, "MSE ground truth");
    } else if (const auto* gauss = std::get_if<GaussLoss>(&kind)) {
        if (!(gauss->sigma > 0.0)) throw InvalidArgument("Gaussianity loss needs sigma > 0");
    }
}

}  // namespace

std::string_view to_string(LossTag tag) {
    switch (tag) {
        case LossTag::Mse: return "mse";
        case LossTag::Gauss: return "gauss";
        case LossTag::White: return "white";
    }
    return "unknown";
}

LossTag parse_loss_tag(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "mse") return LossTag::Mse;
    if (lower == "gauss") return LossTag::Gauss;
    if (lower == "white") return LossTag::White;
    throw ConfigError("unknown loss '" + std::string(name) + "' (expected mse, gauss or white)");
}

LossTag tag_of(const LossKind& kind) {
    return std::visit(Overloaded{[](const MseLoss&) { return LossTag::Mse; },
                                 [](const GaussLoss&) { return LossTag::Gauss; },
                                 [](const WhiteLoss&) { return LossTag::White; }},
                      kind);
}

Image residual(const Image& x, const ConvOperator& op, const Image& y) {
    Image r = op.apply(x);
    require_same_shape(r, y, "residual");
    r -= y;
    return r;
}

RhoVector rho(const LossKind& kind, const Image& x, const ConvOperator& op, const Image& y) {
    validate(kind, y);
    RhoVector out;
    out.tag = tag_of(kind);
    std::visit(Overloaded{[&](const MseLoss& mse) {
                              Image d = x;
                              d -= mse.ground_truth;
                              out.values = d.samples();
                          },
                          [&](const GaussLoss& gauss) {
                              const Image r = residual(x, op, y);
                              const double m = static_cast<double>(r.size());
                              out.values = {squared_norm(r) - m * gauss.sigma * gauss.sigma};
                          },
                          [&](const WhiteLoss&) {
                              const Image r = residual(x, op, y);
                              const double energy = checked_energy(r);
                              Image corr = cross_correlate(r, r);
                              corr *= 1.0 / energy;
                              out.values = corr.samples();
                          }},
               kind);
    return out;
}

double q_value(const RhoVector& rho) {
    double s = 0.0;
    for (double v : rho.values) s += v * v;
    return 0.5 * s;
}

std::vector<double> rho_jacobian_beta(const LossKind& kind, const Image& x_star, const Image& dxdbeta,
                                      const ConvOperator& op, const Image& y) {
    validate(kind, y);
    require_same_shape(x_star, dxdbeta, "implicit derivative");
    return std::visit(
        Overloaded{[&](const MseLoss&) { return dxdbeta.samples(); },
                   [&](const GaussLoss&) {
                       const Image r = residual(x_star, op, y);
                       const Image delta = op.apply(dxdbeta);
                       return std::vector<double>{2.0 * dot(r, delta)};
                   },
                   [&](const WhiteLoss&) {
                       // Quotient rule on (r * r) / ||r||^2 with dr/dbeta = A dx/dbeta.
                       const Image r = residual(x_star, op, y);
                       const Image delta = op.apply(dxdbeta);
                       const double energy = checked_energy(r);
                       const double coupling = 2.0 * dot(r, delta) / (energy * energy);
                       Image jac = cross_correlate(delta, r);
                       jac += cross_correlate(r, delta);
                       jac *= 1.0 / energy;
                       jac.axpy(-coupling, cross_correlate(r, r));
                       return jac.samples();
                   }},
        kind);
}

}  // namespace wb
