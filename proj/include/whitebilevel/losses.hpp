#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "whitebilevel/image.hpp"
#include "whitebilevel/operators.hpp"

namespace wb {

enum class LossTag { Mse, Gauss, White };

std::string_view to_string(LossTag tag);
/// Accepts "mse", "gauss", "white" (case-insensitive).
LossTag parse_loss_tag(std::string_view name);

/// Supervised: Q = 1/2 ||x - ground_truth||^2.
struct MseLoss {
    Image ground_truth;
};

/// Semi-supervised discrepancy: Q = 1/2 (||r||^2 - m sigma^2)^2.
struct GaussLoss {
    double sigma = 0.0;
};

/// Unsupervised whiteness: Q = 1/2 || (r * r) / ||r||^2 ||^2, '*' the
/// circular cross-correlation.
struct WhiteLoss {};

using LossKind = std::variant<MseLoss, GaussLoss, WhiteLoss>;

LossTag tag_of(const LossKind& kind);

/// Q = 1/2 ||values||^2.
struct RhoVector {
    std::vector<double> values;
    LossTag tag = LossTag::Mse;
};

/// Below this ||r||^2 the whiteness normalization is undefined.
inline constexpr double kDegenerateResidual = 1e-300;

/// r = A x - y
Image residual(const Image& x, const ConvOperator& op, const Image& y);

RhoVector rho(const LossKind& kind, const Image& x, const ConvOperator& op, const Image& y);

double q_value(const RhoVector& rho);

/// Directional derivative of rho along beta, given dx*/dbeta.
std::vector<double> rho_jacobian_beta(const LossKind& kind, const Image& x_star, const Image& dxdbeta,
                                      const ConvOperator& op, const Image& y);

}  // namespace wb
