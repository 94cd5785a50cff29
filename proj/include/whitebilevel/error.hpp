#pragma once

#include <stdexcept>
#include <string>

namespace wb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The lower-level iteration produced a non-finite value.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// The whiteness normalization ||r||^2 vanished.
class DegenerateResidual : public Error {
public:
    using Error::Error;
};

/// J_rho^T J_rho is numerically zero; the upper-level loss is flat in beta.
class VanishingJacobian : public Error {
public:
    using Error::Error;
};

/// Conjugate gradients met a direction of non-positive curvature.
class NegativeCurvature : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A loss needs ground truth or a noise level that is not available.
class MissingSideData : public Error {
public:
    using Error::Error;
};

}  // namespace wb
