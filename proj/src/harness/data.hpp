#pragma once

#include <string>

#include "whitebilevel/harness.hpp"
#include "whitebilevel/operators.hpp"

namespace wb::harness::detail {

struct Observation {
    Image y;
    Kernel kernel;
};

/// Ground truth from the configured source (input file or synthetic set).
Image load_ground_truth_source(const ExperimentConfig& cfg, const std::string& image);
const KernelSpec& kernel_spec(const ExperimentConfig& cfg, const std::string& name);

/// y and kernel of a degraded instance. Throws MissingSideData when absent.
Observation load_observation(const Layout& layout, const Instance& inst);
/// Degraded-data copy of the ground truth. Throws MissingSideData when absent.
Image load_ground_truth(const Layout& layout, const std::string& image);

}  // namespace wb::harness::detail
