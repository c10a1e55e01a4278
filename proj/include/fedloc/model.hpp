#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedloc/common.hpp"

namespace fedloc {

/// A single-source range-localization instance: anchors with known
/// positions, one hidden source, and one observed range per anchor.
///
/// `source` is ground truth kept for data generation and error metrics;
/// solver code must only touch `anchors` and `measurements`.
struct SensorNetwork {
    std::vector<Vec> anchors;
    std::vector<double> measurements;
    Vec source;

    // Generation metadata, carried through noise application and dump/load.
    double region_half_width = 0.0;
    std::uint64_t gen_seed = 0;

    std::size_t size() const { return anchors.size(); }
    int dim() const { return source.size() > 0 ? static_cast<int>(source.size())
                                               : (anchors.empty() ? 0 : static_cast<int>(anchors[0].size())); }

    void validate() const {
        require(!anchors.empty(), "network must contain at least one anchor");
        require(anchors.size() == measurements.size(),
                "anchors and measurements must have equal length");
        const auto n = anchors[0].size();
        for (const auto& a : anchors) {
            require(a.size() == n, "all anchors must share one dimension");
            require_finite(a, "anchor");
        }
        for (double d : measurements)
            require(std::isfinite(d) && d >= 0.0, "measurements must be finite and >= 0");
    }
};

/// Solver hyperparameters: the four schedule constants, the consensus
/// weight, and the iteration/asynchrony budgets.
///
/// Schedules per local iteration k: split penalty c*sqrt(k), envelope
/// parameter alpha/sqrt(k), consensus penalty d*sqrt(k), TV smoothing
/// beta/sqrt(k). Validate with diagnostics::validate_hyperparams before
/// running the solver.
struct Hyperparams {
    double c = 1.0 / (100.0 * std::sqrt(2.0));
    double d = std::sqrt(3.0) / std::sqrt(500.0);
    double alpha = 100.0 * std::sqrt(3.0);
    double beta = 100.0 * std::sqrt(3.0);
    double omega = 1.0;  // total-variation consensus weight

    int k_local_per_global = 3;
    long k_global_max = 2000;
    int k_a = 10;  // fairness bound: every client steps within any k_a global rounds
};

/// Convex hinge component of the per-anchor loss: 2*max(0, ||x-a|| - d).
inline double range_hinge(const Vec& x, const Vec& anchor, double range) {
    require(range >= 0.0, "range must be >= 0");
    require_finite(x, "x");
    require_finite(anchor, "anchor");
    return 2.0 * std::max(0.0, (x - anchor).norm() - range);
}

/// Signed range residual ||x-a|| - d; the convex function whose negation
/// appears in the loss split. range_hinge - range_residual == |residual|.
inline double range_residual(const Vec& x, const Vec& anchor, double range) {
    require(range >= 0.0, "range must be >= 0");
    require_finite(x, "x");
    require_finite(anchor, "anchor");
    return (x - anchor).norm() - range;
}

/// Robust localization objective: mean absolute range residual over the
/// network.
inline double l1_objective(const Vec& x, const SensorNetwork& net) {
    net.validate();
    require_finite(x, "x");
    double sum = 0.0;
    for (std::size_t l = 0; l < net.size(); ++l)
        sum += std::abs((x - net.anchors[l]).norm() - net.measurements[l]);
    return sum / static_cast<double>(net.size());
}

}  // namespace fedloc
