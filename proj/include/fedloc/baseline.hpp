#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fedloc/common.hpp"
#include "fedloc/diagnostics.hpp"
#include "fedloc/model.hpp"
#include "fedloc/orchestrator.hpp"

namespace fedloc {

/// Federated subgradient baseline on the raw l1 objective: every round
/// each client reports a subgradient of its loss at the shared estimate
/// and the server averages them with a diminishing step. Documented
/// stand-in for the distributed subgradient methods this solver is
/// compared against.
struct SubgradConfig {
    double eta0 = 2.0;  // frozen from the clean-data grid {0.1, 0.5, 1, 2}
    enum class Decay { one_over_sqrt_k };
    Decay decay = Decay::one_over_sqrt_k;
    long iterations = 2000;

    void validate() const {
        require(eta0 >= 0.0, "eta0 must be >= 0");
        require(iterations >= 1, "iterations must be >= 1");
    }

    double step(long k) const { return eta0 / std::sqrt(static_cast<double>(k)); }
};

/// Subgradient of |  ||w-a|| - d  |: the unit radial vector, outward when
/// the estimate is outside the measured sphere, inward when inside, and 0
/// at either kink (a valid subgradient there).
inline Vec range_loss_subgradient(const Vec& w, const Vec& anchor, double range) {
    require(range >= 0.0, "range must be >= 0");
    const Vec diff = w - anchor;
    const double r = diff.norm();
    if (r == 0.0 || r == range) return Vec::Zero(w.size());
    return (r > range ? 1.0 : -1.0) / r * diff;
}

/// Run the baseline from a zero initial estimate. Deterministic given
/// (net, cfg); the seed is recorded for bookkeeping only.
inline RunResult run_subgradient_baseline(const SensorNetwork& net, const SubgradConfig& cfg,
                                          std::uint64_t seed) {
    net.validate();
    cfg.validate();
    const auto num_clients = static_cast<double>(net.size());
    const auto dim = net.dim();

    RunResult result;
    result.algorithm = "dsrl";
    result.seed = seed;
    result.rounds.reserve(static_cast<std::size_t>(cfg.iterations));

    Vec w = Vec::Zero(dim);
    for (long k = 1; k <= cfg.iterations; ++k) {
        Vec direction = Vec::Zero(dim);
        for (std::size_t l = 0; l < net.size(); ++l)
            direction += range_loss_subgradient(w, net.anchors[l], net.measurements[l]);
        w -= cfg.step(k) / num_clients * direction;
        if (!w.allFinite() || w.norm() > kDivergenceNorm)
            throw DivergenceError("baseline estimate left the trust region", k);
        RoundStats stats;
        stats.round = k;
        stats.rmse_global = (w - net.source).norm();
        stats.rmse_local = stats.rmse_global;  // single shared estimate
        result.rounds.push_back(std::move(stats));
    }

    result.w = w;
    result.estimates.assign(net.size(), w);
    return result;
}

}  // namespace fedloc
