#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fedloc/client.hpp"
#include "fedloc/common.hpp"
#include "fedloc/model.hpp"
#include "fedloc/smoothing.hpp"

namespace fedloc {

/// Consensus and stationarity residuals for a full solver state; all fields
/// are >= 0 and zero exactly at a fixed point of the iteration.
struct ResidualReport {
    double consensus_max = 0.0;     // max_l ||w - x_l||
    double dual_sum_norm = 0.0;     // ||sum_l dual_wq_l||
    double xz_gap_max = 0.0;        // max_l ||x_l - z_l||
    double xg_gap_max = 0.0;        // max_l ||x_l - g_l||
    double wq_gap_max = 0.0;        // max_l ||w - q_l||
    double stationarity_max = 0.0;  // max_l ||grad_l + dual_xg_l|| over smooth clients
    int kink_clients = 0;           // clients skipped: loss not differentiable at x_l
};

struct HyperparamReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Check the positivity and product constraints the convergence guarantee
/// needs: beta*d >= sqrt(80) and alpha*c >= sqrt(3/2). Comparisons allow a
/// 1e-12 relative slack so constants that meet a bound with equality in real
/// arithmetic are not rejected for a rounding ulp.
inline HyperparamReport validate_hyperparams(const Hyperparams& p) {
    HyperparamReport report;
    auto fail = [&](const std::string& msg) {
        report.ok = false;
        report.violations.push_back(msg);
    };
    if (!(p.c > 0.0)) fail("c must be > 0");
    if (!(p.d > 0.0)) fail("d must be > 0");
    if (!(p.alpha > 0.0)) fail("alpha must be > 0");
    if (!(p.beta > 0.0)) fail("beta must be > 0");
    if (!(p.omega > 0.0)) fail("omega must be > 0");
    if (p.k_local_per_global < 1) fail("k_local_per_global must be >= 1");
    if (p.k_global_max < 1) fail("k_global_max must be >= 1");
    if (p.k_a < 1) fail("k_a must be >= 1");
    const double slack = 1.0 - 1e-12;
    const double bd = p.beta * p.d;
    const double ac = p.alpha * p.c;
    if (!(bd >= std::sqrt(80.0) * slack))
        fail("beta*d = " + std::to_string(bd) + " < sqrt(80)");
    if (!(ac >= std::sqrt(1.5) * slack))
        fail("alpha*c = " + std::to_string(ac) + " < sqrt(3/2)");
    return report;
}

/// Evaluate the smoothed augmented Lagrangian of the consensus problem at
/// the clients' current iterates and schedules. Every client must have run
/// at least one schedule update (k_l >= 1).
inline double augmented_lagrangian(const std::vector<ClientState>& clients, const Vec& w,
                                   const Hyperparams& params) {
    require(!clients.empty(), "need at least one client");
    double total = 0.0;
    for (const ClientState& cl : clients) {
        require(cl.k_l >= 1, "augmented_lagrangian needs initialized schedules");
        const ScheduleValues& s = cl.schedule;
        total += range_hinge(cl.x, cl.anchor, cl.range);
        total -= moreau_residual(cl.z, cl.anchor, cl.range, s.envelope_mu);
        total += cl.dual_xz.dot(cl.x - cl.z);
        total += 0.5 * s.split_penalty * (cl.x - cl.z).squaredNorm();
        total += params.omega * smooth_l1(cl.g - cl.q, s.tv_mu);
        total += 0.5 * s.consensus_penalty * (cl.x - cl.g).squaredNorm();
        total += 0.5 * s.consensus_penalty * (w - cl.q).squaredNorm();
        total += cl.dual_xg.dot(cl.x - cl.g);
        total += cl.dual_wq.dot(w - cl.q);
    }
    return total;
}

/// Gradient of the per-client loss |  ||x-a|| - d  | where it is
/// differentiable; call only away from the kinks (||x-a|| near 0 or d).
inline Vec local_loss_gradient(const Vec& x, const Vec& anchor, double range) {
    const Vec diff = x - anchor;
    const double r = diff.norm();
    return (r > range ? 1.0 : -1.0) / r * diff;
}

inline constexpr double kKinkTolerance = 1e-9;

inline bool at_loss_kink(const Vec& x, const Vec& anchor, double range) {
    const double r = (x - anchor).norm();
    return r <= kKinkTolerance || std::abs(r - range) <= kKinkTolerance;
}

/// Residuals of the stationarity conditions at the current state.
/// Stationarity is measured only where the local loss is differentiable;
/// kink-adjacent clients are counted in kink_clients instead of polluting
/// the max.
inline ResidualReport kkt_residuals(const std::vector<ClientState>& clients, const Vec& w) {
    ResidualReport r;
    Vec dual_sum = Vec::Zero(w.size());
    for (const ClientState& cl : clients) {
        r.consensus_max = std::max(r.consensus_max, (w - cl.x).norm());
        r.xz_gap_max = std::max(r.xz_gap_max, (cl.x - cl.z).norm());
        r.xg_gap_max = std::max(r.xg_gap_max, (cl.x - cl.g).norm());
        r.wq_gap_max = std::max(r.wq_gap_max, (w - cl.q).norm());
        dual_sum += cl.dual_wq;
        if (at_loss_kink(cl.x, cl.anchor, cl.range)) {
            ++r.kink_clients;
        } else {
            const Vec grad = local_loss_gradient(cl.x, cl.anchor, cl.range);
            r.stationarity_max = std::max(r.stationarity_max, (grad + cl.dual_xg).norm());
        }
    }
    r.dual_sum_norm = dual_sum.norm();
    return r;
}

/// Root-mean-square estimation error across client estimates.
inline double rmse(const std::vector<Vec>& estimates, const Vec& truth) {
    require(!estimates.empty(), "rmse of an empty estimate list");
    double sum = 0.0;
    for (const Vec& e : estimates) sum += (e - truth).squaredNorm();
    return std::sqrt(sum / static_cast<double>(estimates.size()));
}

}  // namespace fedloc
