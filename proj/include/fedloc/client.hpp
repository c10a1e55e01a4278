#pragma once

#include <cmath>
#include <utility>

#include "fedloc/common.hpp"
#include "fedloc/model.hpp"
#include "fedloc/smoothing.hpp"

namespace fedloc {

/// Per-iteration schedule: penalties grow as sqrt(k), smoothing parameters
/// shrink as 1/sqrt(k), so split_penalty*envelope_mu == c*alpha and
/// consensus_penalty*tv_mu == d*beta stay constant along the trajectory.
struct ScheduleValues {
    double split_penalty = 0.0;      // weight of the x-z coupling
    double consensus_penalty = 0.0;  // weight of the x-g and w-q couplings
    double envelope_mu = 0.0;        // Moreau parameter of the subtracted residual
    double tv_mu = 0.0;              // smoothing of the consensus l1 term
};

/// Snapshot a client sends to the server after each local iteration. Only
/// the global-consensus block crosses the boundary; raw measurements and
/// the remaining local state never leave the client.
struct ClientOutbox {
    int client_id = -1;
    long k_l = 0;
    Vec q;
    Vec dual_wq;
    double consensus_penalty = 0.0;
};

/// What the server pushes back to clients.
struct ServerBroadcast {
    long k_w = 0;
    Vec w;
};

/// One client's solver state. A local iteration runs
///   schedule -> x -> z -> dual(x-z) -> g,q (needs latest w) -> duals(x-g, w-q)
/// in that order; the instance must be owned by one logical worker at a
/// time, and `w` must be a consistent snapshot of the latest broadcast.
struct ClientState {
    int id = -1;
    Vec anchor;
    double range = 0.0;
    Hyperparams params;

    Vec x, z, g, q;
    Vec dual_xz, dual_xg, dual_wq;
    long k_l = 0;
    ScheduleValues schedule;

    ClientState() = default;

    ClientState(int id_, Vec anchor_, double range_, const Hyperparams& params_)
        : id(id_), anchor(std::move(anchor_)), range(range_), params(params_) {
        require(range >= 0.0, "range must be >= 0");
        require_finite(anchor, "anchor");
        const auto n = anchor.size();
        x = Vec::Zero(n);
        z = Vec::Zero(n);
        g = Vec::Zero(n);
        q = Vec::Zero(n);
        dual_xz = Vec::Zero(n);
        dual_xg = Vec::Zero(n);
        dual_wq = Vec::Zero(n);
    }

    /// Recompute the schedule for the current k_l (>= 1).
    const ScheduleValues& update_schedule() {
        require(k_l >= 1, "schedule is defined for k_l >= 1");
        const double sq = std::sqrt(static_cast<double>(k_l));
        schedule.split_penalty = params.c * sq;
        schedule.consensus_penalty = params.d * sq;
        schedule.envelope_mu = params.alpha / sq;
        schedule.tv_mu = params.beta / sq;
        return schedule;
    }

    /// x-block: proximal step of the range hinge around the weighted center
    /// of the z and g targets, shifted by the duals.
    const Vec& update_x() {
        const double upsilon = schedule.split_penalty + schedule.consensus_penalty;
        const Vec p = -(dual_xz + dual_xg - schedule.split_penalty * z -
                        schedule.consensus_penalty * g) /
                      upsilon;
        x = prox_range_hinge(p, anchor, range, 1.0 / upsilon);
        return x;
    }

    /// z-block: proximal step of the negated envelope at x + dual_xz/penalty.
    /// Single-valuedness needs split_penalty*envelope_mu > 1, i.e. c*alpha > 1;
    /// validate_hyperparams guarantees it up front.
    const Vec& update_z() {
        const Vec center = x + dual_xz / schedule.split_penalty;
        z = prox_neg_envelope(center, anchor, schedule.envelope_mu,
                              1.0 / schedule.split_penalty);
        return z;
    }

    /// Joint g/q-block: exact minimizer of the smoothed consensus coupling,
    /// reduced to a componentwise scalar prox on the disagreement v - u.
    std::pair<Vec, Vec> update_gq(const Vec& w) {
        const double sigma = schedule.consensus_penalty;
        const Vec u = x + dual_xg / sigma;
        const Vec v = w + dual_wq / sigma;
        const double lambda = 2.0 * params.omega / sigma;
        Vec e(u.size());
        for (Eigen::Index i = 0; i < e.size(); ++i)
            e[i] = prox_smooth_abs(v[i] - u[i], lambda, schedule.tv_mu);
        g = 0.5 * (u + v) - 0.5 * e;
        q = 0.5 * (u + v) + 0.5 * e;
        return {g, q};
    }

    /// Ascent step on the x-z coupling dual.
    void ascend_dual_xz() { dual_xz += schedule.split_penalty * (x - z); }

    /// Ascent steps on the consensus duals (after g/q).
    void ascend_consensus_duals(const Vec& w) {
        dual_xg += schedule.consensus_penalty * (x - g);
        dual_wq += schedule.consensus_penalty * (w - q);
    }

    /// All three dual ascent steps for the current iterate.
    void update_duals(const Vec& w) {
        ascend_dual_xz();
        ascend_consensus_duals(w);
    }

    /// One full local iteration against the given w snapshot. Increments
    /// k_l and returns the message for the server.
    ClientOutbox local_iteration(const Vec& w) {
        ++k_l;
        update_schedule();
        update_x();
        update_z();
        ascend_dual_xz();
        update_gq(w);
        ascend_consensus_duals(w);
        return ClientOutbox{id, k_l, q, dual_wq, schedule.consensus_penalty};
    }

    bool finite() const {
        return x.allFinite() && z.allFinite() && g.allFinite() && q.allFinite() &&
               dual_xz.allFinite() && dual_xg.allFinite() && dual_wq.allFinite();
    }
};

}  // namespace fedloc
