#pragma once

#include <cassert>
#include <cmath>
#include <vector>

#include "fedloc/client.hpp"
#include "fedloc/common.hpp"

namespace fedloc {

/// Freshest per-client record held by the server. Only the global-consensus
/// block (q, its dual, the penalty, the local counter) is ever stored.
struct ClientSnapshot {
    Vec q;
    Vec dual_wq;
    double consensus_penalty = 0.0;
    long k_l_w = 0;
    long last_global_round_seen = 0;
    bool reported = false;
};

/// Global aggregation state. `ingest` may run concurrently for distinct
/// clients (snapshot replacement is per-client); `update_w` needs exclusive
/// access to the whole table — the pause contract the orchestrator enforces.
class ServerState {
public:
    ServerState(int num_clients, int dim, double d_constant)
        : d_(d_constant), w_(Vec::Zero(dim)), snapshots_(num_clients) {
        require(num_clients >= 1, "need at least one client");
        require(d_constant > 0.0, "schedule constant d must be > 0");
        for (auto& s : snapshots_) {
            s.q = Vec::Zero(dim);
            s.dual_wq = Vec::Zero(dim);
        }
    }

    /// Store a fresh snapshot; messages at or behind the stored local
    /// counter are dropped (counted, not an error).
    bool ingest(int client_id, const ClientOutbox& msg) {
        require(client_id >= 0 && client_id < static_cast<int>(snapshots_.size()),
                "client_id out of range");
        ClientSnapshot& s = snapshots_[client_id];
        if (s.reported && msg.k_l <= s.k_l_w) {
            ++stale_drops_;
            return false;
        }
        s.q = msg.q;
        s.dual_wq = msg.dual_wq;
        s.consensus_penalty = msg.consensus_penalty;
        s.k_l_w = msg.k_l;
        s.last_global_round_seen = k_w_;
        s.reported = true;
        return true;
    }

    bool all_reported() const {
        for (const auto& s : snapshots_)
            if (!s.reported) return false;
        return true;
    }

    /// Aggregate the stored snapshots into a new w. The penalty entering the
    /// weights is recomputed from the snapshot counter (d*sqrt(k_l_w + 1))
    /// rather than taken from the message; the transmitted value is only
    /// cross-checked.
    const Vec& update_w() {
        if (!all_reported())
            throw NotReadyError("update_w before every client has reported");
        Vec numerator = Vec::Zero(w_.size());
        double denominator = 0.0;
        for (const auto& s : snapshots_) {
            assert(std::abs(s.consensus_penalty -
                            d_ * std::sqrt(static_cast<double>(s.k_l_w))) <
                   1e-9 * (1.0 + s.consensus_penalty));
            const double sigma_next = d_ * std::sqrt(static_cast<double>(s.k_l_w + 1));
            numerator += sigma_next * s.q - s.dual_wq;
            denominator += sigma_next;
        }
        w_ = numerator / denominator;
        ++k_w_;
        return w_;
    }

    ServerBroadcast broadcast() const { return ServerBroadcast{k_w_, w_}; }

    const Vec& w() const { return w_; }
    long k_w() const { return k_w_; }
    long stale_drops() const { return stale_drops_; }
    const std::vector<ClientSnapshot>& snapshots() const { return snapshots_; }

private:
    double d_;
    Vec w_;
    std::vector<ClientSnapshot> snapshots_;
    long k_w_ = 0;
    long stale_drops_ = 0;
};

}  // namespace fedloc
