#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedloc/client.hpp"
#include "fedloc/common.hpp"
#include "fedloc/diagnostics.hpp"
#include "fedloc/model.hpp"
#include "fedloc/rng.hpp"
#include "fedloc/server.hpp"

namespace fedloc {

enum class AsyncMode { synchronous, fixed_ratio, heterogeneous };

inline std::string to_string(AsyncMode m) {
    switch (m) {
        case AsyncMode::synchronous: return "synchronous";
        case AsyncMode::fixed_ratio: return "fixed_ratio";
        case AsyncMode::heterogeneous: return "heterogeneous";
    }
    throw std::invalid_argument("unknown async mode");
}

inline AsyncMode async_mode_from_string(const std::string& s) {
    if (s == "synchronous") return AsyncMode::synchronous;
    if (s == "fixed_ratio") return AsyncMode::fixed_ratio;
    if (s == "heterogeneous") return AsyncMode::heterogeneous;
    throw std::invalid_argument("unknown async mode: " + s);
}

/// How client and server steps interleave in the simulated timeline.
///
/// All three modes spend the same local budget, num_clients *
/// local_per_global client steps, between consecutive server steps; they
/// differ in who takes them. heterogeneous samples the stepping client by
/// speed_weights, so slow clients fall behind; the fairness deadline k_a
/// bounds how far (no client goes k_a server rounds without stepping).
struct AsyncProfile {
    AsyncMode mode = AsyncMode::synchronous;
    int local_per_global = 3;
    int k_a = 10;
    std::uint64_t rng_seed = 0;                // heterogeneous sampling only
    std::vector<double> speed_weights;         // empty = equal weights

    void validate(int num_clients) const {
        require(num_clients >= 1, "need at least one client");
        require(local_per_global >= 1, "local_per_global must be >= 1");
        require(k_a >= 1, "k_a must be >= 1");
        if (!speed_weights.empty()) {
            require(static_cast<int>(speed_weights.size()) == num_clients,
                    "speed_weights size must match the client count");
            for (double v : speed_weights)
                require(v > 0.0, "speed_weights must be positive");
        }
    }
};

struct Event {
    enum class Kind { client_step, global_step };
    Kind kind = Kind::client_step;
    int client_id = -1;   // -1 for global steps
    long k_l = -1;        // client's local count after the step; -1 for global
    long k_w = 0;         // server rounds completed after this event
};

using EventTrace = std::vector<Event>;

inline void write_trace(const EventTrace& trace, std::ostream& out) {
    out << "event_type,client_id,k_l,k_w\n";
    for (const Event& e : trace) {
        out << (e.kind == Event::Kind::client_step ? "client" : "global") << ','
            << e.client_id << ',' << e.k_l << ',' << e.k_w << '\n';
    }
}

/// Decides the next simulation event. Counters can be rebuilt from an
/// arbitrary prefix of events via observe(), so a policy can be resumed
/// against a recorded trace; only the heterogeneous sampling stream is
/// owned by the live policy.
class StepPolicy {
  public:
    StepPolicy(const AsyncProfile& profile, int num_clients)
        : profile_(profile),
          num_clients_(num_clients),
          rng_(profile.rng_seed),
          stale_(static_cast<std::size_t>(num_clients), 0),
          stepped_since_global_(static_cast<std::size_t>(num_clients), false) {
        profile.validate(num_clients);
        cumulative_weights_.resize(static_cast<std::size_t>(num_clients));
        double acc = 0.0;
        for (int i = 0; i < num_clients; ++i) {
            acc += profile.speed_weights.empty()
                       ? 1.0
                       : profile.speed_weights[static_cast<std::size_t>(i)];
            cumulative_weights_[static_cast<std::size_t>(i)] = acc;
        }
    }

    /// Fold one already-executed event into the counters.
    void observe(const Event& e) {
        if (e.kind == Event::Kind::client_step) {
            require(e.client_id >= 0 && e.client_id < num_clients_,
                    "event names an unknown client");
            const auto id = static_cast<std::size_t>(e.client_id);
            stale_[id] = 0;
            stepped_since_global_[id] = true;
            ++window_steps_;
        } else {
            for (long& s : stale_) ++s;
            std::fill(stepped_since_global_.begin(), stepped_since_global_.end(), false);
            window_steps_ = 0;
        }
    }

    /// Choose the next event and commit it to the counters. The k_l/k_w
    /// fields are left for the executor to fill in.
    Event next() {
        Event e;
        const long budget =
            static_cast<long>(num_clients_) * profile_.local_per_global;
        if (window_steps_ < budget) {
            e.kind = Event::Kind::client_step;
            e.client_id = pick_client();
        } else {
            const int overdue = overdue_client();
            if (overdue >= 0) {
                e.kind = Event::Kind::client_step;
                e.client_id = overdue;
            } else {
                e.kind = Event::Kind::global_step;
            }
        }
        observe(e);
        return e;
    }

    long stale(int client_id) const {
        return stale_[static_cast<std::size_t>(client_id)];
    }

  private:
    int pick_client() {
        switch (profile_.mode) {
            case AsyncMode::synchronous:
                // Round-robin passes: 0,1,...,L-1 repeated local_per_global times.
                return static_cast<int>(window_steps_ % num_clients_);
            case AsyncMode::fixed_ratio:
                // Each client runs its whole local batch before the next one.
                return static_cast<int>(window_steps_ / profile_.local_per_global);
            case AsyncMode::heterogeneous: {
                const double total = cumulative_weights_.back();
                const double u = rng_.uniform(0.0, total);
                const auto it = std::upper_bound(cumulative_weights_.begin(),
                                                 cumulative_weights_.end(), u);
                const auto idx = std::min<std::size_t>(
                    static_cast<std::size_t>(it - cumulative_weights_.begin()),
                    cumulative_weights_.size() - 1);
                return static_cast<int>(idx);
            }
        }
        throw std::logic_error("unreachable");
    }

    /// Lowest client id that would exceed the staleness deadline if the
    /// next global step ran now, or -1 if none.
    int overdue_client() const {
        for (int id = 0; id < num_clients_; ++id) {
            const auto i = static_cast<std::size_t>(id);
            if (!stepped_since_global_[i] && stale_[i] >= profile_.k_a - 1)
                return id;
        }
        return -1;
    }

    AsyncProfile profile_;
    int num_clients_;
    Rng rng_;
    long window_steps_ = 0;
    std::vector<long> stale_;
    std::vector<bool> stepped_since_global_;
    std::vector<double> cumulative_weights_;
};

/// Rebuild policy counters from a recorded prefix and return the event the
/// policy would emit next. Heterogeneous sampling resumes from the profile
/// seed, so this is exact for the deterministic modes and for forced or
/// global decisions in any mode.
inline Event step_policy(const AsyncProfile& profile, int num_clients,
                         const EventTrace& history) {
    StepPolicy policy(profile, num_clients);
    for (const Event& e : history) policy.observe(e);
    return policy.next();
}

/// Trace audit: no client may span k_a consecutive global steps without a
/// local step. Returns the first violating event index, or -1 if clean.
inline long fairness_violation(const EventTrace& trace, int num_clients, int k_a) {
    std::vector<long> stale(static_cast<std::size_t>(num_clients), 0);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Event& e = trace[i];
        if (e.kind == Event::Kind::client_step) {
            stale[static_cast<std::size_t>(e.client_id)] = 0;
        } else {
            for (long& s : stale)
                if (++s >= k_a) return static_cast<long>(i);
        }
    }
    return -1;
}

/// Trace audit: every client step must run against the latest broadcast
/// (its k_w equals the k_w of the most recent preceding global step), and
/// local counters must increase by exactly one per client step. Returns
/// the first violating event index, or -1 if clean.
inline long pause_violation(const EventTrace& trace, int num_clients) {
    long current_k_w = 0;
    std::vector<long> k_l(static_cast<std::size_t>(num_clients), 0);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Event& e = trace[i];
        if (e.kind == Event::Kind::global_step) {
            if (e.k_w < current_k_w) return static_cast<long>(i);
            current_k_w = e.k_w;
        } else {
            if (e.k_w != current_k_w) return static_cast<long>(i);
            if (e.k_l != ++k_l[static_cast<std::size_t>(e.client_id)])
                return static_cast<long>(i);
        }
    }
    return -1;
}

/// Per-server-round progress snapshot, recorded after each w update.
struct RoundStats {
    long round = 0;          // k_w after the update
    double rmse_local = 0.0;   // rmse of client estimates x_l vs the source
    double rmse_global = 0.0;  // ||w - source||
    ResidualReport residuals;
};

struct RunResult {
    std::string algorithm;
    std::uint64_t seed = 0;
    Vec w;
    std::vector<Vec> estimates;   // final per-client x_l
    std::vector<RoundStats> rounds;
    EventTrace trace;
    long stale_drops = 0;
};

inline constexpr double kDivergenceNorm = 1e9;

/// Run the federated consensus solver on one network. Deterministic given
/// (net, params, profile): repeated calls produce bit-identical results.
/// Throws DivergenceError if any iterate leaves the trust region.
inline RunResult run_consensus_solver(const SensorNetwork& net, const Hyperparams& params,
                                      const AsyncProfile& profile) {
    net.validate();
    profile.validate(static_cast<int>(net.size()));
    {
        const HyperparamReport hp = validate_hyperparams(params);
        if (!hp.ok) {
            std::string msg = "hyperparameters violate the convergence conditions:";
            for (const std::string& v : hp.violations) msg += " " + v + ";";
            throw std::invalid_argument(msg);
        }
    }

    const int num_clients = static_cast<int>(net.size());
    const auto dim = static_cast<int>(net.dim());

    std::vector<ClientState> clients;
    clients.reserve(static_cast<std::size_t>(num_clients));
    for (int id = 0; id < num_clients; ++id)
        clients.emplace_back(id, net.anchors[static_cast<std::size_t>(id)],
                             net.measurements[static_cast<std::size_t>(id)], params);
    ServerState server(num_clients, dim, params.d);
    StepPolicy policy(profile, num_clients);

    RunResult result;
    result.algorithm = "fsmdm";
    result.seed = profile.rng_seed;
    result.rounds.reserve(static_cast<std::size_t>(params.k_global_max));

    // Forced catch-up steps can extend a window by at most one extra pass
    // over the clients, and no-op globals can add up to k_a warm-up windows;
    // anything beyond this bound is a policy bug.
    const long max_events =
        (params.k_global_max + profile.k_a + 2) *
        (static_cast<long>(num_clients) * (profile.local_per_global + 1) + 1);

    while (server.k_w() < params.k_global_max) {
        if (static_cast<long>(result.trace.size()) >= max_events)
            throw std::logic_error("step policy exceeded its event budget");
        Event e = policy.next();
        if (e.kind == Event::Kind::client_step) {
            ClientState& cl = clients[static_cast<std::size_t>(e.client_id)];
            const ClientOutbox out = cl.local_iteration(server.w());
            if (!cl.finite() || cl.x.norm() > kDivergenceNorm)
                throw DivergenceError("client " + std::to_string(e.client_id) +
                                          " iterate left the trust region",
                                      static_cast<long>(result.trace.size()));
            server.ingest(e.client_id, out);
            e.k_l = cl.k_l;
            e.k_w = server.k_w();
        } else {
            // A global step before every client has reported is a no-op:
            // w and k_w stay put, so the round budget is not consumed.
            if (server.all_reported()) {
                server.update_w();
                std::vector<Vec> estimates;
                estimates.reserve(clients.size());
                for (const ClientState& cl : clients) estimates.push_back(cl.x);
                RoundStats stats;
                stats.round = server.k_w();
                stats.rmse_local = rmse(estimates, net.source);
                stats.rmse_global = (server.w() - net.source).norm();
                stats.residuals = kkt_residuals(clients, server.w());
                result.rounds.push_back(std::move(stats));
            }
            e.k_w = server.k_w();
        }
        result.trace.push_back(e);
    }

    result.w = server.w();
    result.estimates.reserve(clients.size());
    for (const ClientState& cl : clients) result.estimates.push_back(cl.x);
    result.stale_drops = server.stale_drops();
    return result;
}

}  // namespace fedloc
