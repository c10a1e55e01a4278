#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fedloc {

using Vec = Eigen::VectorXd;

/// Thrown when solver state stops being finite; carries the index of the
/// offending event in the run's event trace.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t event_index)
        : std::runtime_error(what), event_index_(event_index) {}
    std::size_t event_index() const { return event_index_; }

private:
    std::size_t event_index_;
};

/// Thrown when an aggregation step runs before every client has reported.
class NotReadyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const Vec& v, const std::string& name) {
    if (!v.allFinite()) throw std::invalid_argument(name + " must be finite");
}

}  // namespace fedloc
