#pragma once

#include <cmath>

#include "fedloc/common.hpp"

namespace fedloc {

/// Smoothing and proximal-operator kernels.
///
/// Conventions used throughout:
///  - prox(v; lambda) minimizes  f(x) + (1/(2*lambda)) * ||x - v||^2
///  - exact floating-point ties at a case boundary take the first-listed
///    case (the <= branch).

struct SmoothingParams {
    double mu_envelope;  // Moreau parameter for the subtracted residual
    double mu_tv;        // smoothing parameter for the consensus l1 term

    SmoothingParams(double mu_envelope_, double mu_tv_)
        : mu_envelope(mu_envelope_), mu_tv(mu_tv_) {
        require(mu_envelope > 0.0 && mu_tv > 0.0, "smoothing parameters must be > 0");
    }
};

/// Huber-type upper bound on |z|: |z| outside the mu-band, quadratic
/// z^2/(2 mu) + mu/2 inside. C1 everywhere; gap to |z| is at most mu/2.
inline double smooth_abs(double z, double mu) {
    require(mu > 0.0, "mu must be > 0");
    require(std::isfinite(z), "z must be finite");
    const double az = std::abs(z);
    if (az >= mu) return az;
    return z * z / (2.0 * mu) + mu / 2.0;
}

/// Componentwise sum of smooth_abs; smooth upper bound on the l1 norm.
inline double smooth_l1(const Vec& v, double mu) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) sum += smooth_abs(v[i], mu);
    return sum;
}

/// Moreau envelope of the range residual ||x-a|| - d: a smooth lower bound
/// with gap at most mu/2, quadratic within distance mu of the anchor.
inline double moreau_residual(const Vec& x, const Vec& anchor, double range, double mu) {
    require(mu > 0.0, "mu must be > 0");
    require_finite(x, "x");
    require_finite(anchor, "anchor");
    const double r = (x - anchor).norm();
    if (r <= mu) return r * r / (2.0 * mu) - range;
    return r - mu / 2.0 - range;
}

/// Proximal operator of the range hinge 2*max(0, ||.-a|| - d):
/// identity inside the measurement ball, projection onto the sphere in the
/// transition band, and a fixed 2*lambda radial pull beyond it.
inline Vec prox_range_hinge(const Vec& p, const Vec& anchor, double range, double lambda) {
    require(lambda > 0.0, "lambda must be > 0");
    require(range >= 0.0, "range must be >= 0");
    require_finite(p, "p");
    require_finite(anchor, "anchor");
    const Vec diff = p - anchor;
    const double r = diff.norm();
    if (r <= range) return p;
    if (r <= range + 2.0 * lambda) return anchor + (range / r) * diff;
    return p - (2.0 * lambda / r) * diff;
}

/// Proximal operator of the negated Moreau envelope -moreau_residual(., mu).
/// Single-valued only for step < mu; a radial expansion away from the
/// anchor (factor mu/(mu-step) near it, additive push `step` farther out).
/// The measured range shifts the envelope by a constant only, so it does
/// not appear here.
inline Vec prox_neg_envelope(const Vec& c, const Vec& anchor, double mu, double step) {
    require(mu > 0.0, "mu must be > 0");
    require(step > 0.0, "step must be > 0");
    require_finite(c, "c");
    require_finite(anchor, "anchor");
    if (step >= mu)
        throw std::invalid_argument("prox_neg_envelope requires step < mu (single-valuedness)");
    const Vec diff = c - anchor;
    const double r = diff.norm();
    if (r <= mu - step) return anchor + (mu / (mu - step)) * diff;
    return anchor + ((r + step) / r) * diff;
}

/// Proximal operator of smooth_abs(., mu): linear shrinkage v*mu/(mu+lambda)
/// in the quadratic region, soft threshold by lambda outside. Continuous in
/// v; lambda = 0 degenerates to the identity (zero-coupling limit).
inline double prox_smooth_abs(double v, double lambda, double mu) {
    require(lambda >= 0.0, "lambda must be >= 0");
    require(mu > 0.0, "mu must be > 0");
    require(std::isfinite(v), "v must be finite");
    if (std::abs(v) <= mu + lambda) return v * mu / (mu + lambda);
    return v - lambda * (v > 0.0 ? 1.0 : -1.0);
}

}  // namespace fedloc
