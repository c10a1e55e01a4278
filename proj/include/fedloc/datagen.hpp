#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedloc/common.hpp"
#include "fedloc/model.hpp"
#include "fedloc/rng.hpp"

namespace fedloc {

// Stream tags: geometry, corruption coin flips, and noise magnitudes draw
// from independently seeded generators, so sweeping a noise parameter
// holds the network geometry fixed within a trial.
inline constexpr std::uint64_t kGeometryStream = 0x67656f6d;
inline constexpr std::uint64_t kFlipStream = 0x666c6970;
inline constexpr std::uint64_t kNoiseStream = 0x6e6f6973;

struct NoiseModel {
    enum class Kind { clean, gaussian, outlier, cauchy };
    Kind kind = Kind::clean;
    double sigma = 0.0;             // gaussian
    double p = 0.0;                 // outlier replacement probability
    double lo = 0.0, hi = 0.0;      // outlier replacement interval
    double gamma = 0.0;             // cauchy scale

    static NoiseModel clean() { return NoiseModel{}; }
    static NoiseModel gaussian(double sigma) {
        require(sigma >= 0.0, "sigma must be >= 0");
        NoiseModel m;
        m.kind = Kind::gaussian;
        m.sigma = sigma;
        return m;
    }
    static NoiseModel outlier(double p, double lo, double hi) {
        require(p >= 0.0 && p <= 1.0, "p must be in [0,1]");
        require(lo >= 0.0 && hi >= lo, "need hi >= lo >= 0");
        NoiseModel m;
        m.kind = Kind::outlier;
        m.p = p;
        m.lo = lo;
        m.hi = hi;
        return m;
    }
    static NoiseModel cauchy(double gamma) {
        require(gamma > 0.0, "gamma must be > 0");
        NoiseModel m;
        m.kind = Kind::cauchy;
        m.gamma = gamma;
        return m;
    }
};

/// Anchors and source i.i.d. uniform on the centered cube of the given
/// half-width; measurements are exact anchor-source distances.
inline SensorNetwork generate_network(int num_sensors, double region_half_width, int dim,
                                      std::uint64_t seed) {
    require(num_sensors >= 1, "need at least one sensor");
    require(region_half_width > 0.0, "region_half_width must be > 0");
    require(dim >= 1, "dim must be >= 1");
    Rng rng(mix_seed(seed, kGeometryStream));
    const double h = region_half_width;
    auto draw_point = [&] {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-h, h);
        return v;
    };
    SensorNetwork net;
    net.region_half_width = h;
    net.gen_seed = seed;
    net.anchors.reserve(static_cast<std::size_t>(num_sensors));
    for (int l = 0; l < num_sensors; ++l) net.anchors.push_back(draw_point());
    net.source = draw_point();
    net.measurements.reserve(static_cast<std::size_t>(num_sensors));
    for (const Vec& a : net.anchors) net.measurements.push_back((net.source - a).norm());
    net.validate();
    return net;
}

/// Replace each measurement by a uniform(lo,hi) draw with probability p.
/// Coin flips and replacement values come from separate streams and are
/// drawn for every sensor, so raising p only adds corrupted sensors while
/// the surviving draws stay identical.
inline SensorNetwork apply_outliers(SensorNetwork net, double p, double lo, double hi,
                                    std::uint64_t seed) {
    net.validate();
    require(p >= 0.0 && p <= 1.0, "p must be in [0,1]");
    require(lo >= 0.0 && hi >= lo, "need hi >= lo >= 0");
    Rng flips(mix_seed(seed, kFlipStream));
    Rng values(mix_seed(seed, kNoiseStream));
    for (std::size_t l = 0; l < net.size(); ++l) {
        const double u = flips.uniform01();
        const double value = values.uniform(lo, hi);
        if (u < p) net.measurements[l] = value;
    }
    return net;
}

/// Add heavy-tailed noise to the true distances: d_l = max(0, ||x-a_l|| +
/// gamma * tan(pi*(U - 1/2))). Negative corrupted ranges are clipped to 0.
inline SensorNetwork apply_cauchy(SensorNetwork net, double gamma, std::uint64_t seed) {
    net.validate();
    require(gamma > 0.0, "gamma must be > 0");
    Rng noise(mix_seed(seed, kNoiseStream));
    for (std::size_t l = 0; l < net.size(); ++l) {
        const double truth = (net.source - net.anchors[l]).norm();
        net.measurements[l] = std::max(0.0, truth + noise.cauchy(gamma));
    }
    return net;
}

/// Add centered Gaussian noise to the true distances, clipped at 0.
inline SensorNetwork apply_gaussian(SensorNetwork net, double sigma, std::uint64_t seed) {
    net.validate();
    require(sigma >= 0.0, "sigma must be >= 0");
    Rng noise(mix_seed(seed, kNoiseStream));
    for (std::size_t l = 0; l < net.size(); ++l) {
        const double truth = (net.source - net.anchors[l]).norm();
        net.measurements[l] = std::max(0.0, truth + sigma * noise.normal());
    }
    return net;
}

inline SensorNetwork apply_noise(SensorNetwork net, const NoiseModel& model,
                                 std::uint64_t seed) {
    switch (model.kind) {
        case NoiseModel::Kind::clean: return net;
        case NoiseModel::Kind::gaussian: return apply_gaussian(std::move(net), model.sigma, seed);
        case NoiseModel::Kind::outlier:
            return apply_outliers(std::move(net), model.p, model.lo, model.hi, seed);
        case NoiseModel::Kind::cauchy: return apply_cauchy(std::move(net), model.gamma, seed);
    }
    throw std::invalid_argument("unknown noise model");
}

/// Self-describing text dump. The ground truth lives in its own section so
/// a consumer can strip it and run solvers blind.
inline void save_network(const SensorNetwork& net, std::ostream& out) {
    net.validate();
    out.precision(17);
    out << "sensor-network v1\n";
    out << "sensors " << net.size() << '\n';
    out << "dim " << net.dim() << '\n';
    out << "half_width " << net.region_half_width << '\n';
    out << "seed " << net.gen_seed << '\n';
    out << "anchors\n";
    for (std::size_t l = 0; l < net.size(); ++l) {
        const Vec& a = net.anchors[l];
        for (Eigen::Index i = 0; i < a.size(); ++i) out << a[i] << ' ';
        out << net.measurements[l] << '\n';
    }
    out << "ground_truth\n";
    for (Eigen::Index i = 0; i < net.source.size(); ++i)
        out << net.source[i] << (i + 1 < net.source.size() ? ' ' : '\n');
    out << "end\n";
}

inline void save_network(const SensorNetwork& net, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open " + path + " for writing");
    save_network(net, out);
    require(out.good(), "write to " + path + " failed");
}

inline SensorNetwork load_network(std::istream& in) {
    auto parse_fail = [](int line, const std::string& what) -> std::runtime_error {
        return std::runtime_error("network parse error at line " + std::to_string(line) +
                                  ": " + what);
    };
    int lineno = 0;
    std::string line;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) throw parse_fail(lineno + 1, "unexpected end of input");
        ++lineno;
        return line;
    };
    if (next_line() != "sensor-network v1") throw parse_fail(lineno, "bad magic header");

    SensorNetwork net;
    long sensors = 0;
    int dim = 0;
    {
        std::istringstream ss(next_line());
        std::string key;
        if (!(ss >> key >> sensors) || key != "sensors" || sensors < 1)
            throw parse_fail(lineno, "expected 'sensors <count>'");
    }
    {
        std::istringstream ss(next_line());
        std::string key;
        if (!(ss >> key >> dim) || key != "dim" || dim < 1)
            throw parse_fail(lineno, "expected 'dim <n>'");
    }
    {
        std::istringstream ss(next_line());
        std::string key;
        if (!(ss >> key >> net.region_half_width) || key != "half_width")
            throw parse_fail(lineno, "expected 'half_width <h>'");
    }
    {
        std::istringstream ss(next_line());
        std::string key;
        if (!(ss >> key >> net.gen_seed) || key != "seed")
            throw parse_fail(lineno, "expected 'seed <s>'");
    }
    if (next_line() != "anchors") throw parse_fail(lineno, "expected 'anchors'");
    for (long l = 0; l < sensors; ++l) {
        std::istringstream ss(next_line());
        Vec a(dim);
        for (int i = 0; i < dim; ++i)
            if (!(ss >> a[i])) throw parse_fail(lineno, "anchor row too short");
        double d = 0.0;
        if (!(ss >> d)) throw parse_fail(lineno, "anchor row missing measurement");
        net.anchors.push_back(std::move(a));
        net.measurements.push_back(d);
    }
    if (next_line() != "ground_truth") throw parse_fail(lineno, "expected 'ground_truth'");
    {
        std::istringstream ss(next_line());
        net.source.resize(dim);
        for (int i = 0; i < dim; ++i)
            if (!(ss >> net.source[i])) throw parse_fail(lineno, "ground truth row too short");
    }
    if (next_line() != "end") throw parse_fail(lineno, "expected 'end'");
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        throw parse_fail(lineno, std::string("invalid network: ") + e.what());
    }
    return net;
}

inline SensorNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path);
    return load_network(in);
}

}  // namespace fedloc
