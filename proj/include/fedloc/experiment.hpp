#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedloc/baseline.hpp"
#include "fedloc/common.hpp"
#include "fedloc/datagen.hpp"
#include "fedloc/diagnostics.hpp"
#include "fedloc/model.hpp"
#include "fedloc/orchestrator.hpp"

namespace fedloc {

inline constexpr std::uint64_t kPolicyStream = 0x706f6c69;

enum class Scenario { single, convergence, outlier_sweep, cauchy_sweep };
enum class Algorithm { fsmdm, dsrl };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::single: return "single";
        case Scenario::convergence: return "convergence";
        case Scenario::outlier_sweep: return "outlier_sweep";
        case Scenario::cauchy_sweep: return "cauchy_sweep";
    }
    throw std::invalid_argument("unknown scenario");
}

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "single") return Scenario::single;
    if (s == "convergence") return Scenario::convergence;
    if (s == "outlier_sweep") return Scenario::outlier_sweep;
    if (s == "cauchy_sweep") return Scenario::cauchy_sweep;
    throw std::invalid_argument("unknown scenario: " + s);
}

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::fsmdm: return "fsmdm";
        case Algorithm::dsrl: return "dsrl";
    }
    throw std::invalid_argument("unknown algorithm");
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "fsmdm") return Algorithm::fsmdm;
    if (s == "dsrl") return Algorithm::dsrl;
    throw std::invalid_argument("unknown algorithm: " + s);
}

/// Full description of one experiment: scenario, trial budget, network
/// shape, solver and baseline settings, and output location. Defaults
/// reproduce the reference setup: 21 clients in a [-30,30]^3 cube.
struct ExperimentConfig {
    Scenario scenario = Scenario::single;
    int trials = 100;
    std::uint64_t seed = 1;
    int num_clients = 21;
    double region_half_width = 30.0;
    int dim = 3;
    Hyperparams hyper;
    AsyncProfile profile;
    std::vector<Algorithm> algorithms = {Algorithm::fsmdm, Algorithm::dsrl};
    std::vector<double> sweep_values;  // empty = scenario default
    std::string output_path = "results.csv";
    SubgradConfig baseline;
    double outlier_lo = 0.0;
    double outlier_hi = 60.0 * std::sqrt(3.0);

    void validate() const {
        require(trials >= 1, "trials must be >= 1");
        require(num_clients >= 1, "clients must be >= 1");
        require(region_half_width > 0.0, "half_width must be > 0");
        require(dim >= 1, "dim must be >= 1");
        require(!algorithms.empty(), "algorithms must be non-empty");
        require(!output_path.empty(), "out must be non-empty");
        profile.validate(num_clients);
        baseline.validate();
        for (double v : effective_sweep_values()) {
            if (scenario == Scenario::outlier_sweep)
                require(v >= 0.0 && v <= 1.0, "sweep_values: outlier probability not in [0,1]");
            if (scenario == Scenario::cauchy_sweep || scenario == Scenario::convergence)
                require(v > 0.0, "sweep_values: cauchy scale must be > 0");
        }
        require(outlier_hi >= outlier_lo && outlier_lo >= 0.0,
                "outlier interval needs hi >= lo >= 0");
    }

    std::vector<double> effective_sweep_values() const {
        if (!sweep_values.empty()) return sweep_values;
        std::vector<double> v;
        switch (scenario) {
            case Scenario::single: v = {0.0}; break;
            case Scenario::convergence: v = {1.0}; break;
            case Scenario::outlier_sweep:
                for (int i = 1; i <= 12; ++i) v.push_back(0.025 * i);
                break;
            case Scenario::cauchy_sweep:
                for (int i = 1; i <= 20; ++i) v.push_back(0.2 * i);
                break;
        }
        return v;
    }
};

/// One CSV row: the final metrics of a single (sweep value, trial,
/// algorithm) cell, plus the per-round error trace for the convergence
/// scenario.
struct CellResult {
    Scenario scenario = Scenario::single;
    Algorithm algorithm = Algorithm::fsmdm;
    double sweep_value = 0.0;
    int trial = 0;
    std::uint64_t cell_seed = 0;
    double final_rmse_local = 0.0;
    double final_rmse_global = 0.0;
    double consensus_max = 0.0;
    double dual_sum_norm = 0.0;
    long rounds = 0;
    std::vector<std::pair<long, double>> convergence;  // (round, rmse_local)
};

inline std::uint64_t cell_seed_for(std::uint64_t master_seed, int trial) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(trial));
}

/// Shortest-round-trip double formatting shared by every CSV writer, so
/// reruns of a cell reproduce rows byte for byte.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline constexpr const char* kResultsHeader =
    "scenario,algorithm,sweep_value,trial,cell_seed,final_rmse_local,final_rmse_global,"
    "consensus_max,dual_sum_norm,rounds";
inline constexpr const char* kRoundsHeader =
    "scenario,algorithm,sweep_value,trial,cell_seed,round,rmse";

inline std::string format_results_row(const CellResult& c) {
    std::ostringstream out;
    out << to_string(c.scenario) << ',' << to_string(c.algorithm) << ','
        << format_double(c.sweep_value) << ',' << c.trial << ',' << c.cell_seed << ','
        << format_double(c.final_rmse_local) << ',' << format_double(c.final_rmse_global) << ','
        << format_double(c.consensus_max) << ',' << format_double(c.dual_sum_norm) << ','
        << c.rounds;
    return out.str();
}

inline void format_rounds_rows(const CellResult& c, std::ostream& out) {
    const std::string prefix = to_string(c.scenario) + ',' + to_string(c.algorithm) + ',' +
                               format_double(c.sweep_value) + ',' + std::to_string(c.trial) +
                               ',' + std::to_string(c.cell_seed) + ',';
    for (const auto& [round, value] : c.convergence)
        out << prefix << round << ',' << format_double(value) << '\n';
}

inline NoiseModel noise_for(const ExperimentConfig& cfg, double sweep_value) {
    switch (cfg.scenario) {
        case Scenario::single: return NoiseModel::clean();
        case Scenario::convergence: return NoiseModel::cauchy(sweep_value);
        case Scenario::outlier_sweep:
            return NoiseModel::outlier(sweep_value, cfg.outlier_lo, cfg.outlier_hi);
        case Scenario::cauchy_sweep: return NoiseModel::cauchy(sweep_value);
    }
    throw std::invalid_argument("unknown scenario");
}

/// Run one experiment cell from scratch. Everything the cell does is a
/// pure function of (cfg, algo, sweep_value, trial), so a logged row can
/// be reproduced exactly from these four values.
inline CellResult run_cell(const ExperimentConfig& cfg, Algorithm algo, double sweep_value,
                           int trial) {
    CellResult cell;
    cell.scenario = cfg.scenario;
    cell.algorithm = algo;
    cell.sweep_value = sweep_value;
    cell.trial = trial;
    cell.cell_seed = cell_seed_for(cfg.seed, trial);

    SensorNetwork net =
        generate_network(cfg.num_clients, cfg.region_half_width, cfg.dim, cell.cell_seed);
    net = apply_noise(std::move(net), noise_for(cfg, sweep_value), cell.cell_seed);

    RunResult result;
    if (algo == Algorithm::fsmdm) {
        AsyncProfile profile = cfg.profile;
        profile.rng_seed = mix_seed(cell.cell_seed, kPolicyStream);
        result = run_consensus_solver(net, cfg.hyper, profile);
    } else {
        result = run_subgradient_baseline(net, cfg.baseline, cell.cell_seed);
    }

    cell.final_rmse_local = rmse(result.estimates, net.source);
    cell.final_rmse_global = (result.w - net.source).norm();
    if (!result.rounds.empty()) {
        const RoundStats& last = result.rounds.back();
        cell.consensus_max = last.residuals.consensus_max;
        cell.dual_sum_norm = last.residuals.dual_sum_norm;
    }
    cell.rounds = static_cast<long>(result.rounds.size());
    if (cfg.scenario == Scenario::convergence) {
        cell.convergence.reserve(result.rounds.size());
        for (const RoundStats& r : result.rounds)
            cell.convergence.emplace_back(r.round, r.rmse_local);
    }
    return cell;
}

inline std::string path_with_suffix(const std::string& path, const std::string& suffix) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    if (!has_ext) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

struct SummaryRow {
    std::string algorithm;
    double sweep_value = 0.0;
    long trials = 0;
    double mean_rmse = 0.0;
    double stderr_rmse = 0.0;  // sample stddev / sqrt(n); 0 with flag when n == 1
    bool single_trial = false;
};

using SummaryTable = std::vector<SummaryRow>;

inline void print_summary(const SummaryTable& table, std::ostream& out) {
    out << "algorithm  sweep_value  trials  mean_rmse  stderr\n";
    for (const SummaryRow& r : table) {
        out << r.algorithm << "  " << format_double(r.sweep_value) << "  " << r.trials << "  "
            << format_double(r.mean_rmse) << "  " << format_double(r.stderr_rmse);
        if (r.single_trial) out << "  (single trial, stderr undefined)";
        out << '\n';
    }
}

namespace detail {

struct RunningStats {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    double stderr_of_mean() const {
        if (n <= 1) return 0.0;
        const double var = m2 / static_cast<double>(n - 1);
        return std::sqrt(var / static_cast<double>(n));
    }
};

inline SummaryTable summary_from_stats(
    const std::map<std::pair<std::string, double>, RunningStats>& stats) {
    SummaryTable table;
    for (const auto& [key, s] : stats) {
        SummaryRow row;
        row.algorithm = key.first;
        row.sweep_value = key.second;
        row.trials = s.n;
        row.mean_rmse = s.mean;
        row.stderr_rmse = s.stderr_of_mean();
        row.single_trial = s.n == 1;
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace detail

struct ExperimentResult {
    std::vector<CellResult> cells;
    SummaryTable summary;
    std::string csv_path;
    std::string rounds_csv_path;  // empty unless the convergence scenario ran
};

/// Run the full sweep-by-trial-by-algorithm grid, streaming rows to the
/// output CSV as they finish (a killed run keeps its completed rows).
/// Geometry and noise depend only on (seed, trial, sweep value), so
/// algorithm comparisons within a cell are paired.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       std::ostream& summary_out = std::cout) {
    cfg.validate();
    for (Algorithm a : cfg.algorithms) {
        if (a == Algorithm::fsmdm) {
            const HyperparamReport hp = validate_hyperparams(cfg.hyper);
            if (!hp.ok) {
                std::string msg = "hyperparameters fail validation:";
                for (const std::string& v : hp.violations) msg += " " + v + ";";
                throw std::invalid_argument(msg);
            }
        }
    }

    ExperimentResult result;
    result.csv_path = cfg.output_path;
    std::ofstream out(cfg.output_path);
    require(out.good(), "cannot open " + cfg.output_path + " for writing");
    out << kResultsHeader << '\n';

    std::ofstream rounds_out;
    if (cfg.scenario == Scenario::convergence) {
        result.rounds_csv_path = path_with_suffix(cfg.output_path, "_rounds");
        rounds_out.open(result.rounds_csv_path);
        require(rounds_out.good(), "cannot open " + result.rounds_csv_path + " for writing");
        rounds_out << kRoundsHeader << '\n';
    }

    std::map<std::pair<std::string, double>, detail::RunningStats> stats;
    for (double sweep_value : cfg.effective_sweep_values()) {
        for (int trial = 0; trial < cfg.trials; ++trial) {
            for (Algorithm algo : cfg.algorithms) {
                CellResult cell = run_cell(cfg, algo, sweep_value, trial);
                out << format_results_row(cell) << '\n' << std::flush;
                if (rounds_out.is_open()) {
                    format_rounds_rows(cell, rounds_out);
                    rounds_out << std::flush;
                }
                stats[{to_string(algo), sweep_value}].add(cell.final_rmse_local);
                result.cells.push_back(std::move(cell));
            }
        }
    }
    require(out.good(), "write to " + cfg.output_path + " failed");

    result.summary = detail::summary_from_stats(stats);
    print_summary(result.summary, summary_out);
    return result;
}

/// Recompute the summary table from a results CSV on disk.
inline SummaryTable summarize(const std::string& csv_path) {
    std::ifstream in(csv_path);
    require(in.good(), "cannot open " + csv_path);
    auto parse_fail = [](long line, const std::string& what) -> std::runtime_error {
        return std::runtime_error("CSV parse error at line " + std::to_string(line) + ": " +
                                  what);
    };

    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw parse_fail(1, "empty file");
    ++lineno;
    if (line != kResultsHeader) throw parse_fail(lineno, "unexpected header");

    std::map<std::pair<std::string, double>, detail::RunningStats> stats;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw parse_fail(lineno, "expected 10 fields, got " + std::to_string(fields.size()));
        try {
            algorithm_from_string(fields[1]);
            const double sweep_value = std::stod(fields[2]);
            const double rmse_local = std::stod(fields[5]);
            stats[{fields[1], sweep_value}].add(rmse_local);
        } catch (const std::exception& e) {
            throw parse_fail(lineno, e.what());
        }
    }
    if (stats.empty()) throw parse_fail(lineno, "no data rows");
    return detail::summary_from_stats(stats);
}

/// Flat key=value config file: '#' comments and blank lines are skipped.
/// Every key has a default; unknown keys are rejected by name.
inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    long lineno = 0;
    auto bad = [&](const std::string& what) -> std::invalid_argument {
        return std::invalid_argument("config error at line " + std::to_string(lineno) + ": " +
                                     what);
    };
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    auto split_list = [&trim](const std::string& s) {
        std::vector<std::string> items;
        std::istringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) items.push_back(trim(item));
        return items;
    };

    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) throw bad("expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) throw bad("expected 'key = value'");

        try {
            if (key == "scenario") cfg.scenario = scenario_from_string(value);
            else if (key == "trials") cfg.trials = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "clients") cfg.num_clients = std::stoi(value);
            else if (key == "half_width") cfg.region_half_width = std::stod(value);
            else if (key == "dim") cfg.dim = std::stoi(value);
            else if (key == "c") cfg.hyper.c = std::stod(value);
            else if (key == "d") cfg.hyper.d = std::stod(value);
            else if (key == "alpha") cfg.hyper.alpha = std::stod(value);
            else if (key == "beta") cfg.hyper.beta = std::stod(value);
            else if (key == "omega") cfg.hyper.omega = std::stod(value);
            else if (key == "local_per_global") {
                cfg.hyper.k_local_per_global = std::stoi(value);
                cfg.profile.local_per_global = cfg.hyper.k_local_per_global;
            } else if (key == "global_rounds") cfg.hyper.k_global_max = std::stol(value);
            else if (key == "k_a") {
                cfg.hyper.k_a = std::stoi(value);
                cfg.profile.k_a = cfg.hyper.k_a;
            } else if (key == "async_mode") cfg.profile.mode = async_mode_from_string(value);
            else if (key == "speed_weights") {
                cfg.profile.speed_weights.clear();
                for (const std::string& item : split_list(value))
                    cfg.profile.speed_weights.push_back(std::stod(item));
            } else if (key == "algorithms") {
                cfg.algorithms.clear();
                for (const std::string& item : split_list(value))
                    cfg.algorithms.push_back(algorithm_from_string(item));
            } else if (key == "sweep_values") {
                cfg.sweep_values.clear();
                for (const std::string& item : split_list(value))
                    cfg.sweep_values.push_back(std::stod(item));
            } else if (key == "out") cfg.output_path = value;
            else if (key == "baseline_eta0") cfg.baseline.eta0 = std::stod(value);
            else if (key == "baseline_iterations") cfg.baseline.iterations = std::stol(value);
            else if (key == "outlier_lo") cfg.outlier_lo = std::stod(value);
            else if (key == "outlier_hi") cfg.outlier_hi = std::stod(value);
            else throw bad("unknown config key '" + key + "'");
        } catch (const std::exception& e) {
            const std::string msg = e.what();
            if (msg.rfind("config error", 0) == 0) throw;
            throw bad("cannot parse value for '" + key + "': " + msg);
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file " + path);
    return parse_config(in);
}

}  // namespace fedloc
