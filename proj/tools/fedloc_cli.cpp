#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fedloc/fedloc.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        items.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
    }
    return items;
}

/// Experiment options shared by `run` and `rerun-cell`. A --config file is
/// loaded first; any flag passed on the command line overrides it.
struct ConfigOptions {
    std::string config_path;
    std::string scenario, async_mode, algorithms, sweep_values, speed_weights, out;
    int trials = 0, clients = 0, dim = 0, local_per_global = 0, k_a = 0;
    long global_rounds = 0, baseline_iterations = 0;
    double half_width = 0.0, omega = 0.0, baseline_eta0 = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::pair<CLI::Option*, std::function<void(fedloc::ExperimentConfig&)>>> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value config file");
        auto bind = [this](CLI::Option* opt, std::function<void(fedloc::ExperimentConfig&)> f) {
            overrides.emplace_back(opt, std::move(f));
        };
        bind(cmd->add_option("--scenario", scenario,
                             "single | convergence | outlier_sweep | cauchy_sweep"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.scenario = fedloc::scenario_from_string(scenario);
             });
        bind(cmd->add_option("--trials", trials, "trials per sweep value"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.trials = trials; });
        bind(cmd->add_option("--seed", seed, "master seed"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.seed = seed; });
        bind(cmd->add_option("--clients", clients, "number of sensors"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.num_clients = clients; });
        bind(cmd->add_option("--half-width", half_width, "deployment cube half-width"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.region_half_width = half_width; });
        bind(cmd->add_option("--dim", dim, "space dimension"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.dim = dim; });
        bind(cmd->add_option("--omega", omega, "consensus coupling weight"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.hyper.omega = omega; });
        bind(cmd->add_option("--local-per-global", local_per_global,
                             "local iterations per global round"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.hyper.k_local_per_global = local_per_global;
                 cfg.profile.local_per_global = local_per_global;
             });
        bind(cmd->add_option("--global-rounds", global_rounds, "global round budget"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.hyper.k_global_max = global_rounds; });
        bind(cmd->add_option("--k-a", k_a, "fairness deadline in global rounds"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.hyper.k_a = k_a;
                 cfg.profile.k_a = k_a;
             });
        bind(cmd->add_option("--async-mode", async_mode,
                             "synchronous | fixed_ratio | heterogeneous"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.profile.mode = fedloc::async_mode_from_string(async_mode);
             });
        bind(cmd->add_option("--speed-weights", speed_weights,
                             "comma list of per-client speeds (heterogeneous mode)"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.profile.speed_weights.clear();
                 for (const std::string& item : split_list(speed_weights))
                     cfg.profile.speed_weights.push_back(std::stod(item));
             });
        bind(cmd->add_option("--algorithms", algorithms, "comma list: fsmdm,dsrl"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.algorithms.clear();
                 for (const std::string& item : split_list(algorithms))
                     cfg.algorithms.push_back(fedloc::algorithm_from_string(item));
             });
        bind(cmd->add_option("--sweep-values", sweep_values, "comma list of sweep values"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.sweep_values.clear();
                 for (const std::string& item : split_list(sweep_values))
                     cfg.sweep_values.push_back(std::stod(item));
             });
        bind(cmd->add_option("--out", out, "results CSV path"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.output_path = out; });
        bind(cmd->add_option("--baseline-eta0", baseline_eta0, "baseline initial step"),
             [this](fedloc::ExperimentConfig& cfg) { cfg.baseline.eta0 = baseline_eta0; });
        bind(cmd->add_option("--baseline-iterations", baseline_iterations,
                             "baseline iteration budget"),
             [this](fedloc::ExperimentConfig& cfg) {
                 cfg.baseline.iterations = baseline_iterations;
             });
    }

    fedloc::ExperimentConfig build() const {
        fedloc::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = fedloc::parse_config_file(config_path);
        for (const auto& [opt, apply] : overrides)
            if (opt->count() > 0) apply(cfg);
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated range-based source localization harness"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment grid and write result CSVs");
    ConfigOptions run_opts;
    run_opts.attach(run_cmd);

    auto* rerun_cmd = app.add_subcommand(
        "rerun-cell", "recompute one logged (algorithm, sweep value, trial) row");
    ConfigOptions rerun_opts;
    rerun_opts.attach(rerun_cmd);
    std::string cell_algorithm;
    double cell_sweep_value = 0.0;
    int cell_trial = 0;
    rerun_cmd->add_option("--algorithm", cell_algorithm, "fsmdm | dsrl")->required();
    rerun_cmd->add_option("--sweep-value", cell_sweep_value, "sweep value of the cell")
        ->required();
    rerun_cmd->add_option("--trial", cell_trial, "trial index of the cell")->required();

    auto* summarize_cmd =
        app.add_subcommand("summarize", "recompute the summary table from a results CSV");
    std::string summarize_path;
    summarize_cmd->add_option("csv", summarize_path, "results CSV path")->required();

    auto* gen_cmd = app.add_subcommand("gen-net", "generate a sensor network file");
    int gen_clients = 21, gen_dim = 3;
    double gen_half_width = 30.0;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "network.txt";
    double gen_sigma = 0.0, gen_gamma = 0.0;
    std::vector<double> gen_outlier;
    gen_cmd->add_option("--clients", gen_clients, "number of sensors");
    gen_cmd->add_option("--half-width", gen_half_width, "deployment cube half-width");
    gen_cmd->add_option("--dim", gen_dim, "space dimension");
    gen_cmd->add_option("--seed", gen_seed, "generation seed");
    gen_cmd->add_option("--out", gen_out, "output path");
    auto* opt_gaussian =
        gen_cmd->add_option("--gaussian", gen_sigma, "gaussian range noise with this sigma");
    auto* opt_cauchy =
        gen_cmd->add_option("--cauchy", gen_gamma, "cauchy range noise with this scale");
    auto* opt_outlier = gen_cmd
                            ->add_option("--outlier", gen_outlier,
                                         "replace ranges uniformly: <p> <lo> <hi>")
                            ->expected(3);
    opt_gaussian->excludes(opt_cauchy)->excludes(opt_outlier);
    opt_cauchy->excludes(opt_outlier);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const fedloc::ExperimentResult result =
                fedloc::run_experiment(run_opts.build(), std::cout);
            std::cout << "wrote " << result.csv_path;
            if (!result.rounds_csv_path.empty()) std::cout << " and " << result.rounds_csv_path;
            std::cout << '\n';
        } else if (rerun_cmd->parsed()) {
            const fedloc::ExperimentConfig cfg = rerun_opts.build();
            cfg.validate();
            const fedloc::CellResult cell =
                fedloc::run_cell(cfg, fedloc::algorithm_from_string(cell_algorithm),
                                 cell_sweep_value, cell_trial);
            std::cout << fedloc::kResultsHeader << '\n'
                      << fedloc::format_results_row(cell) << '\n';
        } else if (summarize_cmd->parsed()) {
            fedloc::print_summary(fedloc::summarize(summarize_path), std::cout);
        } else if (gen_cmd->parsed()) {
            fedloc::SensorNetwork net =
                fedloc::generate_network(gen_clients, gen_half_width, gen_dim, gen_seed);
            if (opt_gaussian->count() > 0)
                net = fedloc::apply_gaussian(std::move(net), gen_sigma, gen_seed);
            else if (opt_cauchy->count() > 0)
                net = fedloc::apply_cauchy(std::move(net), gen_gamma, gen_seed);
            else if (opt_outlier->count() > 0)
                net = fedloc::apply_outliers(std::move(net), gen_outlier[0], gen_outlier[1],
                                             gen_outlier[2], gen_seed);
            fedloc::save_network(net, gen_out);
            std::cout << "wrote " << gen_out << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
