#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "torl/checkpoint.hpp"
#include "torl/harness.hpp"
#include "torl/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

torl::RunConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return torl::RunConfig{};
    return torl::load_run_config(config_path);
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) seeds.push_back(std::stoull(item));
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent A2C gridworld lab with a temporal-order auxiliary loss"};
    app.require_subcommand(1);

    std::string config_path, out_dir, ckpt_path, sweep_dir, variant_spec = "baseline,aux";
    std::string seeds_spec = "1,2,3,4,5,6,7,8,9,10";
    std::int64_t seed = -1;
    double beta = -1.0;
    int episodes = -1;
    bool argmax = false;

    auto* train = app.add_subcommand("train", "Train one agent");
    train->add_option("--config", config_path, "Run config JSON");
    train->add_option("--seed", seed, "Seed override");
    train->add_option("--out", out_dir, "Run directory override");
    train->add_option("--beta", beta, "Auxiliary loss weight override");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--ckpt", ckpt_path, "TORL1 checkpoint")->required();
    eval->add_option("--config", config_path, "Run config JSON (architecture)");
    eval->add_option("--episodes", episodes, "Evaluation episodes");
    eval->add_option("--seed", seed, "Seed override");
    eval->add_flag("--argmax", argmax, "Greedy action selection instead of sampling");

    auto* sweep = app.add_subcommand("sweep", "Multi-seed baseline-vs-aux sweep");
    sweep->add_option("--config", config_path, "Run config JSON");
    sweep->add_option("--seeds", seeds_spec, "Comma-separated seed list");
    sweep->add_option("--variant", variant_spec, "Comma-separated variants (baseline,aux)");
    sweep->add_option("--out", out_dir, "Sweep output directory")->required();
    sweep->add_option("--beta", beta, "Auxiliary loss weight override for the aux variant");

    auto* report = app.add_subcommand("report", "Rebuild sweep report from run directories");
    report->add_option("--dir", sweep_dir, "Sweep directory")->required();

    auto* plot = app.add_subcommand("plot", "Emit curves.csv and curves.svg for a sweep");
    plot->add_option("--dir", sweep_dir, "Sweep directory")->required();

    auto* gridshow = app.add_subcommand("gridshow", "Render a freshly reset grid as ASCII");
    gridshow->add_option("--seed", seed, "Spawn seed");
    gridshow->add_option("--config", config_path, "Run config JSON");

    auto* gradcheck = app.add_subcommand("gradcheck", "Run the gradient verification suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (train->parsed()) {
            torl::RunConfig cfg = load_or_default(config_path);
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (beta >= 0) cfg.aux.beta = static_cast<float>(beta);
            torl::TrainResult r = torl::run_training(cfg);
            std::cout << "run directory: " << r.run_dir << "\n"
                      << "eval mean return: " << r.eval.mean << " (std " << r.eval.stddev
                      << ")\n";
        } else if (eval->parsed()) {
            torl::RunConfig cfg = load_or_default(config_path);
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (episodes >= 0) cfg.eval_episodes = episodes;
            torl::Agent<float> agent = torl::load_agent(ckpt_path, cfg.agent);
            torl::EvalResult r =
                torl::evaluate(agent, cfg.env, cfg.eval_episodes, cfg.seed, argmax);
            nlohmann::json j = {{"episodes", r.episodes}, {"mean", r.mean},
                                {"std", r.stddev},        {"min", r.min},
                                {"max", r.max},           {"mode", argmax ? "argmax" : "stochastic"}};
            std::cout << j.dump(2) << "\n";
        } else if (sweep->parsed()) {
            torl::RunConfig cfg = load_or_default(config_path);
            if (beta >= 0) cfg.aux.beta = static_cast<float>(beta);
            auto seeds = parse_seeds(seeds_spec);
            auto variants = [&] {
                std::vector<std::string> v;
                std::stringstream ss(variant_spec);
                std::string item;
                while (std::getline(ss, item, ',')) v.push_back(item);
                return v;
            }();
            torl::SweepReport r = torl::run_sweep(cfg, seeds, variants, out_dir);
            std::cout << "baseline mean " << r.baseline.mean << " std " << r.baseline.stddev
                      << "\naux mean " << r.aux.mean << " std " << r.aux.stddev << "\n";
            if (!r.complete) std::cout << "warning: some seeds failed; report flagged\n";
        } else if (report->parsed()) {
            torl::SweepReport r = torl::rebuild_report(sweep_dir);
            std::cout << "baseline mean " << r.baseline.mean << " std " << r.baseline.stddev
                      << "\naux mean " << r.aux.mean << " std " << r.aux.stddev << "\n";
        } else if (plot->parsed()) {
            torl::write_plot_outputs(sweep_dir);
            std::cout << "wrote " << sweep_dir << "/curves.csv and curves.svg\n";
        } else if (gridshow->parsed()) {
            torl::RunConfig cfg = load_or_default(config_path);
            std::mt19937_64 rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seed);
            auto [state, obs] = torl::reset(cfg.env, rng);
            std::cout << torl::render_ascii(state, cfg.env);
        } else if (gradcheck->parsed()) {
            bool all_pass = true;
            for (const auto& r : torl::verify::run_gradient_suite()) {
                std::printf("[%s] %s (max rel error %.3e)\n", r.pass ? "PASS" : "FAIL",
                            r.name.c_str(), r.max_rel_error);
                all_pass = all_pass && r.pass;
            }
            return all_pass ? kExitOk : 1;
        }
    } catch (const torl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const torl::NumericAbort& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
