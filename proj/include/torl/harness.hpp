#pragma once

#include <vector>

#include "torl/config.hpp"

namespace torl {

struct NumericAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalResult {
    int episodes = 0;
    double mean = 0, stddev = 0, min = 0, max = 0;
    bool argmax = false;
};

// Runs fresh episodes with the (stochastic by default) policy; the eval seed
// stream is derived from the run seed but disjoint from training streams.
EvalResult evaluate(const Agent<float>& agent, const GridConfig& env_cfg, int episodes,
                    std::uint64_t seed, bool argmax = false);

// Loads a TORL1 checkpoint into an agent, checking names and shapes.
Agent<float> load_agent(const std::string& checkpoint_path, const AgentConfig& cfg);

struct TrainResult {
    std::string run_dir;
    EvalResult eval;
};

// Trains one agent; writes config.json, metrics.csv, final.ckpt, eval.json.
// Throws NumericAbort if the loss or gradients go non-finite.
TrainResult run_training(RunConfig config);

struct VariantStats {
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_mean_return;
    std::vector<std::string> run_dirs;
    std::vector<std::uint64_t> failed_seeds;
    double mean = 0, stddev = 0;  // stddev uses the n-1 denominator
};

struct SweepReport {
    VariantStats baseline, aux;
    bool complete = true;
};

SweepReport run_sweep(RunConfig base, const std::vector<std::uint64_t>& seeds,
                      const std::vector<std::string>& variants, const std::string& out_dir);

// Recomputes the report from completed run directories under sweep_dir.
SweepReport rebuild_report(const std::string& sweep_dir);

void write_sweep_outputs(const SweepReport& report, const std::string& out_dir);

// Emits curves.csv and curves.svg from the runs referenced by
// sweep_report.json in sweep_dir.
void write_plot_outputs(const std::string& sweep_dir);

double sample_stddev(const std::vector<double>& xs);

}  // namespace torl
