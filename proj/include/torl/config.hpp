#pragma once

#include <cstdint>
#include <string>

#include "torl/agent.hpp"
#include "torl/auxloss.hpp"
#include "torl/env.hpp"
#include "torl/trainer.hpp"

namespace torl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    GridConfig env;
    AgentConfig agent;
    AuxConfig aux;
    TrainerConfig trainer;
    std::uint64_t seed = 0;
    int eval_episodes = 1000;
    std::string out_dir = "runs/default";
    bool eval_argmax = false;  // default is stochastic evaluation
    int log_every = 50;        // metrics cadence, in updates

    void validate() const;
};

// JSON round trip. Parsing accepts partial documents (missing fields keep
// their defaults); serialization always writes every field so the stored
// config fully pins the run.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);
void save_run_config(const RunConfig& config, const std::string& path);

}  // namespace torl
