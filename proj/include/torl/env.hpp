#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace torl {

struct GridConfig {
    int width = 6;
    int height = 6;
    int episode_length = 50;
    float reward_on_goal = 1.0f;
    bool allow_overlap_spawn = false;

    void validate() const {
        if (width < 2 || height < 2)
            throw std::invalid_argument("grid must be at least 2x2");
        if (episode_length < 1)
            throw std::invalid_argument("episode_length must be >= 1");
    }
    int obs_dim() const { return width + height + 1; }
};

enum class Action : int { North = 0, South = 1, East = 2, West = 3, Stay = 4 };
inline constexpr int kNumActions = 5;

struct EnvState {
    int agent_x = 0;
    int agent_y = 0;
    int goal_x = 0;
    int goal_y = 0;
    int t = 0;
};

// One-hot x ++ one-hot y ++ on-goal bit.
using Observation = Eigen::VectorXf;

struct StepResult {
    Observation observation;
    float reward = 0.0f;
    bool done = false;
    int t = 0;
};

struct EpisodeExhausted : std::logic_error {
    EpisodeExhausted() : std::logic_error("step() called on a finished episode") {}
};

Observation encode(const EnvState& state, const GridConfig& config);

std::pair<EnvState, Observation> reset(const GridConfig& config, std::mt19937_64& rng);

std::pair<EnvState, StepResult> step(const EnvState& state, Action action,
                                     const GridConfig& config);

std::string render_ascii(const EnvState& state, const GridConfig& config);

// Thin stateful wrapper used by the trainer; one instance per worker.
class GridEnv {
public:
    explicit GridEnv(GridConfig config) : config_(std::move(config)) { config_.validate(); }

    Observation reset(std::mt19937_64& rng) {
        auto [s, obs] = torl::reset(config_, rng);
        state_ = s;
        return obs;
    }
    StepResult step(Action action) {
        auto [s, result] = torl::step(state_, action, config_);
        state_ = s;
        return result;
    }
    const EnvState& state() const { return state_; }
    const GridConfig& config() const { return config_; }

private:
    GridConfig config_;
    EnvState state_;
};

}  // namespace torl
