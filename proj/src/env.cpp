#include "torl/env.hpp"

#include <sstream>

namespace torl {

Observation encode(const EnvState& state, const GridConfig& config) {
    Observation obs = Observation::Zero(config.obs_dim());
    obs[state.agent_x] = 1.0f;
    obs[config.width + state.agent_y] = 1.0f;
    if (state.agent_x == state.goal_x && state.agent_y == state.goal_y)
        obs[config.width + config.height] = 1.0f;
    return obs;
}

std::pair<EnvState, Observation> reset(const GridConfig& config, std::mt19937_64& rng) {
    config.validate();
    std::uniform_int_distribution<int> cell(0, config.width * config.height - 1);
    EnvState s;
    const int a = cell(rng);
    s.agent_x = a % config.width;
    s.agent_y = a / config.width;
    int g = cell(rng);
    if (!config.allow_overlap_spawn) {
        while (g == a) g = cell(rng);
    }
    s.goal_x = g % config.width;
    s.goal_y = g / config.width;
    s.t = 0;
    return {s, encode(s, config)};
}

std::pair<EnvState, StepResult> step(const EnvState& state, Action action,
                                     const GridConfig& config) {
    if (state.t >= config.episode_length) throw EpisodeExhausted{};

    EnvState next = state;
    switch (action) {
        case Action::North: next.agent_y += 1; break;
        case Action::South: next.agent_y -= 1; break;
        case Action::East: next.agent_x += 1; break;
        case Action::West: next.agent_x -= 1; break;
        case Action::Stay: break;
    }
    // Moves into a wall are no-ops.
    next.agent_x = std::clamp(next.agent_x, 0, config.width - 1);
    next.agent_y = std::clamp(next.agent_y, 0, config.height - 1);
    next.t = state.t + 1;

    StepResult result;
    result.observation = encode(next, config);
    const bool on_goal = next.agent_x == next.goal_x && next.agent_y == next.goal_y;
    result.reward = on_goal ? config.reward_on_goal : 0.0f;
    result.done = next.t == config.episode_length;
    result.t = next.t;
    return {next, result};
}

std::string render_ascii(const EnvState& state, const GridConfig& config) {
    std::ostringstream out;
    for (int y = config.height - 1; y >= 0; --y) {
        for (int x = 0; x < config.width; ++x) {
            char c = '.';
            if (x == state.goal_x && y == state.goal_y) c = 'G';
            if (x == state.agent_x && y == state.agent_y) c = 'A';
            out << c;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace torl
