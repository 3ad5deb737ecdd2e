#include "torl/config.hpp"

#include <fstream>

#include <json.hpp>

namespace torl {

using nlohmann::json;

namespace {

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
    try {
        env.validate();
        agent.validate();
        aux.validate();
        trainer.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (agent.obs_dim != env.obs_dim())
        throw ConfigError("agent.obs_dim must equal width + height + 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    RunConfig c;
    try {
        if (j.contains("env")) {
            const json& e = j["env"];
            maybe(e, "width", c.env.width);
            maybe(e, "height", c.env.height);
            maybe(e, "episode_length", c.env.episode_length);
            maybe(e, "reward_on_goal", c.env.reward_on_goal);
            maybe(e, "allow_overlap_spawn", c.env.allow_overlap_spawn);
        }
        c.agent.obs_dim = c.env.obs_dim();
        if (j.contains("agent")) {
            const json& a = j["agent"];
            maybe(a, "trunk1", c.agent.trunk1);
            maybe(a, "trunk2", c.agent.trunk2);
            maybe(a, "hidden", c.agent.hidden);
            maybe(a, "classifier_hidden", c.agent.classifier_hidden);
            maybe(a, "stop_pair_gradient", c.agent.stop_pair_gradient);
        }
        if (j.contains("aux")) {
            const json& a = j["aux"];
            maybe(a, "enabled", c.aux.enabled);
            maybe(a, "k", c.aux.k);
            maybe(a, "pairs_per_step", c.aux.pairs_per_step);
            maybe(a, "beta", c.aux.beta);
        }
        if (j.contains("trainer")) {
            const json& t = j["trainer"];
            maybe(t, "n_workers", c.trainer.n_workers);
            maybe(t, "gamma", c.trainer.gamma);
            maybe(t, "entropy_coef", c.trainer.entropy_coef);
            maybe(t, "value_coef", c.trainer.value_coef);
            maybe(t, "rollout_len", c.trainer.rollout_len);
            maybe(t, "learning_rate", c.trainer.learning_rate);
            maybe(t, "rmsprop_decay", c.trainer.rmsprop_decay);
            maybe(t, "rmsprop_epsilon", c.trainer.rmsprop_epsilon);
            maybe(t, "grad_clip_norm", c.trainer.grad_clip_norm);
            maybe(t, "total_env_steps", c.trainer.total_env_steps);
            if (t.contains("td_horizon")) {
                const std::string h = t.at("td_horizon").get<std::string>();
                if (h == "one_step")
                    c.trainer.td_horizon = TdHorizon::OneStep;
                else if (h == "rollout")
                    c.trainer.td_horizon = TdHorizon::Rollout;
                else
                    throw ConfigError("td_horizon must be \"one_step\" or \"rollout\"");
            }
        }
        maybe(j, "seed", c.seed);
        maybe(j, "eval_episodes", c.eval_episodes);
        maybe(j, "out_dir", c.out_dir);
        maybe(j, "eval_argmax", c.eval_argmax);
        maybe(j, "log_every", c.log_every);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }

    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string dump_run_config(const RunConfig& c) {
    json j;
    j["env"] = {{"width", c.env.width},
                {"height", c.env.height},
                {"episode_length", c.env.episode_length},
                {"reward_on_goal", c.env.reward_on_goal},
                {"allow_overlap_spawn", c.env.allow_overlap_spawn}};
    j["agent"] = {{"trunk1", c.agent.trunk1},
                  {"trunk2", c.agent.trunk2},
                  {"hidden", c.agent.hidden},
                  {"classifier_hidden", c.agent.classifier_hidden},
                  {"stop_pair_gradient", c.agent.stop_pair_gradient}};
    j["aux"] = {{"enabled", c.aux.enabled},
                {"k", c.aux.k},
                {"pairs_per_step", c.aux.pairs_per_step},
                {"beta", c.aux.beta}};
    j["trainer"] = {{"n_workers", c.trainer.n_workers},
                    {"gamma", c.trainer.gamma},
                    {"entropy_coef", c.trainer.entropy_coef},
                    {"value_coef", c.trainer.value_coef},
                    {"rollout_len", c.trainer.rollout_len},
                    {"learning_rate", c.trainer.learning_rate},
                    {"rmsprop_decay", c.trainer.rmsprop_decay},
                    {"rmsprop_epsilon", c.trainer.rmsprop_epsilon},
                    {"grad_clip_norm", c.trainer.grad_clip_norm},
                    {"total_env_steps", c.trainer.total_env_steps},
                    {"td_horizon",
                     c.trainer.td_horizon == TdHorizon::OneStep ? "one_step" : "rollout"}};
    j["seed"] = c.seed;
    j["eval_episodes"] = c.eval_episodes;
    j["out_dir"] = c.out_dir;
    j["eval_argmax"] = c.eval_argmax;
    j["log_every"] = c.log_every;
    return j.dump(2) + "\n";
}

void save_run_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config: " + path);
    out << dump_run_config(config);
}

}  // namespace torl
