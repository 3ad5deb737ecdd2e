#pragma once

#include <deque>

#include "torl/auxloss.hpp"

namespace torl {

enum class TdHorizon { OneStep, Rollout };

struct TrainerConfig {
    int n_workers = 32;
    float gamma = 0.95f;
    float entropy_coef = 0.01f;  // alpha in the combined loss
    float value_coef = 0.5f;
    int rollout_len = 20;
    float learning_rate = 7e-4f;
    float rmsprop_decay = 0.99f;
    float rmsprop_epsilon = 1e-5f;
    float grad_clip_norm = 0.5f;
    long long total_env_steps = 2'500'000;
    TdHorizon td_horizon = TdHorizon::Rollout;

    void validate() const {
        if (gamma < 0 || gamma >= 1) throw std::invalid_argument("gamma must be in [0,1)");
        if (entropy_coef < 0 || value_coef < 0 || grad_clip_norm < 0 || learning_rate < 0)
            throw std::invalid_argument("loss weights and rates must be >= 0");
        if (rollout_len < 1 || n_workers < 1)
            throw std::invalid_argument("rollout_len and n_workers must be >= 1");
    }
};

template <class Scalar>
struct StepRecord {
    MatX<Scalar> obs;            // obs_dim x W, the o_t each worker acted on
    std::vector<int> actions;    // W
    VecX<Scalar> rewards;        // W, r_{t+1}
    std::vector<uint8_t> done;   // W, episode ended on this transition
    std::vector<uint8_t> fresh;  // W, hidden state was zeroed entering this step
    VecX<Scalar> values;         // W, V_t
    VecX<Scalar> log_probs;      // W, log pi(a_t)
    MatX<Scalar> probs;          // A x W
    AgentStepCache<Scalar> cache;

    // Auxiliary pairs, flattened across workers.
    std::vector<PairSample> pairs;
    std::vector<int> pair_worker;
    TrunkCache<Scalar> pair_trunk;  // over the 2P stacked pair observations
    ClassifierCache<Scalar> cls;
    VecX<Scalar> pair_logits;
};

template <class Scalar>
struct Rollout {
    std::vector<StepRecord<Scalar>> steps;
    LstmState<Scalar> h0;       // carried state entering step 0, pre fresh-masking
    VecX<Scalar> bootstrap;     // V(o_T, h_T) per worker
    int transitions() const {
        return static_cast<int>(steps.size()) *
               (steps.empty() ? 0 : static_cast<int>(steps[0].actions.size()));
    }
};

template <class Scalar>
struct ReturnsAndAdvantages {
    MatX<Scalar> returns;     // T x W, value regression targets
    MatX<Scalar> advantages;  // T x W, treated as constants in the policy term
};

struct UpdateStats {
    double policy_loss = 0;
    double value_loss = 0;  // mean squared return error, pre value_coef
    double entropy = 0;
    double aux_loss = 0;      // pre-beta mean logistic loss
    double aux_accuracy = 0;
    double grad_norm = 0;     // pre-clip
    double total_loss = 0;
    bool finite = true;
};

template <class Scalar>
double clip_global_norm(ParameterStore<Scalar>& params, double max_norm) {
    const double norm = params.grad_norm();
    if (max_norm > 0 && norm > max_norm)
        params.scale_grad(static_cast<Scalar>(max_norm / norm));
    return norm;
}

template <class Scalar>
struct RmsPropState {
    std::map<std::string, MatX<Scalar>> mean_square;
};

template <class Scalar>
void rmsprop_step(ParameterStore<Scalar>& params, RmsPropState<Scalar>& state,
                  const TrainerConfig& cfg) {
    for (auto& [name, e] : params) {
        auto it = state.mean_square.find(name);
        if (it == state.mean_square.end())
            it = state.mean_square.emplace(name, MatX<Scalar>::Zero(e.value.rows(),
                                                                    e.value.cols())).first;
        MatX<Scalar>& ms = it->second;
        ms.array() = Scalar(cfg.rmsprop_decay) * ms.array() +
                     Scalar(1 - cfg.rmsprop_decay) * e.grad.array().square();
        e.value.array() -= Scalar(cfg.learning_rate) * e.grad.array() /
                           (ms.array().sqrt() + Scalar(cfg.rmsprop_epsilon));
    }
}

// Synchronous A2C over lockstep workers. Collection fills per-step caches so
// the update phase can backpropagate without re-running the forward pass
// (parameters do not change between the two phases).
template <class Scalar>
class Trainer {
public:
    Trainer(const GridConfig& env_cfg, const AgentConfig& agent_cfg, const AuxConfig& aux_cfg,
            const TrainerConfig& train_cfg, std::uint64_t seed)
        : env_cfg_(env_cfg), aux_cfg_(aux_cfg), cfg_(train_cfg) {
        env_cfg_.validate();
        aux_cfg_.validate();
        cfg_.validate();
        if (agent_cfg.obs_dim != env_cfg_.obs_dim())
            throw std::invalid_argument("agent obs_dim does not match environment encoding");

        std::mt19937_64 master(seed);
        agent.init(agent_cfg, master);

        const int w = cfg_.n_workers;
        hidden_ = LstmState<Scalar>::zero(agent.cfg.hidden, w);
        current_obs_ = MatX<Scalar>::Zero(agent.cfg.obs_dim, w);
        episode_return_.assign(w, 0.0);
        fresh_.assign(w, 1);
        for (int i = 0; i < w; ++i) {
            std::seed_seq sq{static_cast<std::uint64_t>(seed), std::uint64_t(1),
                             static_cast<std::uint64_t>(i)};
            worker_rng_.emplace_back(sq);
            std::seed_seq sp{static_cast<std::uint64_t>(seed), std::uint64_t(2),
                             static_cast<std::uint64_t>(i)};
            pair_rng_.emplace_back(sp);
            envs_.emplace_back(env_cfg_);
            histories_.emplace_back(aux_cfg_.k);
            current_obs_.col(i) = envs_.back().reset(worker_rng_.back()).template cast<Scalar>();
        }
    }

    Rollout<Scalar> collect() {
        const int w = cfg_.n_workers;
        Rollout<Scalar> out;
        out.h0 = hidden_;
        out.steps.resize(cfg_.rollout_len);

        for (int t = 0; t < cfg_.rollout_len; ++t) {
            StepRecord<Scalar>& rec = out.steps[t];
            rec.fresh.assign(fresh_.begin(), fresh_.end());
            for (int i = 0; i < w; ++i) {
                if (fresh_[i]) {
                    hidden_.h.col(i).setZero();
                    hidden_.c.col(i).setZero();
                }
            }
            fresh_.assign(w, 0);

            rec.obs = current_obs_;
            AgentOutput<Scalar> agent_out = agent.step(rec.obs, hidden_, rec.cache);
            hidden_ = agent_out.state;
            rec.probs = agent_out.probs;
            rec.values = agent_out.values;

            if (aux_cfg_.active()) collect_pairs(rec, agent_out.state.h);

            rec.actions.resize(w);
            rec.rewards.resize(w);
            rec.done.assign(w, 0);
            rec.log_probs.resize(w);
            for (int i = 0; i < w; ++i) {
                auto [action, logp] = sample_action<Scalar>(agent_out.probs.col(i),
                                                            worker_rng_[i]);
                rec.actions[i] = action;
                rec.log_probs[i] = logp;
                StepResult sr = envs_[i].step(static_cast<Action>(action));
                rec.rewards[i] = static_cast<Scalar>(sr.reward);
                episode_return_[i] += sr.reward;
                if (sr.done) {
                    rec.done[i] = 1;
                    finish_episode(i);
                    current_obs_.col(i) = envs_[i].reset(worker_rng_[i]).template cast<Scalar>();
                } else {
                    current_obs_.col(i) = sr.observation.template cast<Scalar>();
                }
            }
        }

        // Bootstrap values for truncated returns; masked out at done flags.
        LstmState<Scalar> h = hidden_;
        for (int i = 0; i < w; ++i) {
            if (fresh_[i]) {
                h.h.col(i).setZero();
                h.c.col(i).setZero();
            }
        }
        AgentStepCache<Scalar> scratch;
        out.bootstrap = agent.step(current_obs_, h, scratch).values;
        return out;
    }

    ReturnsAndAdvantages<Scalar> compute_returns_and_advantages(
        const Rollout<Scalar>& rollout) const {
        const int steps = static_cast<int>(rollout.steps.size());
        const int w = cfg_.n_workers;
        const Scalar gamma = Scalar(cfg_.gamma);
        ReturnsAndAdvantages<Scalar> out;
        out.returns.resize(steps, w);
        out.advantages.resize(steps, w);

        if (cfg_.td_horizon == TdHorizon::Rollout) {
            for (int i = 0; i < w; ++i) {
                Scalar running = rollout.bootstrap[i];
                for (int t = steps - 1; t >= 0; --t) {
                    const auto& rec = rollout.steps[t];
                    if (rec.done[i]) running = Scalar(0);
                    running = rec.rewards[i] + gamma * running;
                    out.returns(t, i) = running;
                    out.advantages(t, i) = running - rec.values[i];
                }
            }
        } else {
            for (int i = 0; i < w; ++i) {
                for (int t = 0; t < steps; ++t) {
                    const auto& rec = rollout.steps[t];
                    Scalar next_v = Scalar(0);
                    if (!rec.done[i])
                        next_v = t + 1 < steps ? rollout.steps[t + 1].values[i]
                                               : rollout.bootstrap[i];
                    const Scalar target = rec.rewards[i] + gamma * next_v;
                    out.returns(t, i) = target;
                    out.advantages(t, i) = target - rec.values[i];
                }
            }
        }
        return out;
    }

    // Accumulates the gradient of the mean-per-transition combined loss into
    // agent.params. Targets and advantages are constants here.
    UpdateStats accumulate_gradients(const Rollout<Scalar>& rollout,
                                     const ReturnsAndAdvantages<Scalar>& ra) {
        const int steps = static_cast<int>(rollout.steps.size());
        const int w = cfg_.n_workers;
        const int n = steps * w;
        const Scalar inv_n = Scalar(1) / Scalar(n);
        const Scalar alpha = Scalar(cfg_.entropy_coef);
        const Scalar beta = Scalar(aux_cfg_.beta);

        UpdateStats stats;
        int aux_batches = 0;

        MatX<Scalar> dh_next = MatX<Scalar>::Zero(agent.cfg.hidden, w);
        MatX<Scalar> dc_next = MatX<Scalar>::Zero(agent.cfg.hidden, w);

        for (int t = steps - 1; t >= 0; --t) {
            const StepRecord<Scalar>& rec = rollout.steps[t];
            const MatX<Scalar>& p = rec.probs;
            VecX<Scalar> ent = entropy_columns(p);

            MatX<Scalar> dlogits(agent.cfg.n_actions, w);
            MatX<Scalar> dvalues(1, w);
            for (int i = 0; i < w; ++i) {
                const Scalar adv = ra.advantages(t, i);
                // d/dz of -log pi(a) * adv is (pi - onehot(a)) * adv.
                dlogits.col(i) = p.col(i) * adv * inv_n;
                dlogits(rec.actions[i], i) -= adv * inv_n;
                // d/dz of -alpha H is alpha * p * (log p + H).
                if (alpha > 0) {
                    for (int a = 0; a < agent.cfg.n_actions; ++a)
                        dlogits(a, i) += alpha * p(a, i) *
                                         (std::log(p(a, i)) + ent[i]) * inv_n;
                }
                const Scalar verr = rec.values[i] - ra.returns(t, i);
                dvalues(0, i) = Scalar(2) * Scalar(cfg_.value_coef) * verr * inv_n;

                stats.policy_loss += -double(rec.log_probs[i]) * double(adv);
                stats.value_loss += double(verr) * double(verr);
                stats.entropy += double(ent[i]);
                stats.total_loss += -double(rec.log_probs[i]) * double(adv) -
                                    double(alpha) * double(ent[i]) +
                                    double(cfg_.value_coef) * double(verr) * double(verr);
            }

            MatX<Scalar> dh_extra = MatX<Scalar>::Zero(agent.cfg.hidden, w);
            if (!rec.pairs.empty()) {
                backward_pairs(rec, inv_n, beta, dh_extra, stats, aux_batches);
            }

            auto sbr = agent.step_backward(dlogits, dvalues, dh_extra, dh_next, dc_next,
                                           rec.cache);
            dh_next = std::move(sbr.dh_prev);
            dc_next = std::move(sbr.dc_prev);
            for (int i = 0; i < w; ++i) {
                if (rec.fresh[i]) {
                    dh_next.col(i).setZero();
                    dc_next.col(i).setZero();
                }
            }
        }

        stats.policy_loss /= n;
        stats.value_loss /= n;
        stats.entropy /= n;
        stats.total_loss /= n;
        if (aux_batches > 0) {
            stats.aux_loss /= aux_batches;
            stats.aux_accuracy /= aux_batches;
            stats.total_loss += double(beta) * stats.aux_loss *
                                (double(aux_batches) / double(n));
        }
        stats.finite = std::isfinite(stats.total_loss) && agent.params.all_finite();
        return stats;
    }

    UpdateStats update(const Rollout<Scalar>& rollout) {
        agent.params.zero_grad();
        const auto ra = compute_returns_and_advantages(rollout);
        UpdateStats stats = accumulate_gradients(rollout, ra);
        stats.grad_norm = agent.params.grad_norm();
        stats.finite = stats.finite && std::isfinite(stats.grad_norm);
        if (!stats.finite) return stats;
        clip_global_norm(agent.params, cfg_.grad_clip_norm);
        rmsprop_step(agent.params, opt_state_, cfg_);
        agent.params.zero_grad();
        return stats;
    }

    // Forward-only evaluation of the combined loss from a frozen rollout and
    // frozen targets. Used by the finite-difference check of the assembled
    // loss; must stay consistent with accumulate_gradients.
    double loss_forward(const Rollout<Scalar>& rollout,
                        const ReturnsAndAdvantages<Scalar>& ra) const {
        const int steps = static_cast<int>(rollout.steps.size());
        const int w = cfg_.n_workers;
        const int n = steps * w;
        const double alpha = cfg_.entropy_coef;
        const double beta = aux_cfg_.beta;

        LstmState<Scalar> state = rollout.h0;
        double loss = 0;
        for (int t = 0; t < steps; ++t) {
            const StepRecord<Scalar>& rec = rollout.steps[t];
            for (int i = 0; i < w; ++i) {
                if (rec.fresh[i]) {
                    state.h.col(i).setZero();
                    state.c.col(i).setZero();
                }
            }
            AgentStepCache<Scalar> cache;
            AgentOutput<Scalar> out = agent.step(rec.obs, state, cache);
            state = out.state;
            VecX<Scalar> ent = entropy_columns(out.probs);
            for (int i = 0; i < w; ++i) {
                loss += -double(out.log_probs(rec.actions[i], i)) * double(ra.advantages(t, i));
                loss -= alpha * double(ent[i]);
                const double verr = double(out.values[i]) - double(ra.returns(t, i));
                loss += double(cfg_.value_coef) * verr * verr;
            }
            if (!rec.pairs.empty() && beta > 0) {
                for (int i = 0; i < w; ++i) {
                    PairBatch batch;
                    for (std::size_t q = 0; q < rec.pairs.size(); ++q)
                        if (rec.pair_worker[q] == i) batch.push_back(rec.pairs[q]);
                    if (batch.empty()) continue;
                    AuxStepCache<Scalar> acache;
                    MatX<Scalar> h = state.h.col(i);
                    auto res = aux_loss_for_step(h, batch, agent, acache);
                    loss += beta * double(res.loss);
                }
            }
        }
        return loss / n;
    }

    double mean_recent_return() const {
        if (recent_returns_.empty()) return 0.0;
        double s = 0;
        for (double r : recent_returns_) s += r;
        return s / double(recent_returns_.size());
    }
    long long episodes_completed() const { return episodes_completed_; }
    double total_episode_return() const { return total_episode_return_; }

    Agent<Scalar> agent;

private:
    void finish_episode(int worker) {
        recent_returns_.push_back(episode_return_[worker]);
        if (recent_returns_.size() > 100) recent_returns_.pop_front();
        total_episode_return_ += episode_return_[worker];
        ++episodes_completed_;
        episode_return_[worker] = 0.0;
        histories_[worker].clear();
        fresh_[worker] = 1;
    }

    void collect_pairs(StepRecord<Scalar>& rec, const MatX<Scalar>& h) {
        const int w = cfg_.n_workers;
        for (int i = 0; i < w; ++i) {
            Observation obs = Observation(current_obs_.col(i).template cast<float>());
            histories_[i].push(envs_[i].state().t, std::move(obs));
            PairBatch batch = sample_pairs(histories_[i], aux_cfg_, pair_rng_[i]);
            for (auto& ps : batch) {
                rec.pairs.push_back(std::move(ps));
                rec.pair_worker.push_back(i);
            }
        }
        if (rec.pairs.empty()) return;

        const auto p = static_cast<Eigen::Index>(rec.pairs.size());
        MatX<Scalar> pair_obs(agent.cfg.obs_dim, 2 * p);
        for (Eigen::Index q = 0; q < p; ++q) {
            pair_obs.col(2 * q) = rec.pairs[q].first.template cast<Scalar>();
            pair_obs.col(2 * q + 1) = rec.pairs[q].second.template cast<Scalar>();
        }
        MatX<Scalar> e = agent.trunk_forward(pair_obs, rec.pair_trunk);
        MatX<Scalar> e_i(agent.cfg.trunk2, p), e_j(agent.cfg.trunk2, p), hsel(agent.cfg.hidden, p);
        for (Eigen::Index q = 0; q < p; ++q) {
            e_i.col(q) = e.col(2 * q);
            e_j.col(q) = e.col(2 * q + 1);
            hsel.col(q) = h.col(rec.pair_worker[q]);
        }
        rec.pair_logits = agent.classify_order(hsel, e_i, e_j, rec.cls);
    }

    void backward_pairs(const StepRecord<Scalar>& rec, Scalar inv_n, Scalar beta,
                        MatX<Scalar>& dh_extra, UpdateStats& stats, int& aux_batches) {
        const auto p = static_cast<Eigen::Index>(rec.pairs.size());
        std::vector<int> batch_size(cfg_.n_workers, 0);
        for (Eigen::Index q = 0; q < p; ++q) ++batch_size[rec.pair_worker[q]];

        VecX<Scalar> dlogits(p);
        std::vector<double> worker_loss(cfg_.n_workers, 0.0);
        std::vector<int> worker_correct(cfg_.n_workers, 0);
        for (Eigen::Index q = 0; q < p; ++q) {
            const int i = rec.pair_worker[q];
            const int label = rec.pairs[q].label;
            const Scalar logit = rec.pair_logits[q];
            dlogits[q] = beta * logistic_loss_grad(logit, label) * inv_n /
                         Scalar(batch_size[i]);
            worker_loss[i] += double(logistic_loss(logit, label));
            if ((label > 0) == (logit > 0) && logit != Scalar(0)) ++worker_correct[i];
        }
        for (int i = 0; i < cfg_.n_workers; ++i) {
            if (batch_size[i] == 0) continue;
            stats.aux_loss += worker_loss[i] / batch_size[i];
            stats.aux_accuracy += double(worker_correct[i]) / batch_size[i];
            ++aux_batches;
        }

        auto cbr = agent.classify_order_backward(dlogits, rec.cls);
        for (Eigen::Index q = 0; q < p; ++q)
            dh_extra.col(rec.pair_worker[q]) += cbr.dh.col(q);
        if (!agent.cfg.stop_pair_gradient) {
            MatX<Scalar> de(agent.cfg.trunk2, 2 * p);
            for (Eigen::Index q = 0; q < p; ++q) {
                de.col(2 * q) = cbr.de_i.col(q);
                de.col(2 * q + 1) = cbr.de_j.col(q);
            }
            agent.trunk_backward(de, rec.pair_trunk);
        }
    }

    GridConfig env_cfg_;
    AuxConfig aux_cfg_;
    TrainerConfig cfg_;

    std::vector<GridEnv> envs_;
    std::vector<ObservationHistory> histories_;
    std::vector<std::mt19937_64> worker_rng_, pair_rng_;
    LstmState<Scalar> hidden_;
    MatX<Scalar> current_obs_;
    std::vector<uint8_t> fresh_ = std::vector<uint8_t>(size_t(0));
    std::vector<double> episode_return_;
    std::deque<double> recent_returns_;
    long long episodes_completed_ = 0;
    double total_episode_return_ = 0;
    RmsPropState<Scalar> opt_state_;

public:
    const TrainerConfig& config() const { return cfg_; }
    const AuxConfig& aux_config() const { return aux_cfg_; }
};

}  // namespace torl
