#pragma once

#include "torl/numeric.hpp"

namespace torl {

struct AgentConfig {
    int obs_dim = 13;
    int trunk1 = 64;
    int trunk2 = 64;
    int hidden = 64;        // LSTM size N_h
    int classifier_hidden = 64;
    int n_actions = 5;
    bool stop_pair_gradient = false;

    int classifier_input() const { return hidden + 2 * trunk2; }
    void validate() const {
        if (obs_dim < 1 || trunk1 < 1 || trunk2 < 1 || hidden < 1 ||
            classifier_hidden < 1 || n_actions < 2)
            throw std::invalid_argument("agent sizes must be positive");
    }
};

template <class Scalar>
struct TrunkCache {
    DenseCache<Scalar> fc1, fc2;
};

template <class Scalar>
struct ClassifierCache {
    DenseCache<Scalar> fc1, fc2;
};

template <class Scalar>
struct AgentStepCache {
    TrunkCache<Scalar> trunk;
    LstmCache<Scalar> lstm;
    DenseCache<Scalar> policy, value;
};

template <class Scalar>
struct AgentOutput {
    MatX<Scalar> probs;      // n_actions x B
    MatX<Scalar> log_probs;  // n_actions x B
    VecX<Scalar> values;     // B
    LstmState<Scalar> state;
};

// Shared trunk + LSTM with three heads: policy, value, temporal-order
// classifier. The classifier reads the same trunk entries by name, so its
// gradients shape the representation the policy sees.
template <class Scalar>
class Agent {
public:
    Agent() = default;
    Agent(const AgentConfig& config, std::mt19937_64& rng) { init(config, rng); }

    void init(const AgentConfig& config, std::mt19937_64& rng) {
        config.validate();
        cfg = config;
        params = ParameterStore<Scalar>{};

        auto dense = [&](const std::string& name, int in, int out) {
            auto& w = params.add(name + ".w", in, out);
            params.add(name + ".b", out, 1);
            init_uniform(w.value, in, rng);
        };
        dense("trunk1", cfg.obs_dim, cfg.trunk1);
        dense("trunk2", cfg.trunk1, cfg.trunk2);

        auto& wx = params.add("lstm.wx", cfg.trunk2, 4 * cfg.hidden);
        auto& wh = params.add("lstm.wh", cfg.hidden, 4 * cfg.hidden);
        auto& b = params.add("lstm.b", 4 * cfg.hidden, 1);
        init_uniform(wx.value, cfg.trunk2, rng);
        init_uniform(wh.value, cfg.hidden, rng);
        b.value.block(cfg.hidden, 0, cfg.hidden, 1).setConstant(Scalar(1));  // forget gate

        dense("policy", cfg.hidden, cfg.n_actions);
        dense("value", cfg.hidden, 1);
        dense("cls1", cfg.classifier_input(), cfg.classifier_hidden);
        dense("cls2", cfg.classifier_hidden, 1);
    }

    MatX<Scalar> trunk_forward(const MatX<Scalar>& obs, TrunkCache<Scalar>& cache) const {
        MatX<Scalar> a = dense_forward(obs, params.at("trunk1.w"), params.at("trunk1.b"),
                                       Activation::Relu, cache.fc1);
        return dense_forward(a, params.at("trunk2.w"), params.at("trunk2.b"), Activation::Relu,
                             cache.fc2);
    }

    void trunk_backward(const MatX<Scalar>& de, const TrunkCache<Scalar>& cache) {
        MatX<Scalar> da = dense_backward(de, params.at("trunk2.w"), params.at("trunk2.b"),
                                         Activation::Relu, cache.fc2);
        dense_backward(da, params.at("trunk1.w"), params.at("trunk1.b"), Activation::Relu,
                       cache.fc1);
    }

    AgentOutput<Scalar> step(const MatX<Scalar>& obs, const LstmState<Scalar>& prev,
                             AgentStepCache<Scalar>& cache) const {
        MatX<Scalar> e = trunk_forward(obs, cache.trunk);
        AgentOutput<Scalar> out;
        out.state = lstm_forward(e, prev, params.at("lstm.wx"), params.at("lstm.wh"),
                                 params.at("lstm.b"), cache.lstm);
        MatX<Scalar> logits = dense_forward(out.state.h, params.at("policy.w"),
                                            params.at("policy.b"), Activation::Identity,
                                            cache.policy);
        out.probs = softmax_columns(logits);
        out.log_probs = out.probs.array().log().matrix();
        MatX<Scalar> v = dense_forward(out.state.h, params.at("value.w"), params.at("value.b"),
                                       Activation::Identity, cache.value);
        out.values = v.row(0).transpose();
        return out;
    }

    struct StepBackwardResult {
        MatX<Scalar> dh_prev, dc_prev;
    };

    // dlogits/dvalues are gradients w.r.t. the policy logits and value
    // outputs; dh_extra carries classifier gradients into h_t; dh_next /
    // dc_next arrive from the following timestep's LSTM backward.
    StepBackwardResult step_backward(const MatX<Scalar>& dlogits, const MatX<Scalar>& dvalues,
                                     const MatX<Scalar>& dh_extra, const MatX<Scalar>& dh_next,
                                     const MatX<Scalar>& dc_next,
                                     const AgentStepCache<Scalar>& cache) {
        MatX<Scalar> dh = dense_backward(dlogits, params.at("policy.w"), params.at("policy.b"),
                                         Activation::Identity, cache.policy);
        dh += dense_backward(dvalues, params.at("value.w"), params.at("value.b"),
                             Activation::Identity, cache.value);
        dh += dh_extra;
        dh += dh_next;
        auto r = lstm_backward(dh, dc_next, params.at("lstm.wx"), params.at("lstm.wh"),
                               params.at("lstm.b"), cache.lstm);
        trunk_backward(r.dx, cache.trunk);
        return {std::move(r.dh_prev), std::move(r.dc_prev)};
    }

    // Order classifier over concat(h, e_i, e_j); a positive logit predicts
    // that e_i's observation came first.
    VecX<Scalar> classify_order(const MatX<Scalar>& h, const MatX<Scalar>& e_i,
                                const MatX<Scalar>& e_j, ClassifierCache<Scalar>& cache) const {
        const Eigen::Index batch = h.cols();
        MatX<Scalar> in(cfg.classifier_input(), batch);
        in.topRows(cfg.hidden) = h;
        in.middleRows(cfg.hidden, cfg.trunk2) = e_i;
        in.bottomRows(cfg.trunk2) = e_j;
        MatX<Scalar> a = dense_forward(in, params.at("cls1.w"), params.at("cls1.b"),
                                       Activation::Relu, cache.fc1);
        MatX<Scalar> logits = dense_forward(a, params.at("cls2.w"), params.at("cls2.b"),
                                            Activation::Identity, cache.fc2);
        return logits.row(0).transpose();
    }

    struct ClassifierBackwardResult {
        MatX<Scalar> dh, de_i, de_j;
    };

    ClassifierBackwardResult classify_order_backward(const VecX<Scalar>& dlogits,
                                                     const ClassifierCache<Scalar>& cache) {
        MatX<Scalar> dtop(1, dlogits.size());
        dtop.row(0) = dlogits.transpose();
        MatX<Scalar> da = dense_backward(dtop, params.at("cls2.w"), params.at("cls2.b"),
                                         Activation::Identity, cache.fc2);
        MatX<Scalar> din = dense_backward(da, params.at("cls1.w"), params.at("cls1.b"),
                                          Activation::Relu, cache.fc1);
        ClassifierBackwardResult out;
        out.dh = din.topRows(cfg.hidden);
        out.de_i = din.middleRows(cfg.hidden, cfg.trunk2);
        out.de_j = din.bottomRows(cfg.trunk2);
        return out;
    }

    AgentConfig cfg;
    ParameterStore<Scalar> params;
};

// action ~ policy; returns (action index, log-probability of that action).
template <class Scalar>
std::pair<int, Scalar> sample_action(const VecX<Scalar>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0;
    int action = static_cast<int>(probs.size()) - 1;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        cum += static_cast<double>(probs[i]);
        if (u < cum) {
            action = static_cast<int>(i);
            break;
        }
    }
    return {action, std::log(probs[action])};
}

}  // namespace torl
