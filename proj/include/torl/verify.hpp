#pragma once

#include <vector>

#include "torl/gradcheck.hpp"
#include "torl/trainer.hpp"

namespace torl::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_rel_error = 0.0;
};

inline constexpr double kTolerance = 1e-4;

// loss = sum_k coeff_k * y_k over the layer output, random small instance.
inline CheckResult check_dense(Activation act, const std::string& name, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int in = 4, out = 3, batch = 2;

    ParameterStore<double> store;
    auto& w = store.add("w", in, out);
    auto& b = store.add("b", out, 1);
    init_uniform(w.value, in, rng);
    init_uniform(b.value, out, rng);

    MatX<double> x(in, batch), coeff(out, batch);
    init_uniform(x, 1, rng);
    init_uniform(coeff, 1, rng);

    auto loss_fn = [&]() {
        DenseCache<double> cache;
        MatX<double> y = dense_forward(x, store.at("w"), store.at("b"), act, cache);
        return (y.array() * coeff.array()).sum();
    };
    DenseCache<double> cache;
    dense_forward(x, store.at("w"), store.at("b"), act, cache);
    dense_backward(coeff, store.at("w"), store.at("b"), act, cache);

    auto report = check_gradients(store, loss_fn, kTolerance);
    return {name, report.pass, report.max_rel_error};
}

// 5-step unroll from zero state; loss sums coeff-weighted h_t at every step.
inline CheckResult check_lstm_unroll(std::uint64_t seed, int nh = 8, int in = 5,
                                     int steps = 5) {
    std::mt19937_64 rng(seed);
    ParameterStore<double> store;
    auto& wx = store.add("wx", in, 4 * nh);
    auto& wh = store.add("wh", nh, 4 * nh);
    auto& b = store.add("b", 4 * nh, 1);
    init_uniform(wx.value, in, rng);
    init_uniform(wh.value, nh, rng);
    b.value.block(nh, 0, nh, 1).setConstant(1.0);

    std::vector<MatX<double>> xs(steps), coeffs(steps);
    for (int t = 0; t < steps; ++t) {
        xs[t].resize(in, 1);
        coeffs[t].resize(nh, 1);
        init_uniform(xs[t], 1, rng);
        init_uniform(coeffs[t], 1, rng);
    }

    auto loss_fn = [&]() {
        LstmState<double> state = LstmState<double>::zero(nh, 1);
        double loss = 0;
        for (int t = 0; t < steps; ++t) {
            LstmCache<double> cache;
            state = lstm_forward(xs[t], state, store.at("wx"), store.at("wh"), store.at("b"),
                                 cache);
            loss += (state.h.array() * coeffs[t].array()).sum();
        }
        return loss;
    };

    std::vector<LstmCache<double>> caches(steps);
    LstmState<double> state = LstmState<double>::zero(nh, 1);
    for (int t = 0; t < steps; ++t)
        state = lstm_forward(xs[t], state, store.at("wx"), store.at("wh"), store.at("b"),
                             caches[t]);
    MatX<double> dh = MatX<double>::Zero(nh, 1), dc = MatX<double>::Zero(nh, 1);
    for (int t = steps - 1; t >= 0; --t) {
        dh += coeffs[t];
        auto r = lstm_backward(dh, dc, store.at("wx"), store.at("wh"), store.at("b"),
                               caches[t]);
        dh = r.dh_prev;
        dc = r.dc_prev;
    }

    auto report = check_gradients(store, loss_fn, kTolerance);
    return {"lstm 5-step unroll", report.pass, report.max_rel_error};
}

inline AgentConfig tiny_agent_config() {
    AgentConfig cfg;
    cfg.trunk1 = 8;
    cfg.trunk2 = 8;
    cfg.hidden = 8;
    cfg.classifier_hidden = 8;
    return cfg;
}

// Classifier + shared trunk, with h held constant.
inline CheckResult check_classifier_path(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Agent<double> agent(tiny_agent_config(), rng);
    GridConfig grid;

    MatX<double> h(agent.cfg.hidden, 1);
    init_uniform(h, 1, rng);

    PairBatch batch;
    std::mt19937_64 env_rng(seed + 1);
    auto [s1, o1] = reset(grid, env_rng);
    auto [s2, o2] = reset(grid, env_rng);
    batch.push_back({o1, o2, 2, 5, +1});
    batch.push_back({o2, o1, 5, 2, -1});

    auto loss_fn = [&]() {
        AuxStepCache<double> cache;
        return aux_loss_for_step(h, batch, agent, cache).loss;
    };

    AuxStepCache<double> cache;
    aux_loss_for_step(h, batch, agent, cache);
    const auto p = static_cast<Eigen::Index>(batch.size());
    VecX<double> dlogits(p);
    for (Eigen::Index i = 0; i < p; ++i)
        dlogits[i] = logistic_loss_grad(cache.logits[i], cache.labels[i]) / double(p);
    auto cbr = agent.classify_order_backward(dlogits, cache.classifier);
    MatX<double> de(agent.cfg.trunk2, 2 * p);
    for (Eigen::Index i = 0; i < p; ++i) {
        de.col(2 * i) = cbr.de_i.col(i);
        de.col(2 * i + 1) = cbr.de_j.col(i);
    }
    agent.trunk_backward(de, cache.trunk);

    auto report = check_gradients(agent.params, loss_fn, kTolerance);
    return {"classifier path", report.pass, report.max_rel_error};
}

// Fully assembled loss on a tiny agent over a short collected rollout, with
// targets and advantages frozen at the base parameters.
inline CheckResult check_full_loss(std::uint64_t seed) {
    GridConfig grid;
    AuxConfig aux;
    aux.k = 5;
    aux.beta = 0.1f;
    TrainerConfig tc;
    tc.n_workers = 2;
    tc.rollout_len = 5;

    Trainer<double> trainer(grid, tiny_agent_config(), aux, tc, seed);
    Rollout<double> rollout = trainer.collect();
    const auto ra = trainer.compute_returns_and_advantages(rollout);

    trainer.agent.params.zero_grad();
    trainer.accumulate_gradients(rollout, ra);

    auto loss_fn = [&]() { return trainer.loss_forward(rollout, ra); };
    auto report = check_gradients(trainer.agent.params, loss_fn, kTolerance);
    return {"assembled loss (tiny agent)", report.pass, report.max_rel_error};
}

// Sign-flipped backward must be caught.
inline CheckResult check_negative_control(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int in = 4, out = 3;
    ParameterStore<double> store;
    auto& w = store.add("w", in, out);
    auto& b = store.add("b", out, 1);
    init_uniform(w.value, in, rng);
    init_uniform(b.value, out, rng);
    MatX<double> x(in, 1), coeff(out, 1);
    init_uniform(x, 1, rng);
    init_uniform(coeff, 1, rng);

    auto loss_fn = [&]() {
        DenseCache<double> cache;
        MatX<double> y = dense_forward(x, store.at("w"), store.at("b"), Activation::Tanh, cache);
        return (y.array() * coeff.array()).sum();
    };
    DenseCache<double> cache;
    dense_forward(x, store.at("w"), store.at("b"), Activation::Tanh, cache);
    dense_backward(coeff, store.at("w"), store.at("b"), Activation::Tanh, cache);
    store.scale_grad(-1.0);  // corrupt

    auto report = check_gradients(store, loss_fn, kTolerance);
    return {"negative control (corrupted backward)", !report.pass, report.max_rel_error};
}

inline std::vector<CheckResult> run_gradient_suite(std::uint64_t seed = 20240913) {
    return {
        check_dense(Activation::Identity, "dense identity", seed),
        check_dense(Activation::Relu, "dense relu", seed + 1),
        check_dense(Activation::Tanh, "dense tanh", seed + 2),
        check_lstm_unroll(seed + 3),
        check_classifier_path(seed + 4),
        check_full_loss(seed + 5),
        check_negative_control(seed + 6),
    };
}

}  // namespace torl::verify
