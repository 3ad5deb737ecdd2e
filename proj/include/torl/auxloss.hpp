#pragma once

#include <deque>
#include <optional>

#include "torl/agent.hpp"
#include "torl/env.hpp"

namespace torl {

struct AuxConfig {
    bool enabled = true;
    int k = 10;              // window of most recent observations
    int pairs_per_step = 2;  // total pairs; half sampled, half their reversals
    float beta = 0.1f;       // loss weight; 0 reproduces the baseline

    void validate() const {
        if (k < 2) throw std::invalid_argument("aux k must be >= 2");
        if (pairs_per_step < 2 || pairs_per_step % 2 != 0)
            throw std::invalid_argument("pairs_per_step must be even and >= 2");
        if (beta < 0) throw std::invalid_argument("beta must be >= 0");
    }
    bool active() const { return enabled && beta > 0; }
};

// Ring buffer of the last k observations of the current episode, keyed by
// absolute episode timestep. Cleared on reset.
class ObservationHistory {
public:
    explicit ObservationHistory(int k) : k_(k) {}

    void push(int index, Observation obs) {
        if (!buf_.empty() && index <= buf_.back().first)
            throw std::invalid_argument("history indices must be strictly increasing");
        buf_.emplace_back(index, std::move(obs));
        if (static_cast<int>(buf_.size()) > k_) buf_.pop_front();
    }
    void clear() { buf_.clear(); }
    int size() const { return static_cast<int>(buf_.size()); }
    int index_at(int i) const { return buf_[i].first; }
    const Observation& obs_at(int i) const { return buf_[i].second; }

private:
    int k_;
    std::deque<std::pair<int, Observation>> buf_;
};

struct PairSample {
    Observation first, second;
    int first_index = 0, second_index = 0;
    int label = 0;  // +1 iff first_index < second_index
};
using PairBatch = std::vector<PairSample>;

// Draws pairs_per_step/2 index pairs (a < b) uniformly without replacement
// from the window and emits each in both orders, so every batch is balanced
// by construction. Histories with fewer than 2 entries yield an empty batch.
inline PairBatch sample_pairs(const ObservationHistory& history, const AuxConfig& config,
                              std::mt19937_64& rng) {
    PairBatch batch;
    const int n = history.size();
    if (n < 2) return batch;

    std::vector<std::pair<int, int>> all;
    all.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) all.emplace_back(a, b);

    const int want = std::min<int>(config.pairs_per_step / 2, static_cast<int>(all.size()));
    for (int i = 0; i < want; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(all.size()) - 1);
        std::swap(all[i], all[pick(rng)]);
        const auto [a, b] = all[i];
        batch.push_back({history.obs_at(a), history.obs_at(b), history.index_at(a),
                         history.index_at(b), +1});
        batch.push_back({history.obs_at(b), history.obs_at(a), history.index_at(b),
                         history.index_at(a), -1});
    }
    return batch;
}

template <class Scalar>
struct AuxStepCache {
    TrunkCache<Scalar> trunk;           // over the 2P stacked pair observations
    ClassifierCache<Scalar> classifier;
    VecX<Scalar> logits;                // P
    std::vector<int> labels;
};

template <class Scalar>
struct AuxStepResult {
    Scalar loss = 0;                    // mean logistic loss, pre-beta
    std::optional<Scalar> accuracy;     // absent for empty batches
};

// Forward pass of the auxiliary loss for one worker at one timestep.
// h is the worker's hidden state as an N_h x 1 column.
template <class Scalar>
AuxStepResult<Scalar> aux_loss_for_step(const MatX<Scalar>& h, const PairBatch& batch,
                                        const Agent<Scalar>& agent,
                                        AuxStepCache<Scalar>& cache) {
    AuxStepResult<Scalar> out;
    if (batch.empty()) return out;

    const auto p = static_cast<Eigen::Index>(batch.size());
    MatX<Scalar> obs(agent.cfg.obs_dim, 2 * p);
    cache.labels.resize(batch.size());
    for (Eigen::Index i = 0; i < p; ++i) {
        obs.col(2 * i) = batch[i].first.template cast<Scalar>();
        obs.col(2 * i + 1) = batch[i].second.template cast<Scalar>();
        cache.labels[i] = batch[i].label;
    }
    MatX<Scalar> e = agent.trunk_forward(obs, cache.trunk);
    MatX<Scalar> e_i(agent.cfg.trunk2, p), e_j(agent.cfg.trunk2, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        e_i.col(i) = e.col(2 * i);
        e_j.col(i) = e.col(2 * i + 1);
    }
    MatX<Scalar> hrep = h.col(0).replicate(1, p);
    cache.logits = agent.classify_order(hrep, e_i, e_j, cache.classifier);

    Scalar loss = 0;
    int correct = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        loss += logistic_loss(cache.logits[i], cache.labels[i]);
        const bool right = (cache.labels[i] > 0) == (cache.logits[i] > 0) &&
                           cache.logits[i] != Scalar(0);
        if (right) ++correct;
    }
    out.loss = loss / Scalar(p);
    out.accuracy = Scalar(correct) / Scalar(p);
    return out;
}

}  // namespace torl
