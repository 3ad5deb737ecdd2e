#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace torl {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct ParamEntry {
    MatX<Scalar> value;
    MatX<Scalar> grad;
};

// Flat named collection of trainable arrays and co-indexed gradients.
// std::map keeps iteration order deterministic across runs.
template <class Scalar>
class ParameterStore {
public:
    ParamEntry<Scalar>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        if (entries_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
        auto& e = entries_[name];
        e.value = MatX<Scalar>::Zero(rows, cols);
        e.grad = MatX<Scalar>::Zero(rows, cols);
        return e;
    }
    ParamEntry<Scalar>& at(const std::string& name) { return entries_.at(name); }
    const ParamEntry<Scalar>& at(const std::string& name) const { return entries_.at(name); }
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    void zero_grad() {
        for (auto& [name, e] : entries_) e.grad.setZero();
    }
    double grad_squared_norm() const {
        double s = 0;
        for (const auto& [name, e] : entries_)
            s += e.grad.template cast<double>().squaredNorm();
        return s;
    }
    double grad_norm() const { return std::sqrt(grad_squared_norm()); }
    void scale_grad(Scalar s) {
        for (auto& [name, e] : entries_) e.grad *= s;
    }
    bool all_finite() const {
        for (const auto& [name, e] : entries_)
            if (!e.value.allFinite() || !e.grad.allFinite()) return false;
        return true;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, e] : entries_) n += static_cast<std::size_t>(e.value.size());
        return n;
    }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    std::size_t size() const { return entries_.size(); }

    template <class Other>
    ParameterStore<Other> cast() const {
        ParameterStore<Other> out;
        for (const auto& [name, e] : entries_) {
            auto& o = out.add(name, e.value.rows(), e.value.cols());
            o.value = e.value.template cast<Other>();
            o.grad = e.grad.template cast<Other>();
        }
        return out;
    }

private:
    std::map<std::string, ParamEntry<Scalar>> entries_;
};

enum class Activation { Identity, Relu, Tanh };

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)); drawn in double so float and
// double instantiations seeded alike start from the same point.
template <class Scalar>
void init_uniform(MatX<Scalar>& m, int fan_in, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-std::sqrt(1.0 / fan_in),
                                                std::sqrt(1.0 / fan_in));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = static_cast<Scalar>(dist(rng));
}

template <class Scalar>
struct DenseCache {
    MatX<Scalar> input;  // in x B
    MatX<Scalar> pre;    // out x B, pre-activation
};

// W: (in x out), b: (out x 1). Columns of X are batch items.
template <class Scalar>
MatX<Scalar> dense_forward(const MatX<Scalar>& X, const ParamEntry<Scalar>& W,
                           const ParamEntry<Scalar>& b, Activation act,
                           DenseCache<Scalar>& cache) {
    if (X.rows() != W.value.rows())
        throw std::invalid_argument("dense_forward: input/weight shape mismatch");
    cache.input = X;
    cache.pre = (W.value.transpose() * X).colwise() + VecX<Scalar>(b.value.col(0));
    switch (act) {
        case Activation::Identity: return cache.pre;
        case Activation::Relu: return cache.pre.cwiseMax(Scalar(0));
        case Activation::Tanh: return cache.pre.array().tanh().matrix();
    }
    throw std::logic_error("unreachable");
}

// Accumulates parameter gradients; returns dL/dX.
template <class Scalar>
MatX<Scalar> dense_backward(const MatX<Scalar>& dY, ParamEntry<Scalar>& W,
                            ParamEntry<Scalar>& b, Activation act,
                            const DenseCache<Scalar>& cache) {
    MatX<Scalar> dZ;
    switch (act) {
        case Activation::Identity: dZ = dY; break;
        case Activation::Relu:
            dZ = ((cache.pre.array() > Scalar(0)).template cast<Scalar>() * dY.array())
                     .matrix();
            break;
        case Activation::Tanh: {
            MatX<Scalar> th = cache.pre.array().tanh().matrix();
            dZ = ((Scalar(1) - th.array().square()) * dY.array()).matrix();
            break;
        }
    }
    W.grad.noalias() += cache.input * dZ.transpose();
    b.grad.col(0).noalias() += dZ.rowwise().sum();
    return W.value * dZ;
}

template <class Scalar>
struct LstmState {
    MatX<Scalar> h;  // Nh x B
    MatX<Scalar> c;  // Nh x B

    static LstmState zero(Eigen::Index nh, Eigen::Index batch) {
        return {MatX<Scalar>::Zero(nh, batch), MatX<Scalar>::Zero(nh, batch)};
    }
};

template <class Scalar>
struct LstmCache {
    MatX<Scalar> x, h_prev, c_prev;
    MatX<Scalar> i, f, g, o;  // gate activations, Nh x B each
    MatX<Scalar> c, tanh_c;
};

// Gate order in the packed weights is [i f g o].
// wx: (in x 4Nh), wh: (Nh x 4Nh), b: (4Nh x 1).
template <class Scalar>
LstmState<Scalar> lstm_forward(const MatX<Scalar>& X, const LstmState<Scalar>& prev,
                               const ParamEntry<Scalar>& wx, const ParamEntry<Scalar>& wh,
                               const ParamEntry<Scalar>& b, LstmCache<Scalar>& cache) {
    const Eigen::Index nh = wh.value.rows();
    if (X.rows() != wx.value.rows() || prev.h.rows() != nh)
        throw std::invalid_argument("lstm_forward: shape mismatch");

    MatX<Scalar> gates = wx.value.transpose() * X + wh.value.transpose() * prev.h;
    gates.colwise() += VecX<Scalar>(b.value.col(0));

    auto sigm = [](const auto& m) {
        return (Scalar(1) / (Scalar(1) + (-m.array()).exp())).matrix().eval();
    };
    cache.x = X;
    cache.h_prev = prev.h;
    cache.c_prev = prev.c;
    cache.i = sigm(gates.middleRows(0 * nh, nh));
    cache.f = sigm(gates.middleRows(1 * nh, nh));
    cache.g = gates.middleRows(2 * nh, nh).array().tanh().matrix();
    cache.o = sigm(gates.middleRows(3 * nh, nh));
    cache.c = (cache.f.array() * prev.c.array() + cache.i.array() * cache.g.array()).matrix();
    cache.tanh_c = cache.c.array().tanh().matrix();

    LstmState<Scalar> next;
    next.c = cache.c;
    next.h = (cache.o.array() * cache.tanh_c.array()).matrix();
    return next;
}

template <class Scalar>
struct LstmBackwardResult {
    MatX<Scalar> dx, dh_prev, dc_prev;
};

template <class Scalar>
LstmBackwardResult<Scalar> lstm_backward(const MatX<Scalar>& dh, const MatX<Scalar>& dc_in,
                                         ParamEntry<Scalar>& wx, ParamEntry<Scalar>& wh,
                                         ParamEntry<Scalar>& b,
                                         const LstmCache<Scalar>& cache) {
    const Eigen::Index nh = wh.value.rows();
    const Eigen::Index batch = dh.cols();

    MatX<Scalar> dc =
        (dc_in.array() +
         dh.array() * cache.o.array() * (Scalar(1) - cache.tanh_c.array().square()))
            .matrix();
    MatX<Scalar> do_ = (dh.array() * cache.tanh_c.array()).matrix();
    MatX<Scalar> di = (dc.array() * cache.g.array()).matrix();
    MatX<Scalar> dg = (dc.array() * cache.i.array()).matrix();
    MatX<Scalar> df = (dc.array() * cache.c_prev.array()).matrix();

    MatX<Scalar> dgates(4 * nh, batch);
    dgates.middleRows(0 * nh, nh) =
        (di.array() * cache.i.array() * (Scalar(1) - cache.i.array())).matrix();
    dgates.middleRows(1 * nh, nh) =
        (df.array() * cache.f.array() * (Scalar(1) - cache.f.array())).matrix();
    dgates.middleRows(2 * nh, nh) = (dg.array() * (Scalar(1) - cache.g.array().square())).matrix();
    dgates.middleRows(3 * nh, nh) =
        (do_.array() * cache.o.array() * (Scalar(1) - cache.o.array())).matrix();

    wx.grad.noalias() += cache.x * dgates.transpose();
    wh.grad.noalias() += cache.h_prev * dgates.transpose();
    b.grad.col(0).noalias() += dgates.rowwise().sum();

    LstmBackwardResult<Scalar> out;
    out.dx = wx.value * dgates;
    out.dh_prev = wh.value * dgates;
    out.dc_prev = (dc.array() * cache.f.array()).matrix();
    return out;
}

// Column-wise softmax with max-subtraction.
template <class Scalar>
MatX<Scalar> softmax_columns(const MatX<Scalar>& logits) {
    MatX<Scalar> shifted = logits.rowwise() - logits.colwise().maxCoeff();
    MatX<Scalar> e = shifted.array().exp().matrix();
    return (e.array().rowwise() / e.colwise().sum().array()).matrix();
}

// -sum p log p per column, with 0 log 0 := 0.
template <class Scalar>
VecX<Scalar> entropy_columns(const MatX<Scalar>& dist) {
    VecX<Scalar> out(dist.cols());
    for (Eigen::Index j = 0; j < dist.cols(); ++j) {
        Scalar h = 0;
        for (Eigen::Index i = 0; i < dist.rows(); ++i) {
            const Scalar p = dist(i, j);
            if (p > Scalar(0)) h -= p * std::log(p);
        }
        out[j] = h;
    }
    return out;
}

template <class Scalar>
Scalar softplus(Scalar x) {
    return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class Scalar>
Scalar sigmoid(Scalar x) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// ln(1 + exp(-label*logit)) for label in {+1, -1}.
template <class Scalar>
Scalar logistic_loss(Scalar logit, int label) {
    return softplus(-Scalar(label) * logit);
}

// d/dlogit of logistic_loss.
template <class Scalar>
Scalar logistic_loss_grad(Scalar logit, int label) {
    return -Scalar(label) * sigmoid(-Scalar(label) * logit);
}

}  // namespace torl
