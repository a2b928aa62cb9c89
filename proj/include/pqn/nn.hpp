#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pqn/autodiff.hpp"
#include "pqn/rng.hpp"

namespace pqn {

enum class Activation { None, Tanh, Sigmoid };

inline Tape::NodeId dense_on_tape(Tape& tape, Tape::NodeId x, const ParamTensor& W,
                                  const ParamTensor& b, Activation act) {
    Tape::NodeId pre = tape.affine(W, x, &b);
    switch (act) {
    case Activation::None:
        return pre;
    case Activation::Tanh:
        return tape.tanh(pre);
    case Activation::Sigmoid:
        return tape.sigmoid(pre);
    }
    throw std::invalid_argument("dense_on_tape: unknown activation");
}

/// activation(W x + b) as plain values.
inline Vec dense_forward(const Vec& x, const ParamTensor& W, const ParamTensor& b,
                         Activation act) {
    Tape tape(false);
    return tape.val(dense_on_tape(tape, tape.input(x), W, b, act));
}

/// Hidden and cell vectors of one LSTM cell.
struct LstmCellState {
    Vec h;
    Vec c;
};

struct LstmNodeState {
    Tape::NodeId h;
    Tape::NodeId c;
};

/// Fused LSTM cell parameters; gate order along the rows is
/// [input, forget, candidate, output].
struct LstmParams {
    ParamTensor Wx; // (4k, input_dim)
    ParamTensor Wh; // (4k, k)
    ParamTensor b;  // (4k)

    LstmParams() = default;
    LstmParams(const std::string& prefix, std::size_t hidden, std::size_t input_dim)
        : Wx(prefix + ".Wx", {4 * hidden, input_dim}),
          Wh(prefix + ".Wh", {4 * hidden, hidden}),
          b(prefix + ".b", {4 * hidden}) {}

    std::size_t hidden_size() const { return Wh.cols(); }
};

inline LstmNodeState lstm_step_on_tape(Tape& tape, Tape::NodeId x, const LstmNodeState& prev,
                                       const LstmParams& params) {
    std::size_t k = params.hidden_size();
    Tape::NodeId pre = tape.affine2(params.Wx, x, params.Wh, prev.h, params.b);
    Tape::NodeId gate_i = tape.sigmoid(tape.slice(pre, 0, k));
    Tape::NodeId gate_f = tape.sigmoid(tape.slice(pre, k, k));
    Tape::NodeId gate_g = tape.tanh(tape.slice(pre, 2 * k, k));
    Tape::NodeId gate_o = tape.sigmoid(tape.slice(pre, 3 * k, k));
    Tape::NodeId c = tape.add(tape.mul(gate_f, prev.c), tape.mul(gate_i, gate_g));
    Tape::NodeId h = tape.mul(gate_o, tape.tanh(c));
    return {h, c};
}

/// One gated update as plain values; returns the new (h, c).
inline LstmCellState lstm_step(const Vec& x, const LstmCellState& prev,
                               const LstmParams& params) {
    if (prev.h.size() != params.hidden_size() || prev.c.size() != params.hidden_size())
        throw std::invalid_argument("lstm_step: state size does not match hidden size");
    Tape tape(false);
    LstmNodeState state =
        lstm_step_on_tape(tape, tape.input(x), {tape.input(prev.h), tape.input(prev.c)}, params);
    return {tape.val(state.h), tape.val(state.c)};
}

/// Fills a parameter with draws from U(-bound, bound).
inline void init_uniform(ParamTensor& p, Rng& rng, double bound = 0.08) {
    for (double& v : p.values)
        v = rng.uniform(-bound, bound);
}

/// Adam over a fixed list of parameters. step() applies one bias-corrected
/// update from the accumulated gradients and then clears them.
class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<ParamTensor*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->size(), 0.0);
            v_[i].assign(params_[i]->size(), 0.0);
        }
    }

    long step_count() const { return t_; }
    double learning_rate() const { return lr_; }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            ParamTensor& p = *params_[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                double g = p.grad[j];
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
                double mhat = m_[i][j] / bc1;
                double vhat = v_[i][j] / bc2;
                p.values[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
            p.zero_grad();
        }
    }

  private:
    std::vector<ParamTensor*> params_;
    std::vector<Vec> m_;
    std::vector<Vec> v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

} // namespace pqn
