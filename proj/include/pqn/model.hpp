#pragma once

#include <string>

#include "pqn/pointer.hpp"
#include "pqn/qnet.hpp"
#include "pqn/rng.hpp"

namespace pqn {

/// The full trainable model: sequence model, Q-network, and its target copy.
/// tempered == true gives the Q-tempered policy; false gives the plain
/// pointer-softmax baseline sharing the same architecture.
struct ModelParams {
    PointerParams pointer;
    QNetwork qnet;
    TargetNetwork target;
    bool tempered = true;
    double gamma = 0.95;

    static ModelParams make(std::size_t hidden, std::size_t q_hidden, double gamma,
                            bool tempered, Rng& rng) {
        ModelParams model;
        model.pointer = PointerParams(hidden);
        model.pointer.init(rng);
        model.qnet = QNetwork(hidden, q_hidden == 0 ? hidden : q_hidden, gamma);
        model.qnet.init(rng);
        model.target = TargetNetwork(model.qnet);
        model.tempered = tempered;
        model.gamma = gamma;
        return model;
    }

    /// Visits every trainable array (including the target copy) with a
    /// stable name, for checkpoints.
    template <class F> void for_each_param(F&& fn) {
        pointer.for_each_param([&](ParamTensor& p) { fn(p.name, p); });
        qnet.for_each_param([&](ParamTensor& p) { fn(p.name, p); });
        target.net.for_each_param([&](ParamTensor& p) { fn("target." + p.name, p); });
    }
};

} // namespace pqn
