#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pqn/autodiff.hpp"
#include "pqn/mdp.hpp"
#include "pqn/nn.hpp"
#include "pqn/pointer.hpp"
#include "pqn/rng.hpp"

namespace pqn {

/// One-hidden-layer scorer of state-action pairs through their context
/// vectors: tanh hidden layer, linear scalar output. Outputs are clamped to
/// [q_floor, 1/(1-gamma)]; the floor sits just above zero so the reciprocal
/// temperature 1/Q stays finite.
struct QNetwork {
    ParamTensor W1; // (hidden, k)
    ParamTensor b1; // (hidden)
    ParamTensor w2; // (hidden)
    ParamTensor b2; // (1)
    double q_floor = 1e-3;
    double q_ceil = 20.0;

    QNetwork() = default;
    QNetwork(std::size_t k, std::size_t hidden, double gamma, const std::string& prefix = "q")
        : W1(prefix + ".W1", {hidden, k}), b1(prefix + ".b1", {hidden}),
          w2(prefix + ".w2", {hidden}), b2(prefix + ".b2", {1}) {
        if (!(gamma >= 0.0 && gamma < 1.0))
            throw std::invalid_argument("QNetwork: gamma must lie in [0, 1)");
        q_ceil = 1.0 / (1.0 - gamma);
    }

    template <class F> void for_each_param(F&& fn) {
        fn(W1);
        fn(b1);
        fn(w2);
        fn(b2);
    }

    void init(Rng& rng, double bound = 0.08) {
        for_each_param([&](ParamTensor& p) { init_uniform(p, rng, bound); });
    }

    void copy_values_from(const QNetwork& other) {
        W1.values = other.W1.values;
        b1.values = other.b1.values;
        w2.values = other.w2.values;
        b2.values = other.b2.values;
        q_floor = other.q_floor;
        q_ceil = other.q_ceil;
    }
};

/// Unclamped network output. The TD regression trains on this so that the
/// clamp cannot freeze learning when an initialization lands outside the
/// bounds; every consumer of Q-values (temperatures, bootstrap targets,
/// logging) goes through the clamped form instead.
inline Tape::NodeId q_raw_on_tape(Tape& tape, const QNetwork& net, Tape::NodeId context) {
    Tape::NodeId hidden = tape.tanh(tape.affine(net.W1, context, &net.b1));
    return tape.add(tape.dot_param(net.w2, hidden), tape.param_leaf(net.b2));
}

inline Tape::NodeId q_value_on_tape(Tape& tape, const QNetwork& net, Tape::NodeId context) {
    return tape.clamp(q_raw_on_tape(tape, net, context), net.q_floor, net.q_ceil);
}

/// Clamped Q-value of one context vector.
inline double q_value(const QNetwork& net, const Vec& context) {
    Tape tape(false);
    return tape.scalar(q_value_on_tape(tape, net, tape.input(context)));
}

/// Delayed copy of the Q-network used for TD targets; refreshed by
/// sync_target and never trained directly.
struct TargetNetwork {
    QNetwork net;
    long staleness = 0; // steps since the last sync

    TargetNetwork() = default;
    explicit TargetNetwork(const QNetwork& source) : net(source) { net.copy_values_from(source); }
};

/// Copies net into target when step is a multiple of C. Never touches net.
inline void sync_target(const QNetwork& net, TargetNetwork& target, int C, long step) {
    if (C < 1)
        throw std::invalid_argument("sync_target: C must be at least 1");
    ++target.staleness;
    if (step % C == 0) {
        target.net.copy_values_from(net);
        target.staleness = 0;
    }
}

/// TD target: r when terminal, else r + gamma * max over the next state's
/// feasible Q-values (computed with the target network by the caller).
inline double td_target(double r, const Vec& next_feasible_q, bool terminal, double gamma) {
    if (terminal)
        return r;
    if (next_feasible_q.empty())
        throw std::invalid_argument("td_target: non-terminal state with no feasible actions");
    return r + gamma * *std::max_element(next_feasible_q.begin(), next_feasible_q.end());
}

/// Replay record; states are stored as visited-city snapshots so their
/// contexts can be recomputed with whatever the encoder/decoder parameters
/// are at update time.
struct Transition {
    int instance = 0; // index into the training instance set
    std::vector<int> visited;
    int action = 0;
    double reward = 0.0;
    std::vector<int> next_visited;
    bool terminal = false;
};

/// Bounded FIFO of transitions with uniform without-replacement sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0)
            throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }

    void push(Transition t) {
        items_.push_back(std::move(t));
        if (items_.size() > capacity_)
            items_.pop_front();
    }

    /// Uniform sample of batch_size distinct stored transitions, or nullopt
    /// when fewer than batch_size are stored (caller skips the update).
    std::optional<std::vector<Transition>> sample(std::size_t batch_size, Rng& rng) const {
        if (items_.size() < batch_size)
            return std::nullopt;
        std::vector<Transition> batch;
        batch.reserve(batch_size);
        for (std::size_t idx : rng.sample_without_replacement(items_.size(), batch_size))
            batch.push_back(items_[idx]);
        return batch;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }

  private:
    std::deque<Transition> items_;
    std::size_t capacity_;
};

/// Per-epoch encoder cache: embeddings, final state, and the W2-projected
/// embeddings used to assemble contexts cheaply. Valid as long as the
/// pointer parameters do not change.
struct EncodeCache {
    EncodedInstance enc;
    std::vector<Vec> w2e; // W2 * e_a per city
};

inline EncodeCache build_encode_cache(const TspInstance& instance, const PointerParams& params) {
    EncodeCache cache;
    cache.enc = encode(instance, params);
    Tape tape(false);
    for (const Vec& e : cache.enc.embeddings)
        cache.w2e.push_back(tape.val(tape.affine(params.attention.W2, tape.input(e))));
    return cache;
}

/// (instance, visited-prefix) key for the training-loop memo tables.
struct PrefixKey {
    int instance = 0;
    std::vector<int> visited;
    bool operator==(const PrefixKey& other) const = default;
};

struct PrefixKeyHash {
    std::size_t operator()(const PrefixKey& key) const {
        std::size_t h = 1469598103934665603ull; // FNV-1a
        auto mix = [&](std::size_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(static_cast<std::size_t>(key.instance));
        for (int city : key.visited)
            mix(static_cast<std::size_t>(city) + 0x9e3779b9u);
        return h;
    }
};

namespace detail {

/// Decoder state h for a visited prefix together with W1 h, the half of the
/// context that does not depend on the scored action.
struct PrefixFeatures {
    Vec h;
    Vec w1h;
};

inline PrefixFeatures prefix_features(const std::vector<int>& visited,
                                      const EncodedInstance& enc, const PointerParams& params) {
    PrefixFeatures features;
    features.h = decode_prefix(visited, enc, params).h;
    Tape tape(false);
    features.w1h = tape.val(tape.affine(params.attention.W1, tape.input(features.h)));
    return features;
}

inline Vec context_from_features(const PrefixFeatures& features, const Vec& w2e) {
    Vec ctx(features.w1h.size());
    for (std::size_t i = 0; i < ctx.size(); ++i)
        ctx[i] = std::tanh(features.w1h[i] + w2e[i]);
    return ctx;
}

} // namespace detail

using PrefixFeatureMemo =
    std::unordered_map<PrefixKey, detail::PrefixFeatures, PrefixKeyHash>;
using NextMaxQMemo = std::unordered_map<PrefixKey, double, PrefixKeyHash>;

/// Everything td_loss needs to rebuild contexts from state snapshots. The
/// memo tables are pure caches owned by the trainer: prefix features stay
/// valid while the pointer parameters are frozen (within an epoch), the
/// bootstrap values additionally require an unchanged target network
/// (between syncs). Recomputing them gives bitwise-identical results.
struct TdLossContext {
    const PointerParams& pointer;
    const std::vector<TspInstance>& instances; // encoding sources (with coords)
    double gamma = 0.95;
    bool grads_into_pointer = false; // extend TD gradients into the sequence model
    const std::vector<EncodeCache>* caches = nullptr; // optional, value path only
    PrefixFeatureMemo* prefix_memo = nullptr;
    NextMaxQMemo* next_max_q_memo = nullptr;
};

/// Mean squared TD error over a batch, built on the given tape. The taken
/// action's score is the online network's raw output (differentiable, no
/// clamp in the regression); the bootstrap branch takes clamped target-net
/// values and is detached. With grads_into_pointer the contexts are rebuilt
/// on the tape so the TD gradient also reaches the embedding/LSTM/attention
/// parameters.
inline Tape::NodeId td_loss_on_tape(Tape& tape, const std::vector<Transition>& batch,
                                    const QNetwork& net, const TargetNetwork& target,
                                    const TdLossContext& ctx) {
    if (batch.empty())
        throw std::invalid_argument("td_loss: empty batch");

    // Value-path caches shared across the batch; the bootstrap branch always
    // reads from these since it is detached.
    std::vector<EncodeCache> local_caches;
    const std::vector<EncodeCache>* caches = ctx.caches;
    if (!caches) {
        for (const auto& inst : ctx.instances)
            local_caches.push_back(build_encode_cache(inst, ctx.pointer));
        caches = &local_caches;
    }
    // Recording-path caches: one encoding per distinct instance on the tape.
    std::unordered_map<int, EncodedTape> tape_enc;

    auto features_for = [&](int instance, const std::vector<int>& visited)
        -> detail::PrefixFeatures {
        if (ctx.prefix_memo) {
            PrefixKey key{instance, visited};
            auto it = ctx.prefix_memo->find(key);
            if (it == ctx.prefix_memo->end())
                it = ctx.prefix_memo
                         ->emplace(std::move(key),
                                   detail::prefix_features(visited, (*caches)[instance].enc,
                                                           ctx.pointer))
                         .first;
            return it->second;
        }
        return detail::prefix_features(visited, (*caches)[instance].enc, ctx.pointer);
    };

    std::vector<Tape::NodeId> squared_errors;
    squared_errors.reserve(batch.size());
    for (const Transition& tr : batch) {
        const TspInstance& inst = ctx.instances.at(tr.instance);

        // Bootstrap target, always detached.
        double y = tr.reward;
        if (!tr.terminal) {
            double max_next_q = 0.0;
            bool memoized = false;
            PrefixKey key{tr.instance, tr.next_visited};
            if (ctx.next_max_q_memo) {
                auto it = ctx.next_max_q_memo->find(key);
                if (it != ctx.next_max_q_memo->end()) {
                    max_next_q = it->second;
                    memoized = true;
                }
            }
            if (!memoized) {
                const EncodeCache& cache = (*caches)[tr.instance];
                auto features = features_for(tr.instance, tr.next_visited);
                Vec next_q;
                std::vector<char> visited_mask(inst.n, 0);
                for (int c : tr.next_visited)
                    visited_mask[c] = 1;
                for (int city = 0; city < inst.n; ++city)
                    if (!visited_mask[city])
                        next_q.push_back(q_value(
                            target.net,
                            detail::context_from_features(features, cache.w2e[city])));
                if (next_q.empty())
                    throw std::invalid_argument(
                        "td_loss: non-terminal transition with no feasible next action");
                max_next_q = *std::max_element(next_q.begin(), next_q.end());
                if (ctx.next_max_q_memo)
                    ctx.next_max_q_memo->emplace(std::move(key), max_next_q);
            }
            y = td_target(tr.reward, {max_next_q}, tr.terminal, ctx.gamma);
        }

        // Differentiable Q(s, a).
        Tape::NodeId q_sa;
        if (ctx.grads_into_pointer) {
            auto [it, fresh] = tape_enc.try_emplace(tr.instance);
            if (fresh)
                it->second = encode_on_tape(tape, inst, ctx.pointer);
            const EncodedTape& enc = it->second;
            LstmNodeState state = lstm_step_on_tape(
                tape, tape.param_leaf(ctx.pointer.start_token), enc.final_state,
                ctx.pointer.decoder);
            for (std::size_t i = 1; i < tr.visited.size(); ++i)
                state = lstm_step_on_tape(tape, enc.embeddings[tr.visited[i]], state,
                                          ctx.pointer.decoder);
            Tape::NodeId context = tape.tanh(
                tape.add(tape.affine(ctx.pointer.attention.W1, state.h),
                         tape.affine(ctx.pointer.attention.W2, enc.embeddings[tr.action])));
            q_sa = q_raw_on_tape(tape, net, context);
        } else {
            const EncodeCache& cache = (*caches)[tr.instance];
            auto features = features_for(tr.instance, tr.visited);
            Vec context = detail::context_from_features(features, cache.w2e[tr.action]);
            q_sa = q_raw_on_tape(tape, net, tape.input(context));
        }
        squared_errors.push_back(tape.square(tape.sub_scalar(q_sa, y)));
    }
    return tape.mean(tape.concat(squared_errors));
}

/// Scalar TD loss without gradients.
inline double td_loss(const std::vector<Transition>& batch, const QNetwork& net,
                      const TargetNetwork& target, const TdLossContext& ctx) {
    Tape tape(false);
    return tape.scalar(td_loss_on_tape(tape, batch, net, target, ctx));
}

} // namespace pqn
