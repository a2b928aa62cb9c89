#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pqn/mdp.hpp"
#include "pqn/model.hpp"
#include "pqn/policy.hpp"
#include "pqn/pointer.hpp"
#include "pqn/qnet.hpp"
#include "pqn/tsp.hpp"

namespace pqn {

struct TrainConfig {
    int hidden = 128;           // k
    int q_hidden = 0;           // 0 means "same as hidden"
    int batch_size = 64;
    double lr_ptr = 0.1;        // sequence-model optimizer
    double lr_q = 0.01;         // Q-network optimizer
    double gamma = 0.95;
    int epochs = 30;            // |E|
    int steps_per_epoch = 100;  // T, consumed across whole episodes
    int target_sync = 100;      // C
    int replay_capacity = 10000;
    std::uint64_t seed = 0;
    bool td_updates_encoder = false;      // TD gradients into theta as well as theta_Q
    bool supervised_uses_tempered = true; // tempered vs plain CE for the tempered model
    int start_city = 0;

    void validate() const {
        if (hidden < 1)
            throw std::invalid_argument("TrainConfig: hidden must be positive");
        if (q_hidden < 0)
            throw std::invalid_argument("TrainConfig: q_hidden must be nonnegative");
        if (batch_size < 1)
            throw std::invalid_argument("TrainConfig: batch_size must be positive");
        if (!(lr_ptr > 0.0) || !(lr_q > 0.0))
            throw std::invalid_argument("TrainConfig: learning rates must be positive");
        if (!(gamma >= 0.0 && gamma < 1.0))
            throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1)");
        if (epochs < 1)
            throw std::invalid_argument("TrainConfig: epochs must be positive");
        if (steps_per_epoch < 1)
            throw std::invalid_argument("TrainConfig: steps_per_epoch must be positive");
        if (target_sync < 1)
            throw std::invalid_argument("TrainConfig: target_sync must be positive");
        if (replay_capacity < batch_size)
            throw std::invalid_argument("TrainConfig: replay_capacity must hold a batch");
    }
};

struct EpochRecord {
    int epoch = 0;
    double j_mean = 0.0;       // mean sampled tour cost this epoch
    double entropy_mean = 0.0; // mean per-step policy entropy
    double q_mean = 0.0;       // mean clamped Q over scored actions
    double td_loss = 0.0;      // mean TD loss over this epoch's updates (0 when none)
    double sup_loss = 0.0;     // mean supervised cross-entropy
    double sigma_b = 0.0;      // mean edit distance of greedy tours to benchmarks
};

struct StepRecord {
    long step = 0; // global TD update counter
    int epoch = 0;
    double td_loss = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> td_steps;
    double q_min = std::numeric_limits<double>::infinity();
    double q_max = -std::numeric_limits<double>::infinity();
};

struct TrainResult {
    ModelParams model;
    TrainingHistory history;
};

struct RolloutResult {
    Tour tour;
    std::vector<ActionDistribution> dists;
    std::vector<double> rewards;
};

namespace detail {

inline Vec matvec(const ParamTensor& W, const Vec& x) {
    Tape tape(false);
    return tape.val(tape.affine(W, tape.input(x)));
}

inline double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

/// One full episode. The encoding (cache) may come from a different instance
/// object than the environment: during cost perturbation the model keeps
/// encoding the original coordinates while rewards follow perturbed costs.
/// on_step, when set, sees every transition as it happens (Q updates may run
/// inside it, mid-episode).
inline RolloutResult run_episode(const ModelParams& model, const EncodeCache& cache,
                                 const TspInstance& env, int start, SelectMode mode, Rng& rng,
                                 int instance_index,
                                 const std::function<void(const Transition&)>& on_step = {}) {
    RolloutResult result;
    EpisodeState state = reset(env, start);
    LstmCellState prev = cache.enc.final_state;
    const AttentionParams& att = model.pointer.attention;
    while (true) {
        LstmCellState dec = decode_state(state, cache.enc, model.pointer, prev);
        std::vector<int> feasible = feasible_actions(state);
        Vec w1h = matvec(att.W1, dec.h);
        Vec u(feasible.size()), q(feasible.size());
        for (std::size_t i = 0; i < feasible.size(); ++i) {
            Vec ctx(w1h.size());
            const Vec& w2e = cache.w2e[feasible[i]];
            for (std::size_t d = 0; d < ctx.size(); ++d)
                ctx[d] = std::tanh(w1h[d] + w2e[d]);
            u[i] = dot(att.v.values, ctx);
            q[i] = model.tempered ? q_value(model.qnet, ctx) : 1.0;
        }
        ActionDistribution dist = make_distribution(feasible, std::move(u), std::move(q));
        int action = select_action(dist, mode, rng);
        StepOutcome outcome = step(env, state, action);
        if (on_step)
            on_step(Transition{instance_index, state.visited, action, outcome.reward,
                               outcome.next_state.visited, outcome.terminal});
        result.dists.push_back(std::move(dist));
        result.rewards.push_back(outcome.reward);
        prev = std::move(dec);
        state = std::move(outcome.next_state);
        if (outcome.terminal)
            break;
    }
    result.tour = Tour{state.visited};
    return result;
}

/// Teacher-forced cross-entropy along one benchmark tour: the mean per-step
/// loss of pointing at the benchmark's next city. With tempered_ce the
/// logits are rescaled by the (detached) per-action Q-values first, so the
/// loss matches the policy the tempered model actually samples from.
inline Tape::NodeId supervised_loss_on_tape(Tape& tape, const ModelParams& model,
                                            const TspInstance& instance, const Tour& benchmark,
                                            bool tempered_ce) {
    EncodedTape enc = encode_on_tape(tape, instance, model.pointer);
    EpisodeState state = reset(instance, benchmark.order[0]);
    LstmNodeState prev = enc.final_state;
    std::vector<Tape::NodeId> losses;
    for (int t = 0; t + 1 < instance.n; ++t) {
        LstmNodeState dec = decode_state_on_tape(tape, state, enc, model.pointer, prev);
        std::vector<int> feasible = feasible_actions(state);
        Tape::NodeId w1h = tape.affine(model.pointer.attention.W1, dec.h);
        std::vector<Tape::NodeId> u_nodes;
        Vec q_scale;
        for (int city : feasible) {
            Tape::NodeId ctx = tape.tanh(
                tape.add(w1h, tape.affine(model.pointer.attention.W2, enc.embeddings[city])));
            u_nodes.push_back(tape.dot_param(model.pointer.attention.v, ctx));
            if (tempered_ce)
                q_scale.push_back(q_value(model.qnet, tape.val(ctx))); // detached
        }
        Tape::NodeId logits = tape.concat(u_nodes);
        if (tempered_ce)
            logits = tape.mul_const(logits, q_scale);
        int target_city = benchmark.order[t + 1];
        auto pos = static_cast<std::size_t>(
            std::lower_bound(feasible.begin(), feasible.end(), target_city) - feasible.begin());
        losses.push_back(tape.softmax_cross_entropy(logits, pos));
        state = step(instance, state, target_city).next_state;
        prev = dec;
    }
    return tape.mean(tape.concat(losses));
}

/// One supervised optimizer step; returns the loss value.
inline double supervised_update(ModelParams& model, const TspInstance& instance,
                                const Tour& benchmark, bool tempered_ce,
                                AdamOptimizer& optimizer) {
    Tape tape(true);
    Tape::NodeId loss = supervised_loss_on_tape(tape, model, instance, benchmark, tempered_ce);
    double value = tape.scalar(loss);
    tape.backward(loss);
    optimizer.step();
    return value;
}

} // namespace detail

/// One episode against a single instance with the model's own policy.
inline RolloutResult rollout(const ModelParams& model, const TspInstance& instance,
                             SelectMode mode, Rng& rng, int start = 0) {
    EncodeCache cache = build_encode_cache(instance, model.pointer);
    return detail::run_episode(model, cache, instance, start, mode, rng, 0);
}

// ---------------------------------------------------------------------------
// Classical baselines
// ---------------------------------------------------------------------------

/// Greedy tour: repeatedly visit the closest unvisited city, ties to the
/// lowest index.
inline Tour nearest_neighbor(const TspInstance& instance, int start) {
    if (start < 0 || start >= instance.n)
        throw std::invalid_argument("nearest_neighbor: start city out of range");
    std::vector<char> visited(instance.n, 0);
    Tour tour;
    tour.order.push_back(start);
    visited[start] = 1;
    int current = start;
    for (int step = 1; step < instance.n; ++step) {
        int best = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int city = 0; city < instance.n; ++city)
            if (!visited[city] && instance.cost(current, city) < best_cost) {
                best = city;
                best_cost = instance.cost(current, city);
            }
        tour.order.push_back(best);
        visited[best] = 1;
        current = best;
    }
    return tour;
}

/// First-improvement 2-opt: keeps swapping edge pairs (reversing the
/// enclosed segment) until a full scan finds no improvement. Position 0 --
/// the start city -- never moves.
inline Tour two_opt(const TspInstance& instance, const Tour& tour_in) {
    TourValidation report = validate_tour(instance, tour_in);
    if (!report.ok)
        throw InvalidTour("two_opt: " + report.message);
    std::vector<int> t = tour_in.order;
    const int n = instance.n;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i = 1; i + 1 < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                int a = t[i - 1], b = t[i], c = t[j], d = t[(j + 1) % n];
                double delta = instance.cost(a, c) + instance.cost(b, d) -
                               instance.cost(a, b) - instance.cost(c, d);
                if (delta < -1e-12) {
                    std::reverse(t.begin() + i, t.begin() + j + 1);
                    improved = true;
                }
            }
    }
    return Tour{std::move(t)};
}

struct HeldKarpResult {
    Tour tour;
    double cost = 0.0;
};

/// Exact optimum by bitmask dynamic programming over subsets of {1..n-1},
/// start fixed at city 0. Memory grows as 2^n * n, hence the n <= 14 cap.
inline HeldKarpResult held_karp(const TspInstance& instance) {
    const int n = instance.n;
    if (n > 14)
        throw std::invalid_argument("held_karp: n exceeds the 2^n capacity limit (n <= 14)");
    const int m = n - 1; // cities 1..n-1 mapped to bits 0..m-1
    const std::size_t full = std::size_t{1} << m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(full, std::vector<double>(m, inf));
    std::vector<std::vector<int>> parent(full, std::vector<int>(m, -1));
    for (int j = 0; j < m; ++j)
        dp[std::size_t{1} << j][j] = instance.cost(0, j + 1);
    for (std::size_t mask = 1; mask < full; ++mask)
        for (int j = 0; j < m; ++j) {
            if (!(mask & (std::size_t{1} << j)) || dp[mask][j] == inf)
                continue;
            for (int k = 0; k < m; ++k) {
                if (mask & (std::size_t{1} << k))
                    continue;
                std::size_t next = mask | (std::size_t{1} << k);
                double cand = dp[mask][j] + instance.cost(j + 1, k + 1);
                if (cand < dp[next][k]) {
                    dp[next][k] = cand;
                    parent[next][k] = j;
                }
            }
        }
    HeldKarpResult result;
    double best = inf;
    int best_end = -1;
    for (int j = 0; j < m; ++j) {
        double cand = dp[full - 1][j] + instance.cost(j + 1, 0);
        if (cand < best) {
            best = cand;
            best_end = j;
        }
    }
    result.cost = best;
    std::vector<int> reversed;
    std::size_t mask = full - 1;
    int j = best_end;
    while (j != -1) {
        reversed.push_back(j + 1);
        int p = parent[mask][j];
        mask &= ~(std::size_t{1} << j);
        j = p;
    }
    result.tour.order.push_back(0);
    for (auto it = reversed.rbegin(); it != reversed.rend(); ++it)
        result.tour.order.push_back(*it);
    return result;
}

enum class BenchmarkMethod { TwoOpt, HeldKarp };

/// Reference tour for supervision and deviation metrics: 2-opt over a
/// nearest-neighbor start, or the exact optimum on small instances.
inline Tour benchmark_tour(const TspInstance& instance, BenchmarkMethod method, int start = 0) {
    if (method == BenchmarkMethod::HeldKarp)
        return held_karp(instance).tour;
    return two_opt(instance, nearest_neighbor(instance, start));
}

inline std::vector<Tour> benchmark_tours(const std::vector<TspInstance>& instances,
                                         BenchmarkMethod method, int start = 0) {
    std::vector<Tour> tours;
    tours.reserve(instances.size());
    for (const auto& instance : instances)
        tours.push_back(benchmark_tour(instance, method, start));
    return tours;
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

enum class ModelKind { Pqn, PtrNet };

/// Epoch range [first_epoch, last_epoch) during which training costs are
/// multiplied by fresh U(alpha, beta) draws; drawn independently per epoch
/// and per instance from `seed`.
struct PerturbWindow {
    int first_epoch = 0;
    int last_epoch = 0; // exclusive
    double alpha = 1.0;
    double beta = 1.0;
    std::uint64_t seed = 0;
};

/// Shared training loop. Per epoch: run sampled episodes until the step
/// budget is consumed (cycling instances), with per-step replay pushes, TD
/// minibatch updates and C-step target syncs for the tempered model; then
/// one teacher-forced cross-entropy update per instance toward its benchmark
/// tour; finally a greedy evaluation for the deviation metric.
inline TrainResult train_model(const std::vector<TspInstance>& instances,
                               const std::vector<Tour>& benchmarks, const TrainConfig& cfg,
                               ModelKind kind, const PerturbWindow* window = nullptr) {
    cfg.validate();
    if (instances.empty())
        throw std::invalid_argument("train: need at least one instance");
    if (benchmarks.size() != instances.size())
        throw std::invalid_argument("train: need one benchmark tour per instance");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!instances[i].coords)
            throw std::invalid_argument("train: instances must carry coordinates");
        if (cfg.steps_per_epoch < instances[i].n - 1)
            throw std::invalid_argument("train: steps_per_epoch must cover one episode");
        if (!validate_tour(instances[i], benchmarks[i]).ok)
            throw std::invalid_argument("train: invalid benchmark tour");
        if (benchmarks[i].order[0] != cfg.start_city)
            throw std::invalid_argument("train: benchmark tours must start at the start city");
    }
    if (window) {
        if (window->first_epoch < 0 || window->last_epoch > cfg.epochs ||
            window->first_epoch > window->last_epoch)
            throw std::invalid_argument("train: perturbation window out of range");
        if (!(window->alpha > 0.0) || !(window->alpha <= window->beta))
            throw std::invalid_argument("train: need 0 < alpha <= beta");
    }

    const bool tempered = kind == ModelKind::Pqn;
    const std::size_t n_instances = instances.size();

    // Independent deterministic streams so e.g. perturbation draws never
    // shift the episode stream.
    Rng rng_init(cfg.seed);
    Rng rng_episode(cfg.seed + 0x517cc1b727220a95ull);
    Rng rng_replay(cfg.seed + 0x2545f4914f6cdd1dull);

    ModelParams model = ModelParams::make(
        static_cast<std::size_t>(cfg.hidden),
        static_cast<std::size_t>(cfg.q_hidden == 0 ? cfg.hidden : cfg.q_hidden), cfg.gamma,
        tempered, rng_init);

    std::vector<ParamTensor*> pointer_params;
    model.pointer.for_each_param([&](ParamTensor& p) { pointer_params.push_back(&p); });
    std::vector<ParamTensor*> q_params;
    model.qnet.for_each_param([&](ParamTensor& p) { q_params.push_back(&p); });
    AdamOptimizer adam_ptr(pointer_params, cfg.lr_ptr);
    AdamOptimizer adam_q(q_params, cfg.lr_q);
    // Extra optimizer for the optional TD-into-encoder path.
    AdamOptimizer adam_td_ptr(pointer_params, cfg.lr_q);

    ReplayBuffer replay(static_cast<std::size_t>(cfg.replay_capacity));
    TrainingHistory history;
    long global_step = 0;
    long episode_counter = 0;

    std::vector<EncodeCache> caches;
    auto rebuild_caches = [&]() {
        caches.clear();
        for (const auto& instance : instances)
            caches.push_back(build_encode_cache(instance, model.pointer));
    };
    rebuild_caches();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Environment costs for this epoch.
        const bool perturbed =
            window && epoch >= window->first_epoch && epoch < window->last_epoch;
        std::vector<TspInstance> perturbed_instances;
        if (perturbed)
            for (std::size_t i = 0; i < n_instances; ++i)
                perturbed_instances.push_back(perturb_instance(
                    instances[i], window->alpha, window->beta,
                    window->seed + static_cast<std::uint64_t>(epoch) * 1000003ull + i));
        const std::vector<TspInstance>& envs = perturbed ? perturbed_instances : instances;

        double j_sum = 0.0, entropy_sum = 0.0, q_sum = 0.0, td_sum = 0.0, sup_sum = 0.0;
        long j_count = 0, entropy_count = 0, q_count = 0, td_count = 0;
        int steps_used = 0;

        // Memo tables for the TD recomputation: prefix features hold while the
        // pointer parameters are frozen (this epoch), bootstrap values while
        // the target network is additionally unchanged (cleared on sync).
        PrefixFeatureMemo prefix_memo;
        NextMaxQMemo next_q_memo;
        const bool memos_valid = !cfg.td_updates_encoder;
        TdLossContext td_ctx{model.pointer,
                             instances,
                             cfg.gamma,
                             cfg.td_updates_encoder,
                             memos_valid ? &caches : nullptr,
                             memos_valid ? &prefix_memo : nullptr,
                             memos_valid ? &next_q_memo : nullptr};

        auto on_step = [&](const Transition& transition) {
            ++steps_used;
            if (!tempered)
                return;
            replay.push(transition);
            auto batch = replay.sample(static_cast<std::size_t>(cfg.batch_size), rng_replay);
            if (!batch)
                return; // buffer not warm yet
            Tape tape(true);
            Tape::NodeId loss = td_loss_on_tape(tape, *batch, model.qnet, model.target, td_ctx);
            double loss_value = tape.scalar(loss);
            tape.backward(loss);
            adam_q.step();
            if (cfg.td_updates_encoder)
                adam_td_ptr.step();
            ++global_step;
            sync_target(model.qnet, model.target, cfg.target_sync, global_step);
            if (model.target.staleness == 0)
                next_q_memo.clear(); // the bootstrap source just changed
            history.td_steps.push_back({global_step, epoch, loss_value});
            td_sum += loss_value;
            ++td_count;
        };

        while (steps_used < cfg.steps_per_epoch) {
            std::size_t idx = static_cast<std::size_t>(episode_counter % n_instances);
            ++episode_counter;
            RolloutResult episode =
                detail::run_episode(model, caches[idx], envs[idx], cfg.start_city,
                                    SelectMode::Sample, rng_episode, static_cast<int>(idx),
                                    on_step);
            j_sum += tour_cost(envs[idx], episode.tour);
            ++j_count;
            for (const auto& dist : episode.dists) {
                entropy_sum += entropy(dist);
                ++entropy_count;
                for (double qv : dist.q_values) {
                    q_sum += qv;
                    ++q_count;
                    history.q_min = std::min(history.q_min, qv);
                    history.q_max = std::max(history.q_max, qv);
                }
            }
        }

        // Epoch-end supervised pass toward the benchmark tours, one
        // optimizer step per instance.
        for (std::size_t i = 0; i < n_instances; ++i)
            sup_sum += detail::supervised_update(model, instances[i], benchmarks[i],
                                                 tempered && cfg.supervised_uses_tempered,
                                                 adam_ptr);

        // The sequence model changed; refresh encodings, then measure the
        // greedy deviation from the benchmarks on the unperturbed instances.
        rebuild_caches();
        double sigma_sum = 0.0;
        for (std::size_t i = 0; i < n_instances; ++i) {
            RolloutResult greedy = detail::run_episode(model, caches[i], instances[i],
                                                       cfg.start_city, SelectMode::Greedy,
                                                       rng_episode, static_cast<int>(i));
            sigma_sum += levenshtein(greedy.tour, benchmarks[i]);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.j_mean = j_sum / static_cast<double>(j_count);
        record.entropy_mean = entropy_sum / static_cast<double>(entropy_count);
        record.q_mean = q_sum / static_cast<double>(q_count);
        record.td_loss = td_count > 0 ? td_sum / static_cast<double>(td_count) : 0.0;
        record.sup_loss = sup_sum / static_cast<double>(n_instances);
        record.sigma_b = sigma_sum / static_cast<double>(n_instances);
        history.epochs.push_back(record);
    }

    return TrainResult{std::move(model), std::move(history)};
}

/// Full tempered training: episodes, replay, TD updates, target syncs, and
/// the per-epoch supervised pass.
inline TrainResult train_pqn(const std::vector<TspInstance>& instances,
                             const std::vector<Tour>& benchmarks, const TrainConfig& cfg) {
    return train_model(instances, benchmarks, cfg, ModelKind::Pqn);
}

/// Baseline with the identical architecture and schedule but a plain
/// pointer-softmax policy and no TD loss.
inline TrainResult train_ptrnet_supervised(const std::vector<TspInstance>& instances,
                                           const std::vector<Tour>& benchmarks,
                                           const TrainConfig& cfg) {
    return train_model(instances, benchmarks, cfg, ModelKind::PtrNet);
}

/// Tempered training with costs perturbed during [first_epoch, last_epoch):
/// fresh multiplicative U(alpha, beta) noise per epoch in the window, while
/// encoding and the supervised targets stay on the original instances.
inline TrainResult run_perturbation_protocol(const std::vector<TspInstance>& instances,
                                             const std::vector<Tour>& benchmarks,
                                             const TrainConfig& cfg,
                                             const PerturbWindow& window) {
    return train_model(instances, benchmarks, cfg, ModelKind::Pqn, &window);
}

} // namespace pqn
