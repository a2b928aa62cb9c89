#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "fd_check.hpp"
#include "pqn/qnet.hpp"

using namespace pqn;

namespace {

// A network whose raw output is exactly the bias b2, independent of input.
QNetwork constant_net(double raw, double gamma = 0.95, std::size_t k = 3) {
    QNetwork net(k, 4, gamma);
    net.b2.values = {raw};
    return net;
}

} // namespace

TEST_CASE("q_value clamps into [floor, 1/(1-gamma)]") {
    Vec ctx = {0.1, -0.2, 0.3};

    SECTION("zero weights land on the floor") {
        QNetwork net(3, 4, 0.95);
        REQUIRE(q_value(net, ctx) == 1e-3);
    }

    SECTION("large raw output hits the ceiling") {
        double q = q_value(constant_net(50.0), ctx);
        REQUIRE(q == Catch::Approx(20.0).epsilon(1e-12)); // 1/(1 - 0.95) in floating point
        REQUIRE(q <= 20.0);
    }

    SECTION("interior values pass through") {
        REQUIRE(q_value(constant_net(0.7), ctx) == Catch::Approx(0.7).epsilon(1e-14));
    }

    SECTION("ceiling follows gamma") {
        REQUIRE(q_value(constant_net(50.0, 0.5), ctx) == Catch::Approx(2.0));
        REQUIRE_THROWS_AS(QNetwork(3, 4, 1.0), std::invalid_argument);
    }
}

TEST_CASE("td_target follows the Bellman form") {
    REQUIRE(td_target(0.8, {}, true, 0.95) == 0.8);
    REQUIRE(td_target(0.5, {0.3, 0.9}, false, 0.0) == 0.5);
    REQUIRE(td_target(0.5, {0.2, 1.0, 0.6}, false, 0.95) == Catch::Approx(1.45).epsilon(1e-14));
    REQUIRE_THROWS_AS(td_target(0.5, {}, false, 0.95), std::invalid_argument);
}

TEST_CASE("sync_target copies parameters on schedule") {
    Rng rng(7);
    QNetwork net(3, 4, 0.95);
    net.init(rng);
    TargetNetwork target(net);
    net.b2.values = {0.42}; // diverge after the initial copy

    SECTION("off-schedule steps leave the target untouched") {
        sync_target(net, target, 10, 5);
        REQUIRE(target.net.b2.values[0] != 0.42);
        REQUIRE(target.staleness == 1);
    }

    SECTION("C == 1 syncs every step") {
        sync_target(net, target, 1, 1);
        REQUIRE(target.net.b2.values == net.b2.values);
        REQUIRE(target.staleness == 0);
        Vec ctx = {0.3, 0.3, -0.1};
        REQUIRE(q_value(target.net, ctx) == q_value(net, ctx));
    }

    SECTION("sync never changes the online network") {
        Vec before = net.b2.values;
        sync_target(net, target, 1, 2);
        REQUIRE(net.b2.values == before);
    }
}

TEST_CASE("replay buffer is a bounded FIFO with uniform sampling") {
    Rng rng(13);

    SECTION("eviction drops the oldest element") {
        ReplayBuffer buffer(3);
        for (int i = 0; i < 4; ++i) {
            Transition t;
            t.action = i;
            buffer.push(t);
        }
        REQUIRE(buffer.size() == 3);
        REQUIRE(buffer.at(0).action == 1);
        REQUIRE(buffer.at(2).action == 3);
    }

    SECTION("sampling everything returns each item exactly once") {
        ReplayBuffer buffer(8);
        for (int i = 0; i < 5; ++i) {
            Transition t;
            t.action = i;
            buffer.push(t);
        }
        auto batch = buffer.sample(5, rng);
        REQUIRE(batch.has_value());
        std::vector<int> seen;
        for (const auto& t : *batch)
            seen.push_back(t.action);
        std::sort(seen.begin(), seen.end());
        REQUIRE(seen == std::vector<int>{0, 1, 2, 3, 4});
    }

    SECTION("undersized buffer signals not-ready") {
        ReplayBuffer buffer(8);
        Transition t;
        buffer.push(t);
        REQUIRE_FALSE(buffer.sample(2, rng).has_value());
    }

    SECTION("1-of-4 sampling frequencies are uniform") {
        ReplayBuffer buffer(4);
        for (int i = 0; i < 4; ++i) {
            Transition t;
            t.action = i;
            buffer.push(t);
        }
        std::vector<int> counts(4, 0);
        for (int round = 0; round < 10000; ++round) {
            auto batch = buffer.sample(1, rng);
            ++counts[(*batch)[0].action];
        }
        for (int c : counts) {
            REQUIRE(c >= 2350);
            REQUIRE(c <= 2650);
        }
    }
}

TEST_CASE("td_loss is the mean squared TD error with a detached target") {
    // One instance, a tiny pointer model, and hand-built transitions.
    TspInstance instance = generate_instance(4, 21);
    PointerParams pointer(3);
    Rng rng(3);
    pointer.init(rng, 0.4);
    std::vector<TspInstance> instances = {instance};

    Transition terminal_tr;
    terminal_tr.instance = 0;
    terminal_tr.visited = {0, 1, 2};
    terminal_tr.action = 3;
    terminal_tr.reward = 0.5;
    terminal_tr.next_visited = {0, 1, 2, 3};
    terminal_tr.terminal = true;

    SECTION("loss is zero when Q already equals the target") {
        QNetwork net = constant_net(0.5);
        TargetNetwork target(net);
        TdLossContext ctx{pointer, instances, 0.95};
        REQUIRE(td_loss({terminal_tr}, net, target, ctx) == 0.0);
    }

    SECTION("single transition squared error") {
        // online Q == 0.5 everywhere, target net Q == 1.0 everywhere
        QNetwork net = constant_net(0.5);
        TargetNetwork target(constant_net(1.0));
        Transition tr;
        tr.instance = 0;
        tr.visited = {0, 1};
        tr.action = 2;
        tr.reward = 0.5;
        tr.next_visited = {0, 1, 2};
        tr.terminal = false;
        TdLossContext ctx{pointer, instances, 0.95};
        // target = 0.5 + 0.95 * max(1.0) = 1.45, Q = 0.5
        REQUIRE(td_loss({tr}, net, target, ctx) == Catch::Approx(0.9025).epsilon(1e-12));
    }

    SECTION("empty batch is rejected") {
        QNetwork net = constant_net(0.5);
        TargetNetwork target(net);
        TdLossContext ctx{pointer, instances, 0.95};
        REQUIRE_THROWS_AS(td_loss({}, net, target, ctx), std::invalid_argument);
    }

    SECTION("nonnegative on random batches, and one Adam step reduces it") {
        QNetwork net(3, 5, 0.95);
        net.init(rng, 0.3);
        TargetNetwork target(net);
        std::vector<Transition> batch;
        EpisodeState state = reset(instance, 0);
        Rng action_rng(17);
        while (true) {
            auto actions = feasible_actions(state);
            int action = actions[action_rng.uniform_index(actions.size())];
            StepOutcome outcome = step(instance, state, action);
            batch.push_back({0, state.visited, action, outcome.reward,
                             outcome.next_state.visited, outcome.terminal});
            state = outcome.next_state;
            if (outcome.terminal)
                break;
        }
        TdLossContext ctx{pointer, instances, 0.95};
        double before = td_loss(batch, net, target, ctx);
        REQUIRE(before >= 0.0);

        std::vector<ParamTensor*> q_params;
        net.for_each_param([&](ParamTensor& p) { q_params.push_back(&p); });
        AdamOptimizer adam(q_params, 1e-3);
        Tape tape(true);
        Tape::NodeId loss = td_loss_on_tape(tape, batch, net, target, ctx);
        tape.backward(loss);
        adam.step();
        double after = td_loss(batch, net, target, ctx);
        REQUIRE(after < before);
    }
}

TEST_CASE("td_loss gradients pass the finite-difference check") {
    TspInstance instance = generate_instance(4, 33);
    PointerParams pointer(2);
    Rng rng(9);
    pointer.init(rng, 0.4);
    std::vector<TspInstance> instances = {instance};
    QNetwork net(2, 3, 0.95);
    net.init(rng, 0.4);
    net.b2.values = {0.8}; // keep the raw output away from the clamp floor
    TargetNetwork target(net);

    std::vector<Transition> batch;
    EpisodeState state = reset(instance, 0);
    for (int action : {2, 1, 3}) {
        StepOutcome outcome = step(instance, state, action);
        batch.push_back({0, state.visited, action, outcome.reward,
                         outcome.next_state.visited, outcome.terminal});
        state = outcome.next_state;
    }

    SECTION("theta_Q only") {
        TdLossContext ctx{pointer, instances, 0.95};
        auto loss = [&](bool with_grad) {
            Tape tape(with_grad);
            Tape::NodeId l = td_loss_on_tape(tape, batch, net, target, ctx);
            if (with_grad)
                tape.backward(l);
            return tape.scalar(l);
        };
        auto report =
            testing::fd_check({&net.W1, &net.b1, &net.w2, &net.b2}, loss);
        REQUIRE(report.max_rel_err <= 1e-4);
    }

    SECTION("extended into the sequence model") {
        // Terminal transitions keep the bootstrap target constant, so the
        // finite differences probe only the differentiable branch (the
        // detached target would otherwise shift under pointer perturbations).
        std::vector<Transition> terminal_batch;
        for (std::vector<int> prefix : {std::vector<int>{0, 1, 2}, std::vector<int>{0, 2, 1},
                                        std::vector<int>{0, 3, 1}}) {
            EpisodeState s = reset(instance, 0);
            for (std::size_t i = 1; i < prefix.size(); ++i)
                s = step(instance, s, prefix[i]).next_state;
            int last = feasible_actions(s)[0];
            StepOutcome outcome = step(instance, s, last);
            REQUIRE(outcome.terminal);
            terminal_batch.push_back({0, s.visited, last, outcome.reward,
                                      outcome.next_state.visited, true});
        }
        TdLossContext ctx{pointer, instances, 0.95, true};
        auto loss = [&](bool with_grad) {
            Tape tape(with_grad);
            Tape::NodeId l = td_loss_on_tape(tape, terminal_batch, net, target, ctx);
            if (with_grad)
                tape.backward(l);
            return tape.scalar(l);
        };
        std::vector<ParamTensor*> params = {&net.W1, &net.b1, &net.w2, &net.b2};
        pointer.for_each_param([&](ParamTensor& p) { params.push_back(&p); });
        auto report = testing::fd_check(params, loss);
        REQUIRE(report.max_rel_err <= 1e-4);
    }
}
