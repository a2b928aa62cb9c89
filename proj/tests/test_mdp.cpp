#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pqn/mdp.hpp"
#include "pqn/rng.hpp"

using namespace pqn;

namespace {

// n cities all at unit distance from each other (valid symmetric matrix,
// not Euclidean-backed).
TspInstance equidistant_instance(int n) {
    TspInstance instance;
    instance.n = n;
    instance.costs.assign(static_cast<std::size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i)
        instance.cost(i, i) = 0.0;
    return instance;
}

TspInstance square_instance() {
    TspInstance instance;
    instance.n = 4;
    std::vector<std::array<double, 2>> coords = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    instance.costs.assign(16, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double dx = coords[i][0] - coords[j][0];
            double dy = coords[i][1] - coords[j][1];
            instance.cost(i, j) = std::sqrt(dx * dx + dy * dy);
        }
    instance.coords = coords;
    return instance;
}

} // namespace

TEST_CASE("reset starts a fresh episode at the given city") {
    TspInstance instance = equidistant_instance(5);
    EpisodeState state = reset(instance, 0);
    REQUIRE(state.visited == std::vector<int>{0});
    REQUIRE(state.t == 0);
    REQUIRE(state.current == 0);
    REQUIRE(feasible_actions(state) == std::vector<int>{1, 2, 3, 4});

    TspInstance two = equidistant_instance(2);
    EpisodeState from_one = reset(two, 1);
    REQUIRE(from_one.visited == std::vector<int>{1});
    REQUIRE(feasible_actions(from_one) == std::vector<int>{0});

    SECTION("idempotent") {
        EpisodeState again = reset(instance, 0);
        REQUIRE(again.visited == state.visited);
        REQUIRE(again.visited_mask == state.visited_mask);
        REQUIRE(again.current == state.current);
        REQUIRE(again.t == state.t);
    }

    SECTION("start city out of range") {
        REQUIRE_THROWS_AS(reset(instance, 5), std::invalid_argument);
        REQUIRE_THROWS_AS(reset(instance, -1), std::invalid_argument);
    }
}

TEST_CASE("feasible_actions is the set of unvisited cities") {
    TspInstance instance = equidistant_instance(4);
    EpisodeState state = reset(instance, 0);
    REQUIRE(feasible_actions(state) == std::vector<int>{1, 2, 3});

    state = step(instance, state, 2).next_state;
    state = step(instance, state, 1).next_state;
    REQUIRE(feasible_actions(state) == std::vector<int>{3});

    SECTION("cardinality matches the complement") {
        TspInstance big = equidistant_instance(9);
        EpisodeState s = reset(big, 0);
        Rng rng(3);
        while (s.visited.size() < 9u) {
            auto actions = feasible_actions(s);
            REQUIRE(actions.size() == 9u - s.visited.size());
            s = step(big, s, actions[rng.uniform_index(actions.size())]).next_state;
        }
        REQUIRE(feasible_actions(s).empty());
    }
}

TEST_CASE("reward penalizes the chosen edge against the column sum") {
    SECTION("equidistant cities give 1 - 1/(n-1)") {
        TspInstance tri = equidistant_instance(3);
        EpisodeState state = reset(tri, 0);
        REQUIRE(reward(tri, state, 1) == Catch::Approx(0.5));
        REQUIRE(reward(tri, state, 2) == Catch::Approx(0.5));
    }

    SECTION("two cities: the denominator is the single edge") {
        TspInstance two = equidistant_instance(2);
        EpisodeState state = reset(two, 0);
        REQUIRE(reward(two, state, 1) == 0.0);
    }

    SECTION("square corners, move 0 -> 1") {
        TspInstance square = square_instance();
        EpisodeState state = reset(square, 0);
        // column sum into city 1 excluding the self loop
        double denom = square.cost(0, 1) + square.cost(2, 1) + square.cost(3, 1);
        REQUIRE(reward(square, state, 1) == Catch::Approx(1.0 - 1.0 / denom).epsilon(1e-12));
    }

    SECTION("infeasible actions are rejected") {
        TspInstance tri = equidistant_instance(3);
        EpisodeState state = reset(tri, 0);
        REQUIRE_THROWS_AS(reward(tri, state, 0), InfeasibleAction);
        REQUIRE_THROWS_AS(reward(tri, state, 3), InfeasibleAction);
    }
}

TEST_CASE("step transitions deterministically and terminates after n-1 moves") {
    SECTION("two cities terminate immediately") {
        TspInstance two = equidistant_instance(2);
        StepOutcome outcome = step(two, reset(two, 0), 1);
        REQUIRE(outcome.terminal);
        REQUIRE(outcome.next_state.visited == std::vector<int>{0, 1});
    }

    SECTION("any action order yields a valid tour with rewards in [0,1]") {
        TspInstance instance = generate_instance(8, 17);
        Rng rng(99);
        for (int round = 0; round < 20; ++round) {
            EpisodeState state = reset(instance, 0);
            int steps = 0;
            bool terminal = false;
            while (!terminal) {
                auto actions = feasible_actions(state);
                StepOutcome outcome =
                    step(instance, state, actions[rng.uniform_index(actions.size())]);
                REQUIRE(outcome.reward >= 0.0);
                REQUIRE(outcome.reward <= 1.0);
                state = outcome.next_state;
                terminal = outcome.terminal;
                ++steps;
            }
            REQUIRE(steps == instance.n - 1);
            REQUIRE(validate_tour(instance, Tour{state.visited}).ok);
        }
    }

    SECTION("replaying an action sequence gives identical outcomes") {
        TspInstance instance = generate_instance(6, 4);
        std::vector<int> plan = {3, 1, 5, 2, 4};
        std::vector<double> first, second;
        for (auto* sink : {&first, &second}) {
            EpisodeState state = reset(instance, 0);
            for (int action : plan) {
                StepOutcome outcome = step(instance, state, action);
                sink->push_back(outcome.reward);
                state = outcome.next_state;
            }
        }
        REQUIRE(first == second);
    }
}
