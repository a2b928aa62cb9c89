#pragma once

#include <stdexcept>
#include <vector>

#include "pqn/tsp.hpp"

namespace pqn {

struct InfeasibleAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Episodic MDP state over a TSP instance: the ordered sequence of visited
/// cities. current is always the last visited city and t the 0-based step
/// index (t == visited.size() - 1).
struct EpisodeState {
    std::vector<int> visited;
    std::vector<char> visited_mask; // size n
    int current = 0;
    int t = 0;

    int n() const { return static_cast<int>(visited_mask.size()); }
};

struct StepOutcome {
    double reward = 0.0;
    EpisodeState next_state;
    bool terminal = false;
};

/// Fresh episode at the given start city: visited == [start], t == 0.
inline EpisodeState reset(const TspInstance& instance, int start) {
    if (start < 0 || start >= instance.n)
        throw std::invalid_argument("reset: start city out of range");
    EpisodeState state;
    state.visited = {start};
    state.visited_mask.assign(instance.n, 0);
    state.visited_mask[start] = 1;
    state.current = start;
    state.t = 0;
    return state;
}

/// Unvisited cities, ascending. The graph is fully connected, so every
/// unvisited city is reachable.
inline std::vector<int> feasible_actions(const EpisodeState& state) {
    std::vector<int> actions;
    actions.reserve(state.visited_mask.size() - state.visited.size());
    for (int city = 0; city < state.n(); ++city)
        if (!state.visited_mask[city])
            actions.push_back(city);
    return actions;
}

inline void require_feasible(const EpisodeState& state, int action) {
    if (action < 0 || action >= state.n() || state.visited_mask[action])
        throw InfeasibleAction("action " + std::to_string(action) +
                               " is not feasible in the current state");
}

/// Reward for moving from the current city to `action`:
///   1 - cost(current, action) / sum_{j != action} cost(j, action)
/// The denominator includes the chosen edge, so the result lies in [0, 1].
inline double reward(const TspInstance& instance, const EpisodeState& state, int action) {
    require_feasible(state, action);
    double denom = 0.0;
    for (int j = 0; j < instance.n; ++j)
        if (j != action)
            denom += instance.cost(j, action);
    return 1.0 - instance.cost(state.current, action) / denom;
}

/// Deterministic transition: appends `action` to the visited sequence.
/// Terminal once every city has been visited.
inline StepOutcome step(const TspInstance& instance, const EpisodeState& state, int action) {
    StepOutcome outcome;
    outcome.reward = reward(instance, state, action); // also checks feasibility
    outcome.next_state = state;
    outcome.next_state.visited.push_back(action);
    outcome.next_state.visited_mask[action] = 1;
    outcome.next_state.current = action;
    outcome.next_state.t = state.t + 1;
    outcome.terminal =
        outcome.next_state.visited.size() == outcome.next_state.visited_mask.size();
    return outcome;
}

} // namespace pqn
