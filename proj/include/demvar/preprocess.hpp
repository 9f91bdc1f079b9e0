#pragma once

#include <vector>

#include "demvar/model.hpp"

namespace demvar {

// Closed, strongly connected sub-MDP: for each member state, the retained
// actions whose successors all stay inside.
struct EndComponent {
    std::vector<int> states;
    std::vector<std::vector<int>> actions;  // actions[i] = retained action indices of states[i]
};

struct CollapseMap {
    std::vector<int> state_map;  // original state -> collapsed state
    int t_star = -1;             // fresh absorbing sink, weight/reward 0
};

// Maximal end components, via iterated SCC refinement: drop state-action
// pairs whose support leaves the pair's SCC until a fixpoint, then keep the
// components that still retain at least one pair.
std::vector<EndComponent> mec_decompose(const Mdp& m);

// Replaces every maximal end component among non-terminal states by a single
// state offering the actions leaving the component plus a fresh action 'tau'
// to the new sink t_star. Guarantees terminals (incl. t_star) are reached
// almost surely under every scheduler. In reward mode only zero-reward
// components are collapsed.
std::pair<Mdp, CollapseMap> collapse(const Mdp& m);

// Reward mode: true iff every end component reachable from the initial state
// carries only zero rewards, i.e. the maximal expected accumulated reward is
// finite.
bool check_finite(const Mdp& m);

}  // namespace demvar
