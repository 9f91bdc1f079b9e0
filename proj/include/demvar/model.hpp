#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "demvar/scalar.hpp"

namespace demvar {

enum class PayoffMode { Weighted, Reward };

struct Transition {
    int target = -1;
    Rational prob;
};

struct Action {
    std::string name;
    std::vector<Transition> dist;  // sparse, prob > 0 entries only
    uint64_t reward = 0;           // used in Reward mode
};

struct State {
    std::string name;
    std::vector<Action> actions;          // enabled(s), never empty for valid models
    std::optional<Rational> weight;       // terminal weight (Weighted mode)
};

// Immutable finite MDP. States and actions are interned to dense indices;
// analyses only ever touch indices.
struct Mdp {
    std::vector<State> states;
    int initial = 0;
    PayoffMode mode = PayoffMode::Weighted;

    int num_states() const { return static_cast<int>(states.size()); }
    int num_actions(int s) const { return static_cast<int>(states[s].actions.size()); }

    bool is_absorbing(int s) const {
        for (const auto& a : states[s].actions) {
            for (const auto& tr : a.dist)
                if (tr.target != s) return false;
        }
        return !states[s].actions.empty();
    }

    // Weighted mode: the weighted absorbing states. Reward mode: absorbing
    // states whose self-loops carry reward 0 (Assumption: reached a.s. after
    // preprocessing).
    bool is_terminal(int s) const {
        if (mode == PayoffMode::Weighted) return states[s].weight.has_value();
        if (!is_absorbing(s)) return false;
        for (const auto& a : states[s].actions)
            if (a.reward != 0) return false;
        return true;
    }

    std::vector<int> terminals() const {
        std::vector<int> t;
        for (int s = 0; s < num_states(); ++s)
            if (is_terminal(s)) t.push_back(s);
        return t;
    }

    int state_index(const std::string& name) const {
        for (int s = 0; s < num_states(); ++s)
            if (states[s].name == name) return s;
        return -1;
    }
    int action_index(int s, const std::string& name) const {
        for (int a = 0; a < num_actions(s); ++a)
            if (states[s].actions[a].name == name) return a;
        return -1;
    }

    uint64_t max_reward() const {
        uint64_t r = 0;
        for (const auto& st : states)
            for (const auto& a : st.actions) r = std::max(r, a.reward);
        return r;
    }

    Rational min_positive_prob() const {
        Rational p = 1;
        for (const auto& st : states)
            for (const auto& a : st.actions)
                for (const auto& tr : a.dist)
                    if (tr.prob > 0 && tr.prob < p) p = tr.prob;
        return p;
    }
};

// Per-state distribution over enabled actions.
template <class T>
struct Scheduler {
    std::vector<std::vector<T>> choice;  // choice[s][a], aligned with states[s].actions

    static Scheduler deterministic(const Mdp& m, const std::vector<int>& pick) {
        Scheduler s;
        s.choice.resize(m.num_states());
        for (int i = 0; i < m.num_states(); ++i) {
            s.choice[i].assign(m.num_actions(i), T(0));
            s.choice[i][pick[i]] = T(1);
        }
        return s;
    }
    static Scheduler uniform(const Mdp& m) {
        Scheduler s;
        s.choice.resize(m.num_states());
        for (int i = 0; i < m.num_states(); ++i)
            s.choice[i].assign(m.num_actions(i), T(1) / T(m.num_actions(i)));
        return s;
    }

    bool is_deterministic() const {
        for (const auto& row : choice)
            for (const auto& p : row)
                if (p != T(0) && p != T(1)) return false;
        return true;
    }

    // Argmax action per state; ties to the lowest index.
    std::vector<int> argmax() const {
        std::vector<int> pick(choice.size(), 0);
        for (size_t s = 0; s < choice.size(); ++s) {
            for (size_t a = 1; a < choice[s].size(); ++a)
                if (choice[s][a] > choice[s][pick[s]]) pick[s] = static_cast<int>(a);
        }
        return pick;
    }
};

struct Violation {
    std::string message;
    int state = -1;
    int action = -1;
};

std::vector<Violation> validate(const Mdp& m, const AnalysisConfig& cfg = {});

struct ProductMdp {
    Mdp mdp;
    int factor_b_size = 0;
    int pair_index(int sa, int sb) const { return sa * factor_b_size + sb; }
    std::pair<int, int> factors(int p) const { return {p / factor_b_size, p % factor_b_size}; }
};

ProductMdp product(const Mdp& a, const Mdp& b, const AnalysisConfig& cfg = {});

template <class T>
Scheduler<T> product_scheduler(const Scheduler<T>& sa, const Scheduler<T>& sb,
                               const Mdp& a, const Mdp& b, const ProductMdp& prod) {
    Scheduler<T> out;
    out.choice.resize(prod.mdp.num_states());
    for (int u = 0; u < a.num_states(); ++u) {
        for (int v = 0; v < b.num_states(); ++v) {
            int p = prod.pair_index(u, v);
            out.choice[p].resize(prod.mdp.num_actions(p));
            int k = 0;
            for (int i = 0; i < a.num_actions(u); ++i)
                for (int j = 0; j < b.num_actions(v); ++j)
                    out.choice[p][k++] = sa.choice[u][i] * sb.choice[v][j];
        }
    }
    return out;
}

}  // namespace demvar
