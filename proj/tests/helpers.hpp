#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "demvar/model.hpp"
#include "demvar/parse.hpp"
#include "demvar/rng.hpp"

inline demvar::Mdp load_corpus(const std::string& name) {
    std::ifstream in(std::string(CORPUS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return demvar::parse_model(buf.str());
}

// Deterministic scheduler taking the named action where given, the first
// action elsewhere.
template <class T>
demvar::Scheduler<T> dirac(const demvar::Mdp& m,
                           const std::map<std::string, std::string>& choices) {
    std::vector<int> pick(m.num_states(), 0);
    for (const auto& [state, action] : choices) {
        int s = m.state_index(state);
        REQUIRE(s >= 0);
        int a = m.action_index(s, action);
        REQUIRE(a >= 0);
        pick[s] = a;
    }
    return demvar::Scheduler<T>::deterministic(m, pick);
}

// Random layered DAG model: `layers` layers of internal states, each action
// distributing over the next layer(s), last layer feeding weighted
// terminals. Probabilities have denominator <= 8. Always preprocessed by
// construction (terminals reached surely, no end components).
inline demvar::Mdp random_layered_model(demvar::CounterRng& rng, int max_internal = 6,
                                        int max_actions = 3, int max_terminals = 5) {
    using demvar::Rational;
    demvar::Mdp m;
    int internals = 1 + static_cast<int>(rng.next_below(max_internal));
    int terminals = 2 + static_cast<int>(rng.next_below(max_terminals - 1));
    for (int i = 0; i < internals; ++i) {
        demvar::State st;
        st.name = "s" + std::to_string(i);
        m.states.push_back(st);
    }
    for (int q = 0; q < terminals; ++q) {
        demvar::State st;
        st.name = "t" + std::to_string(q);
        st.weight = Rational(static_cast<int>(rng.next_below(9)),
                             1 + static_cast<int>(rng.next_below(3)));
        demvar::Action loop;
        loop.name = "loop";
        loop.dist.push_back({internals + q, Rational(1)});
        st.actions.push_back(loop);
        m.states.push_back(st);
    }
    for (int i = 0; i < internals; ++i) {
        int acts = 1 + static_cast<int>(rng.next_below(max_actions));
        for (int a = 0; a < acts; ++a) {
            demvar::Action act;
            act.name = "a" + std::to_string(a);
            // successors strictly deeper to keep the graph acyclic
            int succs = 1 + static_cast<int>(rng.next_below(3));
            std::map<int, Rational> dist;
            int den = succs + static_cast<int>(rng.next_below(9 - succs));  // <= 8
            std::vector<int> mass(succs, 1);
            for (int extra = succs; extra < den; ++extra)
                ++mass[rng.next_below(succs)];
            for (int k = 0; k < succs; ++k) {
                int lo = i + 1;  // deeper internal or any terminal
                int range = (internals - lo) + terminals;
                int pickd = lo + static_cast<int>(rng.next_below(range));
                dist[pickd] += Rational(mass[k], den);
            }
            for (const auto& [t, p] : dist) act.dist.push_back({t, p});
            m.states[i].actions.push_back(act);
        }
    }
    m.initial = 0;
    m.mode = demvar::PayoffMode::Weighted;
    return m;
}
