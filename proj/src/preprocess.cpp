#include "demvar/preprocess.hpp"

#include <algorithm>
#include <queue>

namespace demvar {

namespace {

// Iterative Tarjan over the graph induced by the retained state-action pairs.
// Returns component ids; -1 for dead states.
std::vector<int> scc_ids(const Mdp& m, const std::vector<char>& alive,
                         const std::vector<std::vector<char>>& retained,
                         int& num_comps) {
    int n = m.num_states();
    std::vector<int> comp(n, -1), low(n), disc(n, -1), stk;
    std::vector<char> on_stack(n, 0);
    int time = 0;
    num_comps = 0;

    struct Frame {
        int s;
        int a;       // action cursor
        size_t t;    // transition cursor within action
    };

    for (int root = 0; root < n; ++root) {
        if (!alive[root] || disc[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0, 0});
        disc[root] = low[root] = time++;
        stk.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            int s = f.s;
            bool descended = false;
            while (f.a < m.num_actions(s)) {
                if (!retained[s][f.a]) {
                    ++f.a;
                    f.t = 0;
                    continue;
                }
                const auto& dist = m.states[s].actions[f.a].dist;
                if (f.t >= dist.size()) {
                    ++f.a;
                    f.t = 0;
                    continue;
                }
                int t = dist[f.t++].target;
                if (!alive[t]) continue;
                if (disc[t] == -1) {
                    disc[t] = low[t] = time++;
                    stk.push_back(t);
                    on_stack[t] = 1;
                    call.push_back({t, 0, 0});
                    descended = true;
                    break;
                }
                if (on_stack[t]) low[s] = std::min(low[s], disc[t]);
            }
            if (descended) continue;
            if (low[s] == disc[s]) {
                int id = num_comps++;
                int t;
                do {
                    t = stk.back();
                    stk.pop_back();
                    on_stack[t] = 0;
                    comp[t] = id;
                } while (t != s);
            }
            call.pop_back();
            if (!call.empty())
                low[call.back().s] = std::min(low[call.back().s], low[s]);
        }
    }
    return comp;
}

std::vector<char> reachable_full(const Mdp& m) {
    std::vector<char> seen(m.num_states(), 0);
    std::queue<int> q;
    seen[m.initial] = 1;
    q.push(m.initial);
    while (!q.empty()) {
        int s = q.front();
        q.pop();
        for (const auto& a : m.states[s].actions)
            for (const auto& tr : a.dist)
                if (!seen[tr.target]) {
                    seen[tr.target] = 1;
                    q.push(tr.target);
                }
    }
    return seen;
}

}  // namespace

std::vector<EndComponent> mec_decompose(const Mdp& m) {
    int n = m.num_states();
    std::vector<char> alive(n, 1);
    std::vector<std::vector<char>> retained(n);
    for (int s = 0; s < n; ++s) retained[s].assign(m.num_actions(s), 1);

    std::vector<int> comp;
    int num_comps = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        comp = scc_ids(m, alive, retained, num_comps);
        for (int s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            int kept = 0;
            for (int a = 0; a < m.num_actions(s); ++a) {
                if (!retained[s][a]) continue;
                bool inside = true;
                for (const auto& tr : m.states[s].actions[a].dist)
                    if (!alive[tr.target] || comp[tr.target] != comp[s]) {
                        inside = false;
                        break;
                    }
                if (!inside) {
                    retained[s][a] = 0;
                    changed = true;
                } else {
                    ++kept;
                }
            }
            if (kept == 0) {
                alive[s] = 0;
                changed = true;
            }
        }
    }

    std::vector<EndComponent> out(num_comps);
    for (int s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        EndComponent& ec = out[comp[s]];
        ec.states.push_back(s);
        ec.actions.emplace_back();
        for (int a = 0; a < m.num_actions(s); ++a)
            if (retained[s][a]) ec.actions.back().push_back(a);
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const EndComponent& ec) { return ec.states.empty(); }),
              out.end());
    return out;
}

std::pair<Mdp, CollapseMap> collapse(const Mdp& m) {
    auto mecs = mec_decompose(m);
    int n = m.num_states();

    // Which components get collapsed: non-terminal ones, and in reward mode
    // only those whose retained pairs all carry reward 0.
    std::vector<int> comp_of(n, -1);
    std::vector<const EndComponent*> picked;
    for (const auto& ec : mecs) {
        bool all_terminal = true, zero_reward = true;
        for (size_t i = 0; i < ec.states.size(); ++i) {
            if (!m.is_terminal(ec.states[i])) all_terminal = false;
            for (int a : ec.actions[i])
                if (m.states[ec.states[i]].actions[a].reward != 0) zero_reward = false;
        }
        if (all_terminal) continue;
        if (m.mode == PayoffMode::Reward && !zero_reward) continue;
        int id = static_cast<int>(picked.size());
        picked.push_back(&ec);
        for (int s : ec.states) comp_of[s] = id;
    }

    CollapseMap cm;
    cm.state_map.assign(n, -1);
    Mdp out;
    out.mode = m.mode;

    // Plain states first, then one state per collapsed component, then t*.
    for (int s = 0; s < n; ++s) {
        if (comp_of[s] >= 0) continue;
        cm.state_map[s] = out.num_states();
        State st;
        st.name = m.states[s].name;
        st.weight = m.states[s].weight;
        out.states.push_back(std::move(st));
    }
    std::vector<int> comp_state(picked.size());
    for (size_t c = 0; c < picked.size(); ++c) {
        comp_state[c] = out.num_states();
        State st;
        if (picked[c]->states.size() == 1) {
            st.name = m.states[picked[c]->states[0]].name;
        } else {
            st.name = "mec(";
            for (size_t i = 0; i < picked[c]->states.size(); ++i) {
                if (i) st.name += ",";
                st.name += m.states[picked[c]->states[i]].name;
            }
            st.name += ")";
        }
        out.states.push_back(std::move(st));
        for (int s : picked[c]->states) cm.state_map[s] = comp_state[c];
    }
    cm.t_star = out.num_states();
    {
        State sink;
        sink.name = "t_star";
        while (std::any_of(out.states.begin(), out.states.end(),
                           [&](const State& s) { return s.name == sink.name; }))
            sink.name += "*";
        if (m.mode == PayoffMode::Weighted) sink.weight = Rational(0);
        Action loop;
        loop.name = "loop";
        loop.dist.push_back({cm.t_star, Rational(1)});
        sink.actions.push_back(std::move(loop));
        out.states.push_back(std::move(sink));
    }
    out.initial = cm.state_map[m.initial];

    auto redirect = [&](const Action& a, const std::string& name) {
        Action act;
        act.name = name;
        act.reward = a.reward;
        for (const auto& tr : a.dist) {
            int t = cm.state_map[tr.target];
            // merge parallel edges into the same collapsed target
            bool merged = false;
            for (auto& prev : act.dist)
                if (prev.target == t) {
                    prev.prob += tr.prob;
                    merged = true;
                    break;
                }
            if (!merged) act.dist.push_back({t, tr.prob});
        }
        return act;
    };

    for (int s = 0; s < n; ++s) {
        if (comp_of[s] >= 0) continue;
        for (const auto& a : m.states[s].actions)
            out.states[cm.state_map[s]].actions.push_back(redirect(a, a.name));
    }
    for (size_t c = 0; c < picked.size(); ++c) {
        State& st = out.states[comp_state[c]];
        const EndComponent& ec = *picked[c];
        bool multi = ec.states.size() > 1;
        for (size_t i = 0; i < ec.states.size(); ++i) {
            int s = ec.states[i];
            for (int a = 0; a < m.num_actions(s); ++a) {
                bool retained = std::find(ec.actions[i].begin(), ec.actions[i].end(), a) !=
                                ec.actions[i].end();
                if (retained) continue;  // stays inside, dropped by the collapse
                const Action& act = m.states[s].actions[a];
                std::string name =
                    multi ? m.states[s].name + "." + act.name : act.name;
                st.actions.push_back(redirect(act, name));
            }
        }
        Action tau;
        tau.name = "tau";
        while (std::any_of(st.actions.begin(), st.actions.end(),
                           [&](const Action& a) { return a.name == tau.name; }))
            tau.name += "*";  // keep the sink action name fresh
        tau.dist.push_back({cm.t_star, Rational(1)});
        st.actions.push_back(std::move(tau));
    }
    return {std::move(out), std::move(cm)};
}

bool check_finite(const Mdp& m) {
    auto seen = reachable_full(m);
    for (const auto& ec : mec_decompose(m)) {
        bool reachable = false;
        for (int s : ec.states) reachable = reachable || seen[s];
        if (!reachable) continue;
        for (size_t i = 0; i < ec.states.size(); ++i)
            for (int a : ec.actions[i])
                if (m.states[ec.states[i]].actions[a].reward != 0) return false;
    }
    return true;
}

}  // namespace demvar
