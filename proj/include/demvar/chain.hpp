#pragma once

#include <cstdint>
#include <queue>
#include <type_traits>

#include "demvar/linsolve.hpp"
#include "demvar/model.hpp"

namespace demvar {

template <class T>
struct Moments {
    T e1{};
    T e2{};
    T variance() const { return e2 - e1 * e1; }
};

// Per-terminal payoff overlay: first- and second-moment contributions keyed
// by state index. Non-terminal entries are ignored.
template <class T>
struct TerminalObjective {
    std::vector<T> w1, w2;

    static TerminalObjective weighted(const Mdp& m) {
        TerminalObjective o;
        o.w1.assign(m.num_states(), T(0));
        o.w2.assign(m.num_states(), T(0));
        for (int s = 0; s < m.num_states(); ++s) {
            if (m.states[s].weight) {
                o.w1[s] = from_rational<T>(*m.states[s].weight);
                o.w2[s] = o.w1[s] * o.w1[s];
            }
        }
        return o;
    }
};

// States reachable from init through the scheduler's support.
template <class T>
std::vector<char> reachable_states(const Mdp& m, const Scheduler<T>& sig) {
    std::vector<char> seen(m.num_states(), 0);
    std::queue<int> q;
    seen[m.initial] = 1;
    q.push(m.initial);
    while (!q.empty()) {
        int s = q.front();
        q.pop();
        for (int a = 0; a < m.num_actions(s); ++a) {
            if (sig.choice[s][a] == T(0)) continue;
            for (const auto& tr : m.states[s].actions[a].dist) {
                if (!seen[tr.target]) {
                    seen[tr.target] = 1;
                    q.push(tr.target);
                }
            }
        }
    }
    return seen;
}

template <class T>
struct ChainResult {
    std::vector<T> e1, e2;        // per state; 0 at unreachable states
    std::vector<char> reachable;
    Moments<T> at_initial(const Mdp& m) const { return {e1[m.initial], e2[m.initial]}; }
};

namespace detail {

// Solves the two value systems sharing the transition matrix of the chain
// induced by sig, restricted to reachable non-terminal states. rhs1(s) and
// rhs2(s, e1) give the local (known) contribution per unknown; rhs2 sees
// the finished e1 solution.
template <class T, class Rhs1, class Rhs2>
ChainResult<T> solve_chain(const Mdp& m, const Scheduler<T>& sig,
                           const std::vector<T>& term1, const std::vector<T>& term2,
                           Rhs1 rhs1, Rhs2 rhs2) {
    ChainResult<T> out;
    out.reachable = reachable_states(m, sig);
    out.e1.assign(m.num_states(), T(0));
    out.e2.assign(m.num_states(), T(0));

    std::vector<int> idx(m.num_states(), -1);
    std::vector<int> unknowns;
    for (int s = 0; s < m.num_states(); ++s) {
        if (!out.reachable[s]) continue;
        if (m.is_terminal(s)) {
            out.e1[s] = term1[s];
            out.e2[s] = term2[s];
        } else {
            idx[s] = static_cast<int>(unknowns.size());
            unknowns.push_back(s);
        }
    }
    int n = static_cast<int>(unknowns.size());
    if (n == 0) return out;

    // chain transition probability into each state, folded over the scheduler
    auto fold = [&](int s, auto&& visit) {
        for (int a = 0; a < m.num_actions(s); ++a) {
            const T& p = sig.choice[s][a];
            if (p == T(0)) continue;
            for (const auto& tr : m.states[s].actions[a].dist)
                visit(a, tr.target, p * from_rational<T>(tr.prob));
        }
    };

    bool iterative = std::is_same_v<T, double> && n > 2000;
    if (iterative) {
        if constexpr (std::is_same_v<T, double>) {
            std::vector<SparseRow> rows(n);
            std::vector<double> c1(n, 0.0), c2(n, 0.0);
            for (int i = 0; i < n; ++i) {
                int s = unknowns[i];
                c1[i] = rhs1(s);
                fold(s, [&](int, int t, double p) {
                    if (idx[t] >= 0) {
                        if (idx[t] == i)
                            rows[i].diag -= p;
                        else
                            rows[i].entries.push_back({idx[t], p});
                    } else {
                        c1[i] += p * out.e1[t];
                    }
                });
            }
            auto x1 = gauss_seidel(rows, c1);
            for (int i = 0; i < n; ++i) out.e1[unknowns[i]] = x1[i];
            for (int i = 0; i < n; ++i) {
                int s = unknowns[i];
                c2[i] = rhs2(s, out.e1);
                fold(s, [&](int, int t, double p) {
                    if (idx[t] < 0) c2[i] += p * out.e2[t];
                });
            }
            auto x2 = gauss_seidel(rows, c2);
            for (int i = 0; i < n; ++i) out.e2[unknowns[i]] = x2[i];
        }
        return out;
    }

    Mat<T> A = Mat<T>::Identity(n, n);
    Vec<T> b1 = Vec<T>::Zero(n);
    for (int i = 0; i < n; ++i) {
        int s = unknowns[i];
        b1(i) = rhs1(s);
        fold(s, [&](int, int t, T p) {
            if (idx[t] >= 0)
                A(i, idx[t]) -= p;
            else
                b1(i) += p * out.e1[t];
        });
    }
    Vec<T> x1 = solve_dense(A, b1);
    for (int i = 0; i < n; ++i) out.e1[unknowns[i]] = x1(i);

    Vec<T> b2 = Vec<T>::Zero(n);
    for (int i = 0; i < n; ++i) {
        int s = unknowns[i];
        b2(i) = rhs2(s, out.e1);
        fold(s, [&](int, int t, T p) {
            if (idx[t] < 0) b2(i) += p * out.e2[t];
        });
    }
    Vec<T> x2 = solve_dense(A, b2);
    for (int i = 0; i < n; ++i) out.e2[unknowns[i]] = x2(i);
    return out;
}

}  // namespace detail

// First and second payoff moments of the chain induced by sig, with payoff
// collected at terminals per obj.
template <class T>
ChainResult<T> terminal_moments(const Mdp& m, const Scheduler<T>& sig,
                                const TerminalObjective<T>& obj) {
    auto zero1 = [](int) { return T(0); };
    auto zero2 = [](int, const std::vector<T>&) { return T(0); };
    return detail::solve_chain(m, sig, obj.w1, obj.w2, zero1, zero2);
}

template <class T>
ChainResult<T> wr_moments(const Mdp& m, const Scheduler<T>& sig) {
    return terminal_moments(m, sig, TerminalObjective<T>::weighted(m));
}

// Accumulated-reward moments: e1(s) = sum_a sig [r + sum P e1],
// e2(s) = sum_a sig [r^2 + sum P (2 r e1(t) + e2(t))].
template <class T>
ChainResult<T> acc_moments(const Mdp& m, const Scheduler<T>& sig) {
    std::vector<T> zeros(m.num_states(), T(0));
    auto rhs1 = [&](int s) {
        T acc(0);
        for (int a = 0; a < m.num_actions(s); ++a)
            acc += sig.choice[s][a] * T(static_cast<int64_t>(m.states[s].actions[a].reward));
        return acc;
    };
    auto rhs2 = [&](int s, const std::vector<T>& e1) {
        T acc(0);
        for (int a = 0; a < m.num_actions(s); ++a) {
            const T& p = sig.choice[s][a];
            if (p == T(0)) continue;
            T r(static_cast<int64_t>(m.states[s].actions[a].reward));
            T cross(0);
            for (const auto& tr : m.states[s].actions[a].dist)
                cross += from_rational<T>(tr.prob) * e1[tr.target];
            acc += p * (r * r + T(2) * r * cross);
        }
        return acc;
    };
    return detail::solve_chain(m, sig, zeros, zeros, rhs1, rhs2);
}

// Probability of reaching each terminal state from init under sig.
template <class T>
std::vector<T> reach_probs(const Mdp& m, const Scheduler<T>& sig) {
    std::vector<T> out(m.num_states(), T(0));
    for (int q : m.terminals()) {
        TerminalObjective<T> obj;
        obj.w1.assign(m.num_states(), T(0));
        obj.w2.assign(m.num_states(), T(0));
        obj.w1[q] = T(1);
        out[q] = terminal_moments(m, sig, obj).e1[m.initial];
    }
    return out;
}

// Variance of the p / (1-p) mixture of two runs with the given moments.
template <class T>
T mix_variance(const T& p, const Moments<T>& a, const Moments<T>& b) {
    T d = a.e1 - b.e1;
    return p * a.variance() + (T(1) - p) * b.variance() + p * (T(1) - p) * d * d;
}

// Half the expected squared difference of two independent runs.
template <class T>
T pair_variance(const Moments<T>& a, const Moments<T>& b) {
    T d = a.e1 - b.e1;
    return (a.variance() + b.variance() + d * d) / T(2);
}

}  // namespace demvar
