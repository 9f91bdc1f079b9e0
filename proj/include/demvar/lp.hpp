#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "demvar/linsolve.hpp"
#include "demvar/model.hpp"

namespace demvar {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

// maximize c.x subject to A x = b, x >= 0
template <class T>
struct LinearProgram {
    Mat<T> A;
    Vec<T> b;
    Vec<T> c;
    std::vector<std::string> var_names;

    int rows() const { return static_cast<int>(A.rows()); }
    int cols() const { return static_cast<int>(A.cols()); }
};

template <class T>
struct LpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Vec<T> x;
    T value{};
    long long pivots = 0;
};

namespace detail {

template <class T>
inline T lp_tol() {
    if constexpr (std::is_same_v<T, double>)
        return 1e-9;
    else
        return T(0);
}

// One simplex phase on an explicit tableau. tab is rows x (cols+1) with the
// rhs in the last column; obj holds reduced costs (cols entries) plus the
// current objective value. Dantzig rule with a switch to Bland's rule after
// a stretch of degenerate pivots.
template <class T>
SolveStatus simplex_phase(Mat<T>& tab, Vec<T>& obj, std::vector<int>& basis,
                          long long pivot_cap, long long& pivots) {
    const T tol = lp_tol<T>();
    int m = static_cast<int>(tab.rows());
    int n = static_cast<int>(tab.cols()) - 1;
    int degenerate_run = 0;
    while (true) {
        bool bland = degenerate_run > 2 * (m + n);
        int enter = -1;
        if (bland) {
            for (int j = 0; j < n; ++j)
                if (obj(j) < -tol) {
                    enter = j;
                    break;
                }
        } else {
            T best = -tol;
            for (int j = 0; j < n; ++j)
                if (obj(j) < best) {
                    best = obj(j);
                    enter = j;
                }
        }
        if (enter < 0) return SolveStatus::Optimal;

        int leave = -1;
        T best_ratio{};
        for (int i = 0; i < m; ++i) {
            if (tab(i, enter) <= tol) continue;
            T ratio = tab(i, n) / tab(i, enter);
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis[i] < basis[leave]))
                leave = i, best_ratio = ratio;
        }
        if (leave < 0) return SolveStatus::Unbounded;
        if (++pivots > pivot_cap) return SolveStatus::IterationLimit;
        degenerate_run = best_ratio <= tol ? degenerate_run + 1 : 0;

        T piv = tab(leave, enter);
        tab.row(leave) /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            T f = tab(i, enter);
            if (f != T(0)) tab.row(i) -= f * tab.row(leave);
        }
        T f = obj(enter);
        if (f != T(0)) {
            for (int j = 0; j <= n; ++j) obj(j) -= f * tab(leave, j);
        }
        basis[leave] = enter;
    }
}

}  // namespace detail

template <class T>
LpSolution<T> solve_lp(const LinearProgram<T>& p, long long pivot_cap = 1'000'000) {
    const T tol = detail::lp_tol<T>();
    int m = p.rows(), n = p.cols();
    LpSolution<T> out;

    // Phase 1: artificials, maximize -sum(artificials).
    Mat<T> tab(m, n + m + 1);
    tab.setZero();
    for (int i = 0; i < m; ++i) {
        T sgn = p.b(i) < T(0) ? T(-1) : T(1);
        for (int j = 0; j < n; ++j) tab(i, j) = sgn * p.A(i, j);
        tab(i, n + i) = T(1);
        tab(i, n + m) = sgn * p.b(i);
    }
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;
    Vec<T> obj = Vec<T>::Zero(n + m + 1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) obj(j) -= tab(i, j);
        obj(n + m) -= tab(i, n + m);
    }
    // obj(value slot) holds -objective; track via last component consistently:
    // here obj(k) for k<n+m are reduced costs, obj(n+m) is -(current value).
    SolveStatus st = detail::simplex_phase(tab, obj, basis, pivot_cap, out.pivots);
    if (st == SolveStatus::IterationLimit || st == SolveStatus::Unbounded) {
        out.status = SolveStatus::IterationLimit;
        return out;
    }
    if (obj(n + m) < -(tol * T(m + 1) + tol)) {
        // phase-1 optimum below zero: infeasible
        out.status = SolveStatus::Infeasible;
        return out;
    }
    // Drive remaining artificials out of the basis or drop their rows.
    std::vector<char> keep_row(m, 1);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        int piv_col = -1;
        for (int j = 0; j < n; ++j)
            if (tab(i, j) > tol || tab(i, j) < -tol) {
                piv_col = j;
                break;
            }
        if (piv_col < 0) {
            keep_row[i] = 0;  // redundant constraint
            continue;
        }
        T piv = tab(i, piv_col);
        tab.row(i) /= piv;
        for (int r = 0; r < m; ++r) {
            if (r == i) continue;
            T f = tab(r, piv_col);
            if (f != T(0)) tab.row(r) -= f * tab.row(i);
        }
        basis[i] = piv_col;
    }

    // Phase 2 tableau without artificial columns and dropped rows.
    int m2 = 0;
    for (int i = 0; i < m; ++i) m2 += keep_row[i];
    Mat<T> tab2(m2, n + 1);
    std::vector<int> basis2;
    basis2.reserve(m2);
    int r2 = 0;
    for (int i = 0; i < m; ++i) {
        if (!keep_row[i]) continue;
        for (int j = 0; j < n; ++j) tab2(r2, j) = tab(i, j);
        tab2(r2, n) = tab(i, n + m);
        basis2.push_back(basis[i]);
        ++r2;
    }
    Vec<T> obj2 = Vec<T>::Zero(n + 1);
    for (int j = 0; j < n; ++j) obj2(j) = -p.c(j);
    for (int i = 0; i < m2; ++i) {
        T cb = p.c(basis2[i]);
        if (cb != T(0)) {
            for (int j = 0; j <= n; ++j) obj2(j) += cb * tab2(i, j);
        }
    }
    st = detail::simplex_phase(tab2, obj2, basis2, pivot_cap, out.pivots);
    if (st != SolveStatus::Optimal) {
        out.status = st;
        return out;
    }
    out.status = SolveStatus::Optimal;
    out.x = Vec<T>::Zero(n);
    for (int i = 0; i < m2; ++i) out.x(basis2[i]) = tab2(i, n);
    out.value = p.c.dot(out.x);
    return out;
}

// Occupation-measure polytope: variables x[s,a] for non-terminal (s,a) and
// y[q] for terminals; one flow-conservation row per non-terminal (with the
// initial-state source indicator), one inflow row defining each y[q].
template <class T>
struct FlowProgram {
    LinearProgram<T> lp;
    std::vector<std::vector<int>> x_index;  // [s][a], -1 on terminal states
    std::vector<int> y_index;               // [s], -1 on non-terminals
    int num_vars = 0;
};

template <class T>
FlowProgram<T> build_flow(const Mdp& m) {
    FlowProgram<T> f;
    int n = m.num_states();
    f.x_index.assign(n, {});
    f.y_index.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        if (m.is_terminal(s)) continue;
        f.x_index[s].assign(m.num_actions(s), -1);
        for (int a = 0; a < m.num_actions(s); ++a) {
            f.x_index[s][a] = f.num_vars++;
            f.lp.var_names.push_back("x[" + m.states[s].name + "," +
                                     m.states[s].actions[a].name + "]");
        }
    }
    for (int s = 0; s < n; ++s) {
        if (!m.is_terminal(s)) continue;
        f.y_index[s] = f.num_vars++;
        f.lp.var_names.push_back("y[" + m.states[s].name + "]");
    }

    f.lp.A = Mat<T>::Zero(n, f.num_vars);
    f.lp.b = Vec<T>::Zero(n);
    f.lp.c = Vec<T>::Zero(f.num_vars);
    int r = 0;
    for (int s = 0; s < n; ++s, ++r) {
        if (m.is_terminal(s))
            f.lp.A(r, f.y_index[s]) = T(1);
        else
            for (int a = 0; a < m.num_actions(s); ++a)
                f.lp.A(r, f.x_index[s][a]) += T(1);
        // inflow from non-terminal predecessors
        for (int t = 0; t < n; ++t) {
            if (m.is_terminal(t)) continue;
            for (int a = 0; a < m.num_actions(t); ++a)
                for (const auto& tr : m.states[t].actions[a].dist)
                    if (tr.target == s)
                        f.lp.A(r, f.x_index[t][a]) -= from_rational<T>(tr.prob);
        }
        if (s == m.initial) f.lp.b(r) = T(1);
    }
    return f;
}

// Normalized occupation measure -> memoryless scheduler; zero-mass states
// fall back to a Dirac on the lowest-index action.
template <class T>
Scheduler<T> extract_scheduler(const Mdp& m, const FlowProgram<T>& f, const Vec<T>& x,
                               const T& tol = detail::lp_tol<T>()) {
    Scheduler<T> s;
    s.choice.resize(m.num_states());
    for (int st = 0; st < m.num_states(); ++st) {
        s.choice[st].assign(m.num_actions(st), T(0));
        if (m.is_terminal(st)) {
            s.choice[st][0] = T(1);
            continue;
        }
        T mass(0);
        for (int a = 0; a < m.num_actions(st); ++a) mass += x(f.x_index[st][a]);
        if (mass > tol) {
            for (int a = 0; a < m.num_actions(st); ++a)
                s.choice[st][a] = x(f.x_index[st][a]) / mass;
        } else {
            s.choice[st][0] = T(1);
        }
    }
    return s;
}

}  // namespace demvar
