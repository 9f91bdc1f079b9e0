#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "demvar/chain.hpp"
#include "demvar/lp.hpp"
#include "demvar/oracle.hpp"

namespace demvar {

template <class T>
struct VarResult {
    T value{};
    Scheduler<T> witness;   // maximizer (maxvar) or first of the pair (demvar)
    Scheduler<T> witness2;  // second of the demvar pair
    std::map<std::string, std::string> diagnostics;
};

namespace detail {

template <class T>
struct FlowPoint {
    T e1{}, e2{};
    Vec<T> x;
};

template <class T>
class FlowOracle {
public:
    FlowOracle(const Mdp& m, const TerminalObjective<T>& obj, const AnalysisConfig& cfg)
        : m_(m), obj_(obj), cfg_(cfg), f_(build_flow<T>(m)) {}

    const FlowProgram<T>& flow() const { return f_; }
    long long lp_calls() const { return lp_calls_; }

    FlowPoint<T> point_of(const Vec<T>& x) const {
        FlowPoint<T> p;
        p.x = x;
        for (int q = 0; q < m_.num_states(); ++q) {
            if (f_.y_index[q] < 0) continue;
            p.e1 += obj_.w1[q] * x(f_.y_index[q]);
            p.e2 += obj_.w2[q] * x(f_.y_index[q]);
        }
        return p;
    }

    // maximize a*e1 + b*e2 over the polytope
    FlowPoint<T> solve_linear(const T& a, const T& b) {
        LinearProgram<T> lp = f_.lp;
        for (int q = 0; q < m_.num_states(); ++q)
            if (f_.y_index[q] >= 0)
                lp.c(f_.y_index[q]) = a * obj_.w1[q] + b * obj_.w2[q];
        return run(lp);
    }

    // maximize e2 subject to e1 = target (used for hull endpoints)
    FlowPoint<T> solve_at_e1(const T& target) {
        LinearProgram<T> lp = f_.lp;
        int rows = lp.rows();
        lp.A.conservativeResize(rows + 1, Eigen::NoChange);
        lp.A.row(rows).setZero();
        lp.b.conservativeResize(rows + 1);
        for (int q = 0; q < m_.num_states(); ++q)
            if (f_.y_index[q] >= 0) {
                lp.A(rows, f_.y_index[q]) = obj_.w1[q];
                lp.c(f_.y_index[q]) = obj_.w2[q];
            }
        lp.b(rows) = target;
        return run(lp);
    }

private:
    FlowPoint<T> run(const LinearProgram<T>& lp) {
        ++lp_calls_;
        auto sol = solve_lp(lp, cfg_.simplex_pivot_cap);
        if (sol.status != SolveStatus::Optimal)
            throw std::runtime_error(
                "flow program not solvable (is the model preprocessed?)");
        return point_of(sol.x.head(f_.num_vars));
    }

    const Mdp& m_;
    const TerminalObjective<T>& obj_;
    const AnalysisConfig& cfg_;
    FlowProgram<T> f_;
    long long lp_calls_ = 0;
};

}  // namespace detail

// Maximal payoff variance e2 - e1^2 over all schedulers. The achievable
// (e1, e2) pairs form a polytope whose upper boundary in e2 is concave
// piecewise linear; the maximizer is traced by recursive chord refinement
// (each LP call either certifies a hull edge or exposes a new vertex), and
// on a certified edge the concave quadratic is maximized in closed form.
template <class T>
VarResult<T> max_variance(const Mdp& m, const AnalysisConfig& cfg,
                          const TerminalObjective<T>* overlay = nullptr) {
    TerminalObjective<T> def;
    if (!overlay) {
        def = TerminalObjective<T>::weighted(m);
        overlay = &def;
    }
    detail::FlowOracle<T> lp(m, *overlay, cfg);

    auto left = lp.solve_linear(T(-1), T(0));
    left = lp.solve_at_e1(left.e1);
    auto right = lp.solve_linear(T(1), T(0));
    right = lp.solve_at_e1(right.e1);

    T best{};
    Vec<T> best_x;
    T best_width{};
    bool have = false;
    auto consider = [&](const T& val, const Vec<T>& x, const T& width) {
        if (!have || val > best) {
            best = val;
            best_x = x;
            best_width = width;
            have = true;
        }
    };
    auto vertex = [&](const detail::FlowPoint<T>& p) {
        consider(p.e2 - p.e1 * p.e1, p.x, T(0));
    };
    vertex(left);
    vertex(right);

    const T eps = std::is_same_v<T, double> ? T(1e-12) : T(0);
    // value-equivalence tolerance scaled by magnitudes involved
    std::function<void(const detail::FlowPoint<T>&, const detail::FlowPoint<T>&, int)>
        refine = [&](const detail::FlowPoint<T>& l, const detail::FlowPoint<T>& r,
                     int depth) {
            T width = r.e1 - l.e1;
            if (width <= eps) return;
            T sigma = (r.e2 - l.e2) / width;
            auto mid = lp.solve_linear(-sigma, T(1));
            T lift = (mid.e2 - sigma * mid.e1) - (l.e2 - sigma * l.e1);
            bool is_edge = lift <= eps * (T(1) + (sigma < T(0) ? -sigma : sigma)) ||
                           mid.e1 <= l.e1 + eps || mid.e1 >= r.e1 - eps || depth > 64;
            if (is_edge) {
                T opt = sigma / T(2);
                if (opt < l.e1) opt = l.e1;
                if (opt > r.e1) opt = r.e1;
                T val = l.e2 + sigma * (opt - l.e1) - opt * opt;
                T theta = (opt - l.e1) / width;
                Vec<T> x = (T(1) - theta) * l.x + theta * r.x;
                consider(val, x, width);
                return;
            }
            vertex(mid);
            refine(l, mid, depth + 1);
            refine(mid, r, depth + 1);
        };
    refine(left, right, 0);

    VarResult<T> out;
    out.value = best;
    out.witness = extract_scheduler(m, lp.flow(), best_x);
    out.diagnostics["lp_calls"] = std::to_string(lp.lp_calls());
    out.diagnostics["bracket_width"] = std::to_string(to_double(best_width));
    return out;
}

// Demonic variance: maximize 1/2 E((X1 - X2)^2) over independent scheduler
// pairs by alternating best responses. Fixing one side's moments (e1', e2')
// makes the other side's objective linear in its occupation measure, with
// terminal coefficients w2 - 2 e1' w1. Multi-start over every Dirac initial
// choice plus seeded random memoryless-deterministic schedulers; when the
// model is small enough the exhaustive pair enumeration cross-checks (and,
// if strictly better, replaces) the ascent result.
template <class T>
VarResult<T> demonic_variance(const Mdp& m, const AnalysisConfig& cfg,
                              const TerminalObjective<T>* overlay = nullptr) {
    TerminalObjective<T> def;
    if (!overlay) {
        def = TerminalObjective<T>::weighted(m);
        overlay = &def;
    }
    const TerminalObjective<T>& obj = *overlay;
    detail::FlowOracle<T> lp(m, obj, cfg);

    auto pair_value = [](const Moments<T>& a, const Moments<T>& b) {
        return (a.e2 + b.e2) / T(2) - a.e1 * b.e1;
    };
    auto respond = [&](const T& opp_e1) {
        return lp.solve_linear(T(-2) * opp_e1, T(1));
    };

    // start schedulers: Dirac per initial action, then random MD
    std::vector<std::vector<int>> starts;
    for (int a = 0; a < m.num_actions(m.initial); ++a) {
        std::vector<int> pick(m.num_states(), 0);
        pick[m.initial] = a;
        starts.push_back(pick);
    }
    for (int i = 0; i < cfg.random_restarts; ++i) {
        CounterRng rng(cfg.seed, 0x5eed0000ULL + i);
        std::vector<int> pick(m.num_states());
        for (int s = 0; s < m.num_states(); ++s)
            pick[s] = static_cast<int>(rng.next_below(m.num_actions(s)));
        starts.push_back(pick);
    }

    bool have = false;
    T best{};
    Vec<T> best_a, best_b;
    long long total_iters = 0;
    const T tol = std::is_same_v<T, double> ? T(cfg.ascent_tol) : T(0);
    for (const auto& pick : starts) {
        auto sched = Scheduler<T>::deterministic(m, pick);
        auto cm = terminal_moments(m, sched, obj);
        Moments<T> mb = cm.at_initial(m);
        detail::FlowPoint<T> pa, pb;
        bool have_pb = false;
        T cur{};
        bool have_cur = false;
        for (int it = 0; it < 200; ++it) {
            ++total_iters;
            pa = respond(mb.e1);
            Moments<T> ma{pa.e1, pa.e2};
            pb = respond(ma.e1);
            have_pb = true;
            mb = {pb.e1, pb.e2};
            T val = pair_value(ma, mb);
            if (have_cur && val <= cur + tol) {
                cur = std::max(cur, val);
                break;
            }
            cur = val;
            have_cur = true;
        }
        if (have_pb && (!have || cur > best)) {
            best = cur;
            best_a = pa.x;
            best_b = pb.x;
            have = true;
        }
    }

    VarResult<T> out;
    out.value = best;
    out.witness = extract_scheduler(m, lp.flow(), best_a);
    out.witness2 = extract_scheduler(m, lp.flow(), best_b);
    out.diagnostics["ascent_restarts"] = std::to_string(starts.size());
    out.diagnostics["ascent_iterations"] = std::to_string(total_iters);

    if (cfg.use_exact_oracle && count_md(m) <= cfg.md_cap) {
        auto exact = exact_demvar(m, cfg, &obj);
        T gap = exact.value - best;
        out.diagnostics["oracle_gap"] = std::to_string(to_double(gap));
        T vtol = std::is_same_v<T, double> ? T(cfg.tol_value) : T(0);
        if (gap > vtol) {
            out.value = exact.value;
            out.witness = Scheduler<T>::deterministic(m, exact.first);
            out.witness2 = Scheduler<T>::deterministic(m, exact.second);
        }
    }
    return out;
}

// (demvar - maxvar) / maxvar, clamped into [0, 1] when within tol of it.
inline double nds_value(double maxvar, double demvar, double tol = 1e-9) {
    if (maxvar <= tol)
        throw std::domain_error("zero maximal variance: score undefined");
    double v = (demvar - maxvar) / maxvar;
    if (v < 0 && v >= -tol) v = 0;
    if (v > 1 && v <= 1 + tol) v = 1;
    return v;
}

// Two-run deviation bound P(|X1 - X2| >= k * sqrt(demvar)) <= 2/k^2.
inline double chebyshev_bound(double k) {
    if (k <= 0) throw std::domain_error("k must be positive");
    return std::min(1.0, 2.0 / (k * k));
}

// Single-run corollary against the demonic spread: bound 4/k^2.
inline double chebyshev_single_bound(double k) {
    if (k <= 0) throw std::domain_error("k must be positive");
    return std::min(1.0, 4.0 / (k * k));
}

}  // namespace demvar
