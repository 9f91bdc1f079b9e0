#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "demvar/chain.hpp"
#include "demvar/linsolve.hpp"
#include "demvar/model.hpp"
#include "demvar/wreach.hpp"

namespace demvar {

namespace detail {

// Total expected reward of the chain fixed by pick, from every state.
// Assumes a collapsed model: every non-terminal state is transient under any
// scheduler, so the system is nonsingular.
inline std::vector<Rational> policy_eval(const Mdp& m, const std::vector<int>& pick,
                                         const std::vector<std::vector<Rational>>& rew) {
    int n = m.num_states();
    std::vector<int> idx(n, -1);
    std::vector<int> unknowns;
    for (int s = 0; s < n; ++s) {
        if (m.is_terminal(s)) continue;
        idx[s] = static_cast<int>(unknowns.size());
        unknowns.push_back(s);
    }
    int k = static_cast<int>(unknowns.size());
    std::vector<Rational> value(n, Rational(0));
    if (k == 0) return value;
    Mat<Rational> A = Mat<Rational>::Identity(k, k);
    Vec<Rational> b = Vec<Rational>::Zero(k);
    for (int i = 0; i < k; ++i) {
        int s = unknowns[i];
        b(i) = rew[s][pick[s]];
        for (const auto& tr : m.states[s].actions[pick[s]].dist)
            if (idx[tr.target] >= 0) A(i, idx[tr.target]) -= tr.prob;
    }
    Vec<Rational> x = solve_dense(A, b);
    for (int i = 0; i < k; ++i) value[unknowns[i]] = x(i);
    return value;
}

struct PolicyResult {
    std::vector<Rational> value;
    std::vector<int> pick;
};

// Exact policy iteration for the maximal expected total reward, optionally
// restricted to an allowed-action subset per state. Ties go to the lowest
// action index.
inline PolicyResult max_total_reward(const Mdp& m,
                                     const std::vector<std::vector<Rational>>& rew,
                                     const std::vector<std::vector<int>>* allowed = nullptr) {
    int n = m.num_states();
    PolicyResult res;
    res.pick.assign(n, 0);
    if (allowed)
        for (int s = 0; s < n; ++s)
            if (!(*allowed)[s].empty()) res.pick[s] = (*allowed)[s][0];
    while (true) {
        res.value = policy_eval(m, res.pick, rew);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            if (m.is_terminal(s)) continue;
            auto q = [&](int a) {
                Rational v = rew[s][a];
                for (const auto& tr : m.states[s].actions[a].dist)
                    v += tr.prob * res.value[tr.target];
                return v;
            };
            int best = res.pick[s];
            Rational best_q = q(best);
            auto try_action = [&](int a) {
                Rational qa = q(a);
                if (qa > best_q) {
                    best_q = qa;
                    best = a;
                } else if (qa == best_q && a < best) {
                    best = a;  // deterministic tie-break, no improvement
                }
            };
            if (allowed) {
                for (int a : (*allowed)[s]) try_action(a);
            } else {
                for (int a = 0; a < m.num_actions(s); ++a) try_action(a);
            }
            if (best_q > q(res.pick[s])) {
                res.pick[s] = best;
                changed = true;
            }
        }
        if (!changed) return res;
    }
}

inline std::vector<std::vector<Rational>> action_rewards(const Mdp& m) {
    std::vector<std::vector<Rational>> rew(m.num_states());
    for (int s = 0; s < m.num_states(); ++s)
        for (const auto& a : m.states[s].actions)
            rew[s].push_back(Rational(static_cast<int64_t>(a.reward)));
    return rew;
}

}  // namespace detail

// Exact quantities driving the reward-counter reduction. Computed with
// rational arithmetic in every mode: act_max membership, delta and the
// bounds feed hard thresholds downstream.
struct RewardAnalysisContext {
    std::vector<Rational> e_max;            // maximal expected total reward per state
    std::vector<std::vector<int>> act_max;  // expectation-maximizing actions
    bool has_nonmax = false;                // any non-maximizing action anywhere
    Rational delta;                         // minimal expectation loss, 0 if !has_nonmax
    Rational M;                             // max_s e_max(s)
    Rational Q;                             // second-moment bound 2|S|^2 R^2 / p_min^(2|S|)
    Rational B, Bprime;                     // switch bounds (0 when !has_nonmax)
    std::vector<int> u_pick;                // the auxiliary scheduler U
    std::vector<Rational> e2_u;             // E^U(total reward squared) per state
};

inline RewardAnalysisContext context(const Mdp& m) {
    RewardAnalysisContext ctx;
    int n = m.num_states();
    auto rew = detail::action_rewards(m);
    auto pr = detail::max_total_reward(m, rew);
    ctx.e_max = pr.value;

    ctx.act_max.resize(n);
    ctx.delta = 0;
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < m.num_actions(s); ++a) {
            Rational q = rew[s][a];
            for (const auto& tr : m.states[s].actions[a].dist)
                q += tr.prob * ctx.e_max[tr.target];
            if (m.is_terminal(s) || q == ctx.e_max[s]) {
                ctx.act_max[s].push_back(a);
            } else {
                Rational gap = ctx.e_max[s] - q;
                if (!ctx.has_nonmax || gap < ctx.delta) ctx.delta = gap;
                ctx.has_nonmax = true;
            }
        }
    }

    ctx.M = 0;
    for (int s = 0; s < n; ++s) ctx.M = std::max(ctx.M, ctx.e_max[s]);

    Rational R(static_cast<int64_t>(m.max_reward()));
    Rational p_min = m.min_positive_prob();
    Rational pm_pow = 1;
    for (int i = 0; i < 2 * n; ++i) pm_pow *= p_min;
    ctx.Q = Rational(2) * n * n * R * R / pm_pow;

    if (ctx.has_nonmax) {
        ctx.B = (ctx.Q + Rational(5, 2) * ctx.M * ctx.M) / ctx.delta + 2 * ctx.M + 1;
        ctx.Bprime = ctx.Q / (2 * ctx.delta) + 2 * ctx.M + 1;
    } else {
        ctx.B = 0;
        ctx.Bprime = 0;
    }
    if (ctx.Bprime > ctx.B)
        throw std::logic_error("bound ordering violated");

    // U: among expectation-maximal actions, maximize the auxiliary total
    // reward rew'(s,a) = rew^2 + 2 rew * E(e_max at the successor); its value
    // function is E^U(total reward squared).
    std::vector<std::vector<Rational>> rew2(n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < m.num_actions(s); ++a) {
            Rational succ = 0;
            for (const auto& tr : m.states[s].actions[a].dist)
                succ += tr.prob * ctx.e_max[tr.target];
            rew2[s].push_back(rew[s][a] * rew[s][a] + 2 * rew[s][a] * succ);
        }
    }
    auto pu = detail::max_total_reward(m, rew2, &ctx.act_max);
    ctx.u_pick = pu.pick;
    ctx.e2_u = pu.value;
    for (int s = 0; s < n; ++s) {
        if (ctx.act_max[s].empty()) throw std::logic_error("empty act_max");
        if (ctx.e2_u[s] > ctx.Q) throw std::logic_error("second-moment bound violated");
    }
    return ctx;
}

// The reward-counter product. The carrier Mdp is weighted-reachability
// shaped; T2' continuation moments live in the explicit objective, and the
// state weights hold the e1 coefficients.
struct UnfoldedMdp {
    Mdp mdp;
    TerminalObjective<Rational> obj;          // exact; convert per analysis mode
    std::vector<std::pair<int, long long>> back;  // unfolded -> (state, counter)
    std::map<std::pair<int, long long>, int> index;
    long long bound = 0;
    bool heuristic = false;  // bound below the sound B
};

template <class T>
TerminalObjective<T> convert_objective(const TerminalObjective<Rational>& o) {
    TerminalObjective<T> out;
    out.w1.reserve(o.w1.size());
    out.w2.reserve(o.w2.size());
    for (const auto& v : o.w1) out.w1.push_back(from_rational<T>(v));
    for (const auto& v : o.w2) out.w2.push_back(from_rational<T>(v));
    return out;
}

inline UnfoldedMdp unfold(const Mdp& m, const RewardAnalysisContext& ctx,
                          const AnalysisConfig& cfg) {
    UnfoldedMdp u;
    if (cfg.bound_override) {
        u.bound = *cfg.bound_override;
        u.heuristic = Rational(static_cast<int64_t>(u.bound)) < ctx.B;
    } else {
        BigInt fl = boost::multiprecision::numerator(ctx.B) /
                    boost::multiprecision::denominator(ctx.B);
        BigInt cap(int64_t{1} << 62);
        u.bound = (fl > cap ? cap : fl).convert_to<long long>();
        u.heuristic = false;
    }

    auto name_of = [&](int s, long long w) {
        return m.states[s].name + "@" + std::to_string(w);
    };
    std::vector<std::pair<int, long long>> queue;
    auto intern = [&](int s, long long w) {
        auto key = std::make_pair(s, w);
        auto it = u.index.find(key);
        if (it != u.index.end()) return it->second;
        int id = static_cast<int>(u.back.size());
        if (id >= cfg.max_unfold_states)
            throw std::runtime_error(
                "unfolding exceeds max_unfold_states; pass a bound override");
        u.index.emplace(key, id);
        u.back.push_back(key);
        u.mdp.states.push_back({});
        u.mdp.states.back().name = name_of(s, w);
        queue.push_back(key);
        return id;
    };

    u.mdp.mode = PayoffMode::Weighted;
    intern(m.initial, 0);
    u.mdp.initial = 0;
    for (size_t head = 0; head < queue.size(); ++head) {
        auto [s, w] = queue[head];
        int id = u.index.at({s, w});
        bool exceeded = w > u.bound;
        if (exceeded || m.is_terminal(s)) {
            State& st = u.mdp.states[id];
            st.weight = Rational(static_cast<int64_t>(w)) + (exceeded ? ctx.e_max[s] : 0);
            Action loop;
            loop.name = "loop";
            loop.dist.push_back({id, Rational(1)});
            st.actions.push_back(std::move(loop));
            continue;
        }
        for (int a = 0; a < m.num_actions(s); ++a) {
            const Action& src = m.states[s].actions[a];
            Action act;
            act.name = src.name;
            long long w2 = w + static_cast<long long>(src.reward);
            for (const auto& tr : src.dist)
                act.dist.push_back({intern(tr.target, w2), tr.prob});
            u.mdp.states[id].actions.push_back(std::move(act));
        }
    }

    int un = u.mdp.num_states();
    u.obj.w1.assign(un, Rational(0));
    u.obj.w2.assign(un, Rational(0));
    for (int id = 0; id < un; ++id) {
        if (!u.mdp.states[id].weight) continue;
        auto [s, w] = u.back[id];
        Rational rw(static_cast<int64_t>(w));
        if (w > u.bound) {  // counter exceeded: continue with U's moments
            u.obj.w1[id] = rw + ctx.e_max[s];
            u.obj.w2[id] = rw * rw + 2 * rw * ctx.e_max[s] + ctx.e2_u[s];
        } else {  // genuine terminal reached below the bound
            u.obj.w1[id] = rw;
            u.obj.w2[id] = rw * rw;
        }
    }
    return u;
}

// Reward-dependent finite-memory schedule: distributions per (state,
// counter) up to the unfolding bound, the auxiliary scheduler U above it.
template <class T>
struct RewardSchedule {
    std::map<std::pair<int, long long>, std::vector<T>> choice;
    std::vector<int> u_pick;

    std::vector<T> at(const Mdp& m, int s, long long w) const {
        auto it = choice.find({s, w});
        if (it != choice.end()) return it->second;
        std::vector<T> dirac(m.num_actions(s), T(0));
        dirac[u_pick[s]] = T(1);
        return dirac;
    }
};

template <class T>
struct AccResult {
    T value{};
    RewardSchedule<T> schedule;
    RewardSchedule<T> schedule2;  // demonic pair partner
    RewardAnalysisContext ctx;
    bool heuristic_bound = false;
    long long bound = 0;
    std::map<std::string, std::string> diagnostics;
};

namespace detail {

template <class T>
RewardSchedule<T> map_back(const UnfoldedMdp& u, const RewardAnalysisContext& ctx,
                           const Scheduler<T>& sched) {
    RewardSchedule<T> out;
    out.u_pick = ctx.u_pick;
    for (int id = 0; id < u.mdp.num_states(); ++id) {
        if (u.mdp.states[id].weight) continue;  // unfolded terminal rows
        out.choice[u.back[id]] = sched.choice[id];
    }
    return out;
}

// No non-maximizing action anywhere: every scheduler hits e_max, so the
// spread is purely probabilistic and U maximizes the second moment.
template <class T>
AccResult<T> expectation_only(const Mdp& m, const RewardAnalysisContext& ctx) {
    AccResult<T> out;
    out.ctx = ctx;
    Rational var =
        ctx.e2_u[m.initial] - ctx.e_max[m.initial] * ctx.e_max[m.initial];
    out.value = from_rational<T>(var);
    out.schedule.u_pick = ctx.u_pick;
    out.schedule2.u_pick = ctx.u_pick;
    out.diagnostics["short_circuit"] = "no non-maximizing action";
    return out;
}

}  // namespace detail

template <class T>
AccResult<T> acc_max_variance(const Mdp& m, const AnalysisConfig& cfg) {
    auto ctx = context(m);
    if (!ctx.has_nonmax && !cfg.bound_override) return detail::expectation_only<T>(m, ctx);
    auto u = unfold(m, ctx, cfg);
    auto obj = convert_objective<T>(u.obj);
    auto res = max_variance<T>(u.mdp, cfg, &obj);
    AccResult<T> out;
    out.value = res.value;
    out.schedule = detail::map_back(u, ctx, res.witness);
    out.ctx = std::move(ctx);
    out.heuristic_bound = u.heuristic;
    out.bound = u.bound;
    out.diagnostics = std::move(res.diagnostics);
    out.diagnostics["unfold_states"] = std::to_string(u.mdp.num_states());
    return out;
}

template <class T>
AccResult<T> acc_demonic_variance(const Mdp& m, const AnalysisConfig& cfg) {
    auto ctx = context(m);
    if (!ctx.has_nonmax && !cfg.bound_override) return detail::expectation_only<T>(m, ctx);
    AnalysisConfig c2 = cfg;
    if (!c2.bound_override) {
        // the demonic switch bound B' suffices and is smaller
        BigInt fl = boost::multiprecision::numerator(ctx.Bprime) /
                    boost::multiprecision::denominator(ctx.Bprime);
        BigInt cap(int64_t{1} << 62);
        c2.bound_override = (fl > cap ? cap : fl).convert_to<long long>();
    }
    auto u = unfold(m, ctx, c2);
    u.heuristic = cfg.bound_override &&
                  Rational(static_cast<int64_t>(u.bound)) < ctx.Bprime;
    auto obj = convert_objective<T>(u.obj);
    auto res = demonic_variance<T>(u.mdp, cfg, &obj);
    AccResult<T> out;
    out.value = res.value;
    out.schedule = detail::map_back(u, ctx, res.witness);
    out.schedule2 = detail::map_back(u, ctx, res.witness2);
    out.ctx = std::move(ctx);
    out.heuristic_bound = u.heuristic;
    out.bound = u.bound;
    out.diagnostics = std::move(res.diagnostics);
    out.diagnostics["unfold_states"] = std::to_string(u.mdp.num_states());
    return out;
}

}  // namespace demvar
