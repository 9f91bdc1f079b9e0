#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "demvar/chain.hpp"
#include "demvar/model.hpp"
#include "demvar/rng.hpp"

namespace demvar {

// Number of memoryless deterministic schedulers, saturating.
inline long long count_md(const Mdp& m) {
    long long n = 1;
    for (int s = 0; s < m.num_states(); ++s) {
        int k = m.num_actions(s);
        if (n > std::numeric_limits<long long>::max() / k)
            return std::numeric_limits<long long>::max();
        n *= k;
    }
    return n;
}

// Visits every MD scheduler exactly once, lexicographically (state 0 most
// significant). f receives the action-pick vector.
template <class F>
void enumerate_md(const Mdp& m, F&& f) {
    std::vector<int> pick(m.num_states(), 0);
    while (true) {
        f(static_cast<const std::vector<int>&>(pick));
        int s = m.num_states() - 1;
        while (s >= 0 && ++pick[s] == m.num_actions(s)) pick[s--] = 0;
        if (s < 0) return;
    }
}

namespace detail {

// Extreme points of the convex hull of (a, b) pairs, as indices into the
// input, via Andrew's monotone chain. With upper_only, just the upper chain.
template <class T>
std::vector<int> hull_indices(const std::vector<std::pair<T, T>>& pts, bool upper_only) {
    std::vector<int> order(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return pts[i] < pts[j];
    });
    auto cross = [&](int o, int a, int b) {
        return (pts[a].first - pts[o].first) * (pts[b].second - pts[o].second) -
               (pts[a].second - pts[o].second) * (pts[b].first - pts[o].first);
    };
    auto chain = [&](bool upper) {
        std::vector<int> h;
        for (size_t ii = 0; ii < order.size(); ++ii) {
            int i = order[upper ? order.size() - 1 - ii : ii];
            while (h.size() >= 2 && cross(h[h.size() - 2], h.back(), i) <= T(0))
                h.pop_back();
            h.push_back(i);
        }
        return h;
    };
    auto up = chain(true);
    if (upper_only) {
        std::reverse(up.begin(), up.end());  // ascending in the first coordinate
        return up;
    }
    auto lo = chain(false);
    lo.insert(lo.end(), up.begin() + 1, up.size() > 1 ? up.end() - 1 : up.begin() + 1);
    return lo;
}

template <class T>
std::vector<Moments<T>> md_moments(const Mdp& m, const TerminalObjective<T>& obj) {
    std::vector<Moments<T>> out;
    enumerate_md(m, [&](const std::vector<int>& pick) {
        auto sched = Scheduler<T>::deterministic(m, pick);
        out.push_back(terminal_moments(m, sched, obj).at_initial(m));
    });
    return out;
}

}  // namespace detail

template <class T>
struct DemvarOracleResult {
    T value{};
    std::vector<int> first, second;  // action picks of the witness pair
};

// Exhaustive demonic variance: max over MD pairs of
// 1/2 (V1 + V2 + (e1_1 - e1_2)^2); ties go to the lexicographically
// smallest pair. Large enumerations are pruned to convex-hull extreme
// points of the (e1, V) cloud, where the maximum of this convex objective
// must lie.
template <class T>
DemvarOracleResult<T> exact_demvar(const Mdp& m, const AnalysisConfig& cfg,
                                   const TerminalObjective<T>* overlay = nullptr) {
    TerminalObjective<T> def;
    if (!overlay) {
        def = TerminalObjective<T>::weighted(m);
        overlay = &def;
    }
    long long count = count_md(m);
    if (count > cfg.md_cap)
        throw std::runtime_error("scheduler enumeration exceeds md_cap (" +
                                 std::to_string(count) + " MD schedulers)");
    auto moments = detail::md_moments(m, *overlay);
    int k = static_cast<int>(moments.size());

    std::vector<int> cand(k);
    for (int i = 0; i < k; ++i) cand[i] = i;
    if (static_cast<long long>(k) * k > 4'000'000) {
        std::vector<std::pair<T, T>> pts(k);
        for (int i = 0; i < k; ++i) pts[i] = {moments[i].e1, moments[i].variance()};
        cand = detail::hull_indices(pts, false);
        std::sort(cand.begin(), cand.end());
    }

    DemvarOracleResult<T> out;
    bool have = false;
    int bi = -1, bj = -1;
    for (int i : cand) {
        for (int j : cand) {
            if (j < i) continue;
            T v = pair_variance(moments[i], moments[j]);
            if (!have || v > out.value) {
                out.value = v;
                bi = i;
                bj = j;
                have = true;
            }
        }
    }
    auto pick_of = [&](long long index) {
        std::vector<int> pick(m.num_states());
        for (int s = m.num_states() - 1; s >= 0; --s) {
            pick[s] = static_cast<int>(index % m.num_actions(s));
            index /= m.num_actions(s);
        }
        return pick;
    };
    out.first = pick_of(bi);
    out.second = pick_of(bj);
    return out;
}

// Exact maximal variance from first principles: mixtures span the convex
// hull of MD (e1, e2) points, so the optimum of e2 - e1^2 lies on the upper
// hull, maximized edge by edge in closed form.
template <class T>
T hull_maxvar(const Mdp& m, const AnalysisConfig& cfg,
              const TerminalObjective<T>* overlay = nullptr) {
    TerminalObjective<T> def;
    if (!overlay) {
        def = TerminalObjective<T>::weighted(m);
        overlay = &def;
    }
    long long count = count_md(m);
    if (count > cfg.md_cap)
        throw std::runtime_error("scheduler enumeration exceeds md_cap (" +
                                 std::to_string(count) + " MD schedulers)");
    auto moments = detail::md_moments(m, *overlay);
    std::vector<std::pair<T, T>> pts(moments.size());
    for (size_t i = 0; i < moments.size(); ++i) pts[i] = {moments[i].e1, moments[i].e2};
    auto hull = detail::hull_indices(pts, true);

    bool have = false;
    T best{};
    auto consider = [&](const T& v) {
        if (!have || v > best) {
            best = v;
            have = true;
        }
    };
    for (size_t i = 0; i < hull.size(); ++i) {
        const auto& p = pts[hull[i]];
        consider(p.second - p.first * p.first);
        if (i + 1 == hull.size()) continue;
        const auto& r = pts[hull[i + 1]];
        if (r.first == p.first) continue;
        T sigma = (r.second - p.second) / (r.first - p.first);
        T opt = sigma / T(2);
        if (opt < p.first || opt > r.first) continue;
        consider(p.second + sigma * (opt - p.first) - opt * opt);
    }
    return best;
}

// -------- Monte-Carlo machinery (double precision) --------

struct SimEstimate {
    double mean = 0;
    double std_error = 0;
    long long samples = 0;
    unsigned long long seed = 0;
    double exceed_frequency = 0;  // fraction of |X1-X2| >= threshold, pair mode
};

namespace detail {

// Model flattened to cumulative double distributions for fast sampling.
struct SimModel {
    struct Arm {
        std::vector<double> cum;
        std::vector<int> target;
        double reward;
    };
    std::vector<std::vector<Arm>> arms;   // [s][a]
    std::vector<std::vector<double>> pol_cum1, pol_cum2;
    std::vector<char> terminal;
    std::vector<double> weight;
    int initial;
    bool reward_mode;

    SimModel(const Mdp& m, const Scheduler<double>& s1, const Scheduler<double>& s2) {
        int n = m.num_states();
        arms.resize(n);
        pol_cum1.resize(n);
        pol_cum2.resize(n);
        terminal.resize(n);
        weight.assign(n, 0.0);
        initial = m.initial;
        reward_mode = m.mode == PayoffMode::Reward;
        for (int s = 0; s < n; ++s) {
            terminal[s] = m.is_terminal(s);
            if (m.states[s].weight) weight[s] = to_double(*m.states[s].weight);
            double acc1 = 0, acc2 = 0;
            for (int a = 0; a < m.num_actions(s); ++a) {
                acc1 += s1.choice[s][a];
                acc2 += s2.choice[s][a];
                pol_cum1[s].push_back(acc1);
                pol_cum2[s].push_back(acc2);
                Arm arm;
                arm.reward = static_cast<double>(m.states[s].actions[a].reward);
                double p = 0;
                for (const auto& tr : m.states[s].actions[a].dist) {
                    p += to_double(tr.prob);
                    arm.cum.push_back(p);
                    arm.target.push_back(tr.target);
                }
                arms[s].push_back(std::move(arm));
            }
        }
    }

    static int pick(const std::vector<double>& cum, double u) {
        for (size_t i = 0; i + 1 < cum.size(); ++i)
            if (u < cum[i]) return static_cast<int>(i);
        return static_cast<int>(cum.size()) - 1;
    }

    double run(CounterRng& rng, bool second) const {
        const auto& pol = second ? pol_cum2 : pol_cum1;
        int s = initial;
        double payoff = 0;
        for (long long step = 0; step < 10'000'000; ++step) {
            if (terminal[s]) return payoff + (reward_mode ? 0.0 : weight[s]);
            int a = pick(pol[s], rng.next_double());
            const Arm& arm = arms[s][a];
            if (reward_mode) payoff += arm.reward;
            s = arm.target[pick(arm.cum, rng.next_double())];
        }
        throw std::runtime_error("simulation trajectory exceeded step budget "
                                 "(end component not collapsed?)");
    }
};

struct ShardSums {
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    long long exceed = 0;
};

inline int sim_workers() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("DEMVAR_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0 && v < static_cast<long>(hw)) hw = static_cast<unsigned>(v);
    }
    return static_cast<int>(hw);
}

// Fixed-size shards with per-shard RNG streams keep results identical for
// any worker count; reduction is sequential over shard index.
template <class PerSample>
std::vector<ShardSums> run_shards(long long n, unsigned long long seed,
                                  PerSample&& sample) {
    const long long shard_size = 4096;
    long long num_shards = (n + shard_size - 1) / shard_size;
    std::vector<ShardSums> sums(num_shards);
    std::atomic<long long> next{0};
    auto worker = [&]() {
        while (true) {
            long long k = next.fetch_add(1);
            if (k >= num_shards) return;
            CounterRng rng(seed, static_cast<uint64_t>(k));
            long long lo = k * shard_size, hi = std::min(n, lo + shard_size);
            ShardSums& acc = sums[k];
            for (long long i = lo; i < hi; ++i) sample(rng, acc);
        }
    };
    int w = std::min<long long>(sim_workers(), num_shards);
    std::vector<std::thread> pool;
    for (int i = 1; i < w; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return sums;
}

}  // namespace detail

// Estimates 1/2 E((X1 - X2)^2) for independent runs under the two
// schedulers; threshold (if positive) also counts |X1 - X2| exceedances.
inline SimEstimate simulate_pair(const Mdp& m, const Scheduler<double>& s1,
                                 const Scheduler<double>& s2, long long n,
                                 unsigned long long seed, double threshold = 0) {
    if (n < 1) throw std::invalid_argument("need at least one sample");
    detail::SimModel sim(m, s1, s2);
    auto sums = detail::run_shards(n, seed, [&](CounterRng& rng, detail::ShardSums& acc) {
        double x1 = sim.run(rng, false);
        double x2 = sim.run(rng, true);
        double d = x1 - x2;
        double y = 0.5 * d * d;
        acc.s1 += y;
        acc.s2 += y * y;
        if (threshold > 0 && std::abs(d) >= threshold) ++acc.exceed;
    });
    double s1sum = 0, s2sum = 0;
    long long exceed = 0;
    for (const auto& a : sums) {
        s1sum += a.s1;
        s2sum += a.s2;
        exceed += a.exceed;
    }
    SimEstimate out;
    out.samples = n;
    out.seed = seed;
    out.mean = s1sum / n;
    double var = std::max(0.0, s2sum / n - out.mean * out.mean);
    out.std_error = std::sqrt(var / n);
    out.exceed_frequency = static_cast<double>(exceed) / n;
    return out;
}

// Payoff variance under the p-mixture scheduler: each trajectory flips one
// p-coin, then follows the chosen scheduler throughout.
inline SimEstimate simulate_mixture(const Mdp& m, const Scheduler<double>& s1,
                                    const Scheduler<double>& s2, double p, long long n,
                                    unsigned long long seed) {
    if (n < 1) throw std::invalid_argument("need at least one sample");
    detail::SimModel sim(m, s1, s2);
    auto sums = detail::run_shards(n, seed, [&](CounterRng& rng, detail::ShardSums& acc) {
        bool first = rng.next_double() < p;
        double x = sim.run(rng, !first);
        double x2 = x * x;
        acc.s1 += x;
        acc.s2 += x2;
        acc.s3 += x2 * x;
        acc.s4 += x2 * x2;
    });
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (const auto& a : sums) {
        m1 += a.s1;
        m2 += a.s2;
        m3 += a.s3;
        m4 += a.s4;
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    SimEstimate out;
    out.samples = n;
    out.seed = seed;
    double var = std::max(0.0, m2 - m1 * m1);
    out.mean = var;
    // central fourth moment drives the variance of the variance estimator
    double mu4 = m4 - 4 * m3 * m1 + 6 * m2 * m1 * m1 - 3 * m1 * m1 * m1 * m1;
    out.std_error = std::sqrt(std::max(0.0, mu4 - var * var) / n);
    return out;
}

}  // namespace demvar
