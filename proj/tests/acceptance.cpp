// Acceptance gate: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Run via ctest or directly; needs the corpus directory
// compiled in (CORPUS_DIR).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <vector>

#define REQUIRE(x) \
    do { \
        if (!(x)) throw std::runtime_error("requirement failed: " #x); \
    } while (0)

#include "demvar/accrew.hpp"
#include "demvar/oracle.hpp"
#include "demvar/preprocess.hpp"
#include "demvar/wreach.hpp"
#include "helpers.hpp"

using namespace demvar;

namespace {

int failures = 0;

void criterion(int n, const char* what, const std::function<void()>& body) {
    try {
        body();
        std::printf("criterion %d: PASS  %s\n", n, what);
    } catch (const std::exception& e) {
        std::printf("criterion %d: FAIL  %s  (%s)\n", n, what, e.what());
        ++failures;
    }
    std::fflush(stdout);
}

void expect(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

void expect_near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol,
           what + ": got " + std::to_string(got) + ", want " + std::to_string(want));
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// values gathered along the way, reused by the sandwich criterion
std::vector<std::pair<double, double>> var_pairs;  // (maxvar, demvar)

// deterministic-transition variant of the random generator: every action
// moves to exactly one deeper state, so all probabilities are 0 or 1
Mdp random_transition_system(CounterRng& rng) {
    Mdp m = random_layered_model(rng);
    for (auto& st : m.states)
        for (auto& act : st.actions) {
            if (act.dist.size() <= 1) continue;
            auto keep = act.dist[rng.next_below(act.dist.size())];
            keep.prob = 1;
            act.dist = {keep};
        }
    return m;
}

}  // namespace

int main() {
    AnalysisConfig cfg;

    criterion(1, "branch-model golden values, exact and double, under 1 s", [&] {
        auto t0 = std::chrono::steady_clock::now();
        Mdp m1 = load_corpus("fig1_m.mdp");
        Mdp n1 = load_corpus("fig1_n.mdp");
        expect(max_variance<Rational>(m1, cfg).value == Rational(4), "maxvar(M) exact");
        expect(max_variance<Rational>(n1, cfg).value == Rational(4), "maxvar(N) exact");
        expect(demonic_variance<Rational>(m1, cfg).value == Rational(4),
               "demvar(M) exact");
        auto dn = demonic_variance<Rational>(n1, cfg).value;
        expect(dn == Rational(5), "demvar(N) exact");
        expect_near(to_double(max_variance<double>(m1, cfg).value), 4, 1e-6,
                    "maxvar(M) double");
        expect_near(max_variance<double>(n1, cfg).value, 4, 1e-6, "maxvar(N) double");
        expect_near(demonic_variance<double>(m1, cfg).value, 4, 1e-6,
                    "demvar(M) double");
        expect_near(demonic_variance<double>(n1, cfg).value, 5, 1e-6,
                    "demvar(N) double");
        expect_near(nds_value(4, to_double(dn)), 0.25, 1e-12, "NDS(N)");
        var_pairs.push_back({4, 4});
        var_pairs.push_back({4, 5});
        expect(elapsed_s(t0) < 1.0, "runtime under one second");
    });

    criterion(2, "coin-ladder NDS values and hull-confirmed maxvar", [&] {
        const char* files[] = {"fig2a.mdp", "fig2b.mdp", "fig2c.mdp", "fig2d.mdp"};
        const Rational maxvars[] = {Rational(19, 18), Rational(73, 64),
                                    Rational(2601, 1764), Rational(9, 4)};
        const double nds[] = {0.0, 23.0 / 73, 2397.0 / 2601, 1.0};
        for (int i = 0; i < 4; ++i) {
            Mdp m = load_corpus(files[i]);
            auto mv = max_variance<Rational>(m, cfg).value;
            expect(mv == maxvars[i], std::string(files[i]) + " maxvar exact");
            expect(hull_maxvar<Rational>(m, cfg) == maxvars[i],
                   std::string(files[i]) + " hull oracle");
            auto dv = demonic_variance<Rational>(m, cfg).value;
            expect_near(nds_value(to_double(mv), to_double(dv)), nds[i], 1e-6,
                        std::string(files[i]) + " NDS");
            var_pairs.push_back({to_double(mv), to_double(dv)});
        }
    });

    criterion(3, "dual-route agreement on 200 random models, under 60 s", [&] {
        auto t0 = std::chrono::steady_clock::now();
        CounterRng rng(cfg.seed, 0xacce97);
        AnalysisConfig ascent_only = cfg;
        ascent_only.use_exact_oracle = false;  // keep the two routes independent
        for (int round = 0; round < 200; ++round) {
            Mdp m = random_layered_model(rng);
            REQUIRE(validate(m).empty());
            double mv = max_variance<double>(m, cfg).value;
            double hull = hull_maxvar<double>(m, cfg);
            expect_near(mv, hull, 1e-6, "maxvar routes, round " + std::to_string(round));
            double dv = demonic_variance<double>(m, ascent_only).value;
            double exact = exact_demvar<double>(m, cfg).value;
            expect_near(dv, exact, 1e-6, "demvar routes, round " + std::to_string(round));
            var_pairs.push_back({mv, dv});
        }
        expect(elapsed_s(t0) < 60.0, "runtime under a minute");
    });

    criterion(4, "sandwich maxvar <= demvar <= 2 maxvar on every model", [&] {
        Mdp tm = load_corpus("tm1.mdp");
        Mdp fr = load_corpus("acc_fig1n_rew.mdp");
        Mdp am = load_corpus("acc_memory.mdp");
        for (Mdp* m : {&tm, &fr, &am})
            var_pairs.push_back({to_double(acc_max_variance<double>(*m, cfg).value),
                                 to_double(acc_demonic_variance<double>(*m, cfg).value)});
        expect(var_pairs.size() >= 200 + 4 + 2 + 3, "all earlier models collected");
        for (size_t i = 0; i < var_pairs.size(); ++i) {
            auto [mv, dv] = var_pairs[i];
            expect(mv <= dv + 1e-7, "lower bound, entry " + std::to_string(i));
            expect(dv <= 2 * mv + 1e-7, "upper bound, entry " + std::to_string(i));
        }
    });

    criterion(5, "mixture and pair identities on 50 random scheduler pairs", [&] {
        CounterRng rng(cfg.seed, 0x1de9717);
        for (int round = 0; round < 50; ++round) {
            Mdp m = random_layered_model(rng);
            REQUIRE(validate(m).empty());
            std::vector<int> p1(m.num_states()), p2(m.num_states());
            for (int s = 0; s < m.num_states(); ++s) {
                p1[s] = static_cast<int>(rng.next_below(m.num_actions(s)));
                p2[s] = static_cast<int>(rng.next_below(m.num_actions(s)));
            }
            auto s1 = Scheduler<double>::deterministic(m, p1);
            auto s2 = Scheduler<double>::deterministic(m, p2);
            auto obj = TerminalObjective<double>::weighted(m);
            auto a = terminal_moments(m, s1, obj).at_initial(m);
            auto b = terminal_moments(m, s2, obj).at_initial(m);

            // half the expected squared difference, read off the product chain
            auto prod = product(m, m);
            TerminalObjective<double> sq;
            sq.w1.assign(prod.mdp.num_states(), 0.0);
            sq.w2.assign(prod.mdp.num_states(), 0.0);
            for (int p = 0; p < prod.mdp.num_states(); ++p) {
                if (!prod.mdp.is_terminal(p)) continue;
                auto [u, v] = prod.factors(p);
                double d = to_double(*m.states[u].weight) - to_double(*m.states[v].weight);
                sq.w1[p] = d * d;
            }
            auto sp = product_scheduler(s1, s2, m, m, prod);
            double half = 0.5 * terminal_moments(prod.mdp, sp, sq).at_initial(prod.mdp).e1;
            expect_near(half, pair_variance(a, b), 1e-9,
                        "pair identity, round " + std::to_string(round));

            double p = rng.next_double();
            double analytic = mix_variance(p, a, b);
            auto est = simulate_mixture(m, s1, s2, p, 200'000, cfg.seed + round);
            expect(std::abs(est.mean - analytic) <= 4 * est.std_error + 1e-12,
                   "mixture identity, round " + std::to_string(round));
        }
    });

    criterion(6, "empirical two-run deviations below the Chebyshev bound", [&] {
        const char* files[] = {"fig1_m.mdp", "fig1_n.mdp", "fig2a.mdp",
                               "fig2b.mdp", "fig2c.mdp", "fig2d.mdp"};
        const long long n = 100'000;
        CounterRng rng(cfg.seed, 0xc4eb);
        for (const char* f : files) {
            Mdp m = load_corpus(f);
            double dv = demonic_variance<double>(m, cfg).value;
            for (int pair = 0; pair < 20; ++pair) {
                std::vector<int> p1(m.num_states()), p2(m.num_states());
                for (int s = 0; s < m.num_states(); ++s) {
                    p1[s] = static_cast<int>(rng.next_below(m.num_actions(s)));
                    p2[s] = static_cast<int>(rng.next_below(m.num_actions(s)));
                }
                auto s1 = Scheduler<double>::deterministic(m, p1);
                auto s2 = Scheduler<double>::deterministic(m, p2);
                for (double k : {1.5, 2.0, 3.0}) {
                    auto est = simulate_pair(m, s1, s2, n, cfg.seed + pair,
                                             k * std::sqrt(dv));
                    double bound = chebyshev_bound(k);
                    double sigma = std::sqrt(bound * (1 - bound) / n);
                    expect(est.exceed_frequency <= bound + 4 * sigma,
                           std::string(f) + " k=" + std::to_string(k));
                }
            }
        }
        // the branch model's own demonic pair never deviates past 2 sigma
        Mdp n1 = load_corpus("fig1_n.mdp");
        auto dv = demonic_variance<double>(n1, cfg);
        auto est = simulate_pair(n1, dv.witness, dv.witness2, n, cfg.seed,
                                 2.0 * std::sqrt(dv.value));
        expect(est.exceed_frequency == 0.0, "branch model k=2 frequency");
        expect(est.exceed_frequency <= 0.5, "branch model k=2 bound");
    });

    criterion(7, "reward-counter reduction against unfolding enumeration", [&] {
        for (const char* f : {"tm1.mdp", "acc_memory.mdp"}) {
            Mdp m = load_corpus(f);
            auto mv = acc_max_variance<double>(m, cfg);
            auto dv = acc_demonic_variance<double>(m, cfg);
            expect(!mv.heuristic_bound, std::string(f) + " honest bound fits");
            auto ctx = context(m);
            auto u = unfold(m, ctx, cfg);
            auto obj = convert_objective<double>(u.obj);
            expect_near(mv.value, hull_maxvar<double>(u.mdp, cfg, &obj), 1e-6,
                        std::string(f) + " maxvar vs hull");
            expect_near(dv.value, exact_demvar<double>(u.mdp, cfg, &obj).value, 1e-6,
                        std::string(f) + " demvar vs pair enumeration");
        }

        // the memory model's witness must actually use the counter
        Mdp am = load_corpus("acc_memory.mdp");
        auto res = acc_max_variance<double>(am, cfg);
        int mj = am.state_index("m");
        int risky = am.action_index(mj, "risky");
        int safe = am.action_index(mj, "safe");
        auto lo = res.schedule.at(am, mj, 0);
        auto hi = res.schedule.at(am, mj, 12);
        expect(std::abs(lo[risky] - hi[risky]) > 0.5, "distinct choices per counter");

        double best = 0;  // best memoryless scheduler on a 1/64 grid
        for (int k = 0; k <= 64; ++k) {
            Scheduler<double> sig;
            sig.choice.resize(am.num_states());
            for (int s = 0; s < am.num_states(); ++s) {
                sig.choice[s].assign(am.num_actions(s), 0.0);
                if (s != mj) sig.choice[s][0] = 1.0;
            }
            sig.choice[mj][risky] = k / 64.0;
            sig.choice[mj][safe] = 1.0 - k / 64.0;
            best = std::max(best, acc_moments(am, sig).at_initial(am).variance());
        }
        expect(res.value > best + 1e-6, "strictly beats the memoryless grid");
    });

    criterion(8, "full-score structure on deterministic-transition systems", [&] {
        std::vector<Mdp> models;
        models.push_back(load_corpus("fig2d.mdp"));
        CounterRng rng(cfg.seed, 0x7d5);
        for (int i = 0; i < 10; ++i) models.push_back(random_transition_system(rng));
        for (size_t i = 0; i < models.size(); ++i) {
            const Mdp& m = models[i];
            REQUIRE(validate(m).empty());
            std::string tag = "model " + std::to_string(i);
            auto dv = demonic_variance<double>(m, cfg);
            expect(dv.witness.is_deterministic() && dv.witness2.is_deterministic(),
                   tag + ": deterministic pair");
            auto obj = TerminalObjective<double>::weighted(m);
            auto a = terminal_moments(m, dv.witness, obj).at_initial(m);
            auto b = terminal_moments(m, dv.witness2, obj).at_initial(m);
            expect(a.variance() <= 1e-9 && b.variance() <= 1e-9,
                   tag + ": degenerate sides");
            double emin = 0, emax = 0;
            bool have = false;
            enumerate_md(m, [&](const std::vector<int>& pick) {
                auto s = Scheduler<double>::deterministic(m, pick);
                double e = terminal_moments(m, s, obj).at_initial(m).e1;
                if (!have) emin = emax = e;
                emin = std::min(emin, e);
                emax = std::max(emax, e);
                have = true;
            });
            double lo = std::min(a.e1, b.e1), hi = std::max(a.e1, b.e1);
            expect_near(lo, emin, 1e-9, tag + ": minimal expectation");
            expect_near(hi, emax, 1e-9, tag + ": maximal expectation");
        }
    });

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
