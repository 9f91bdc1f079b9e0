#include "doctest.h"

#include "demvar/model.hpp"

#include "helpers.hpp"

using namespace demvar;

TEST_CASE("validate accepts the shipped models") {
    for (const char* name : {"fig1_m.mdp", "fig1_n.mdp", "fig2a.mdp", "fig2b.mdp",
                             "fig2c.mdp", "fig2d.mdp", "tm1.mdp", "acc_fig1n_rew.mdp"}) {
        auto m = load_corpus(name);
        CHECK_MESSAGE(validate(m).empty(), name);
    }
}

TEST_CASE("validate flags broken probability sums") {
    auto m = load_corpus("fig1_n.mdp");
    m.states[1].actions[0].dist[0].prob = Rational(1, 2);
    auto v = validate(m);
    REQUIRE(!v.empty());
    CHECK(v[0].state == 1);

    AnalysisConfig exact;
    exact.mode = ArithmeticMode::Rational;
    CHECK(!validate(m, exact).empty());
}

TEST_CASE("validate flags structural problems") {
    Mdp m;
    CHECK(!validate(m).empty());  // no states

    m = load_corpus("fig1_m.mdp");
    m.states[0].weight = Rational(1);  // weighted but not absorbing
    CHECK(!validate(m).empty());

    m = load_corpus("fig1_m.mdp");
    m.states[0].actions[0].reward = 2;  // weights and rewards mixed
    CHECK(!validate(m).empty());

    m = load_corpus("fig1_m.mdp");
    m.states[2].actions.clear();  // no enabled action
    CHECK(!validate(m).empty());
}

TEST_CASE("terminal classification per payoff mode") {
    auto n = load_corpus("fig1_n.mdp");
    CHECK(n.terminals() == std::vector<int>{4, 5, 6, 7});
    auto t = load_corpus("tm1.mdp");
    CHECK(t.mode == PayoffMode::Reward);
    CHECK(t.terminals() == std::vector<int>{2});
    CHECK(t.max_reward() == 3);
    CHECK(t.min_positive_prob() == Rational(1, 2));
}

TEST_CASE("schedulers: deterministic, uniform, argmax") {
    auto m = load_corpus("fig1_n.mdp");
    auto s = dirac<double>(m, {{"init", "gamma"}});
    CHECK(s.is_deterministic());
    CHECK(s.argmax()[0] == 2);
    auto u = Scheduler<double>::uniform(m);
    CHECK(!u.is_deterministic());
    CHECK(u.choice[0][1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("product squares the state space and multiplies probabilities") {
    auto m = load_corpus("fig1_n.mdp");
    auto prod = product(m, m);
    CHECK(prod.mdp.num_states() == 64);
    CHECK(prod.mdp.initial == prod.pair_index(m.initial, m.initial));
    CHECK(validate(prod.mdp).empty());
    // (c1,c3) under (tau,tau): four targets with probabilities 1/4*{3/4,1/4} etc.
    int p = prod.pair_index(1, 3);
    const auto& act = prod.mdp.states[p].actions[0];
    Rational sum = 0;
    for (const auto& tr : act.dist) sum += tr.prob;
    CHECK(sum == Rational(1));
    CHECK(act.dist.size() == 4);
    // terminal pairs are terminal in the product
    CHECK(prod.mdp.is_terminal(prod.pair_index(4, 7)));

    AnalysisConfig tight;
    tight.max_product_states = 10;
    CHECK_THROWS(product(m, m, tight));
}

TEST_CASE("product scheduler multiplies factor choices") {
    auto m = load_corpus("fig1_n.mdp");
    auto prod = product(m, m);
    auto sa = dirac<double>(m, {{"init", "alpha"}});
    auto sb = dirac<double>(m, {{"init", "gamma"}});
    auto sp = product_scheduler(sa, sb, m, m, prod);
    int p = prod.pair_index(0, 0);
    // alpha has index 0, gamma index 2; product action order is row-major
    CHECK(sp.choice[p][0 * 3 + 2] == 1.0);
}
