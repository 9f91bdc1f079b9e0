#include "doctest.h"

#include "demvar/parse.hpp"

#include "helpers.hpp"

using namespace demvar;

TEST_CASE("corpus models parse with expected shape") {
    auto n = load_corpus("fig1_n.mdp");
    CHECK(n.num_states() == 8);
    CHECK(n.mode == PayoffMode::Weighted);
    CHECK(n.initial == n.state_index("init"));
    CHECK(n.num_actions(n.state_index("init")) == 3);
    CHECK(*n.states[n.state_index("t1")].weight == Rational(4));
    int c1 = n.state_index("c1");
    CHECK(n.states[c1].actions[0].dist[0].prob == Rational(1, 4));
}

TEST_CASE("absorbing states get an implicit self-loop") {
    auto m = parse_model("MDP\nSTATE a\nSTATE b ABSORBING WEIGHT 3/2\nINIT a\n"
                         "TRANS a go -> b:1\n");
    int b = m.state_index("b");
    REQUIRE(m.num_actions(b) == 1);
    CHECK(m.states[b].actions[0].name == "loop");
    CHECK(m.is_absorbing(b));
    CHECK(*m.states[b].weight == Rational(3, 2));
}

TEST_CASE("decimal and fraction probabilities agree") {
    auto m = parse_model("MDP\nSTATE a\nSTATE b ABSORBING WEIGHT 1\n"
                         "STATE c ABSORBING WEIGHT 0\nINIT a\n"
                         "TRANS a go -> b:0.25 c:3/4\n");
    CHECK(m.states[0].actions[0].dist[0].prob == Rational(1, 4));
    CHECK(m.states[0].actions[0].dist[1].prob == Rational(3, 4));
}

TEST_CASE("reward mode is inferred from REWARD clauses") {
    auto t = load_corpus("tm1.mdp");
    CHECK(t.mode == PayoffMode::Reward);
    int s0 = t.state_index("s0");
    CHECK(t.states[s0].actions[t.action_index(s0, "a")].reward == 2);
    CHECK(t.states[s0].actions[t.action_index(s0, "b")].reward == 0);
}

TEST_CASE("parse errors carry 1-based positions") {
    auto expect_error = [](const std::string& text, int line) {
        try {
            parse_model(text);
            FAIL_CHECK("no error for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.line == line);
            CHECK(e.column >= 1);
        }
    };
    expect_error("STATE a\n", 1);                                   // missing header
    expect_error("MDP\nSTATE a\nSTATE a\n", 3);                     // duplicate state
    expect_error("MDP\nSTATE a\nINIT a\nTRANS a x -> b:1\n", 4);    // unknown state
    expect_error("MDP\nSTATE a\nINIT a\nTRANS a x -> a\n", 4);      // missing prob
    expect_error("MDP\nSTATE a\nINIT a\nTRANS a x REWARD -1 -> a:1\n", 4);
    expect_error("MDP\nBOGUS\n", 2);                                // unknown directive
    CHECK_THROWS_AS(parse_model("MDP\nSTATE a ABSORBING\n"), ParseError);  // no INIT
    CHECK_THROWS_AS(
        parse_model("MDP\nSTATE a\nSTATE b ABSORBING WEIGHT 1\nINIT a\n"
                    "TRANS a x REWARD 2 -> b:1\n"),
        ParseError);  // mixes weights and rewards
}

TEST_CASE("comments and blank lines are ignored") {
    auto m = parse_model("# header comment\nMDP\n\nSTATE a ABSORBING # tail\nINIT a\n");
    CHECK(m.num_states() == 1);
}

TEST_CASE("print_model round-trips") {
    for (const char* name : {"fig1_m.mdp", "fig1_n.mdp", "fig2c.mdp", "tm1.mdp"}) {
        auto m = load_corpus(name);
        auto again = parse_model(print_model(m));
        REQUIRE(again.num_states() == m.num_states());
        CHECK(again.initial == m.initial);
        CHECK(again.mode == m.mode);
        for (int s = 0; s < m.num_states(); ++s) {
            CHECK(again.states[s].name == m.states[s].name);
            CHECK(again.states[s].weight == m.states[s].weight);
            REQUIRE(again.num_actions(s) == m.num_actions(s));
            for (int a = 0; a < m.num_actions(s); ++a) {
                CHECK(again.states[s].actions[a].reward == m.states[s].actions[a].reward);
                REQUIRE(again.states[s].actions[a].dist.size() ==
                        m.states[s].actions[a].dist.size());
                for (size_t k = 0; k < m.states[s].actions[a].dist.size(); ++k) {
                    CHECK(again.states[s].actions[a].dist[k].target ==
                          m.states[s].actions[a].dist[k].target);
                    CHECK(again.states[s].actions[a].dist[k].prob ==
                          m.states[s].actions[a].dist[k].prob);
                }
            }
        }
    }
}
