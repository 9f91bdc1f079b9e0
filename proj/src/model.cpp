#include "demvar/model.hpp"

#include <stdexcept>

namespace demvar {

std::vector<Violation> validate(const Mdp& m, const AnalysisConfig& cfg) {
    std::vector<Violation> out;
    if (m.num_states() == 0) {
        out.push_back({"model has no states", -1, -1});
        return out;
    }
    if (m.initial < 0 || m.initial >= m.num_states())
        out.push_back({"initial state out of range", m.initial, -1});

    bool any_weight = false, any_reward = false;
    for (int s = 0; s < m.num_states(); ++s) {
        const State& st = m.states[s];
        if (st.actions.empty())
            out.push_back({"state '" + st.name + "' has no enabled action", s, -1});
        if (st.weight) any_weight = true;
        for (int a = 0; a < m.num_actions(s); ++a) {
            const Action& act = st.actions[a];
            if (act.reward != 0) any_reward = true;
            Rational sum = 0;
            for (const auto& tr : act.dist) {
                if (tr.target < 0 || tr.target >= m.num_states())
                    out.push_back({"transition target out of range", s, a});
                if (tr.prob <= 0)
                    out.push_back({"non-positive transition probability", s, a});
                sum += tr.prob;
            }
            bool ok = cfg.mode == ArithmeticMode::Rational
                          ? sum == 1
                          : std::abs(to_double(sum) - 1.0) <= cfg.tol_prob;
            if (!ok)
                out.push_back({"probability sum of (" + st.name + ", " + act.name +
                                   ") is " + rational_str(sum) + ", expected 1",
                               s, a});
        }
        if (st.weight && !m.is_absorbing(s))
            out.push_back({"weighted state '" + st.name + "' is not absorbing", s, -1});
    }
    if (any_weight && any_reward)
        out.push_back({"model mixes terminal weights and rewards", -1, -1});
    if (m.mode == PayoffMode::Weighted && any_reward)
        out.push_back({"weighted-reachability model carries rewards", -1, -1});
    if (m.mode == PayoffMode::Reward && any_weight)
        out.push_back({"reward model carries terminal weights", -1, -1});
    return out;
}

ProductMdp product(const Mdp& a, const Mdp& b, const AnalysisConfig& cfg) {
    long long n = static_cast<long long>(a.num_states()) * b.num_states();
    if (n > cfg.max_product_states)
        throw std::runtime_error("product size " + std::to_string(n) +
                                 " exceeds max_product_states");
    ProductMdp prod;
    prod.factor_b_size = b.num_states();
    Mdp& m = prod.mdp;
    m.mode = PayoffMode::Weighted;
    m.initial = prod.pair_index(a.initial, b.initial);
    m.states.resize(n);
    for (int u = 0; u < a.num_states(); ++u) {
        for (int v = 0; v < b.num_states(); ++v) {
            State& st = m.states[prod.pair_index(u, v)];
            st.name = "(" + a.states[u].name + "," + b.states[v].name + ")";
            if (a.is_terminal(u) && b.is_terminal(v)) st.weight = Rational(0);
            for (const auto& au : a.states[u].actions) {
                for (const auto& bv : b.states[v].actions) {
                    Action act;
                    act.name = "(" + au.name + "," + bv.name + ")";
                    for (const auto& t1 : au.dist)
                        for (const auto& t2 : bv.dist)
                            act.dist.push_back({prod.pair_index(t1.target, t2.target),
                                                t1.prob * t2.prob});
                    st.actions.push_back(std::move(act));
                }
            }
        }
    }
    return prod;
}

}  // namespace demvar
