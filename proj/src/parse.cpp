#include "demvar/parse.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace demvar {

namespace {

struct Token {
    std::string text;
    int column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '#')
            ++i;
        out.push_back({std::string(line.substr(start, i - start)),
                       static_cast<int>(start) + 1});
    }
    return out;
}

}  // namespace

Mdp parse_model(std::string_view text) {
    Mdp m;
    m.initial = -1;
    std::map<std::string, int> index;
    bool saw_header = false;
    bool saw_weight = false, saw_reward = false;
    std::string init_name;
    int init_line = 0;
    std::vector<bool> declared_absorbing;

    auto state_of = [&](const Token& tok, int line) {
        auto it = index.find(tok.text);
        if (it == index.end())
            throw ParseError(line, tok.column, "unknown state '" + tok.text + "'");
        return it->second;
    };

    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto tok = tokenize(raw);
        if (tok.empty()) continue;
        const std::string& kw = tok[0].text;
        if (!saw_header) {
            if (kw != "MDP")
                throw ParseError(lineno, tok[0].column, "expected 'MDP' header");
            if (tok.size() > 1)
                throw ParseError(lineno, tok[1].column, "trailing tokens after 'MDP'");
            saw_header = true;
            continue;
        }
        if (kw == "STATE") {
            if (tok.size() < 2)
                throw ParseError(lineno, tok[0].column, "STATE needs a name");
            const std::string& name = tok[1].text;
            if (index.count(name))
                throw ParseError(lineno, tok[1].column,
                                 "duplicate state '" + name + "'");
            index[name] = m.num_states();
            State st;
            st.name = name;
            bool absorbing = false;
            size_t i = 2;
            while (i < tok.size()) {
                if (tok[i].text == "ABSORBING") {
                    absorbing = true;
                    ++i;
                } else if (tok[i].text == "WEIGHT") {
                    if (i + 1 >= tok.size())
                        throw ParseError(lineno, tok[i].column, "WEIGHT needs a value");
                    try {
                        st.weight = parse_rational(tok[i + 1].text);
                    } catch (const std::exception& e) {
                        throw ParseError(lineno, tok[i + 1].column, e.what());
                    }
                    saw_weight = true;
                    i += 2;
                } else {
                    throw ParseError(lineno, tok[i].column,
                                     "unexpected token '" + tok[i].text + "'");
                }
            }
            if (st.weight && !absorbing)
                throw ParseError(lineno, tok[1].column,
                                 "WEIGHT requires ABSORBING on '" + name + "'");
            m.states.push_back(std::move(st));
            declared_absorbing.push_back(absorbing);
        } else if (kw == "INIT") {
            if (tok.size() != 2)
                throw ParseError(lineno, tok[0].column, "INIT needs exactly one state");
            if (!init_name.empty())
                throw ParseError(lineno, tok[1].column, "duplicate INIT");
            init_name = tok[1].text;
            init_line = lineno;
        } else if (kw == "TRANS") {
            if (tok.size() < 3)
                throw ParseError(lineno, tok[0].column,
                                 "TRANS needs a state and an action");
            int s = state_of(tok[1], lineno);
            Action act;
            act.name = tok[2].text;
            size_t i = 3;
            if (i < tok.size() && tok[i].text == "REWARD") {
                if (i + 1 >= tok.size())
                    throw ParseError(lineno, tok[i].column, "REWARD needs a value");
                const std::string& rv = tok[i + 1].text;
                bool digits = !rv.empty() &&
                              std::all_of(rv.begin(), rv.end(), [](unsigned char c) {
                                  return std::isdigit(c);
                              });
                if (!digits)
                    throw ParseError(lineno, tok[i + 1].column,
                                     "bad reward '" + rv + "'");
                try {
                    act.reward = std::stoull(rv);
                } catch (const std::exception&) {
                    throw ParseError(lineno, tok[i + 1].column, "bad reward '" + rv + "'");
                }
                saw_reward = saw_reward || act.reward != 0;
                i += 2;
            }
            if (i >= tok.size() || tok[i].text != "->")
                throw ParseError(lineno, i < tok.size() ? tok[i].column
                                                        : static_cast<int>(raw.size()) + 1,
                                 "expected '->'");
            ++i;
            if (i >= tok.size())
                throw ParseError(lineno, static_cast<int>(raw.size()) + 1,
                                 "TRANS needs at least one successor");
            for (; i < tok.size(); ++i) {
                auto colon = tok[i].text.rfind(':');
                if (colon == std::string::npos)
                    throw ParseError(lineno, tok[i].column,
                                     "expected '<state>:<prob>', got '" + tok[i].text + "'");
                Token st_tok{tok[i].text.substr(0, colon), tok[i].column};
                int t = state_of(st_tok, lineno);
                Rational p;
                try {
                    p = parse_rational(tok[i].text.substr(colon + 1));
                } catch (const std::exception& e) {
                    throw ParseError(lineno, tok[i].column + static_cast<int>(colon) + 1,
                                     e.what());
                }
                act.dist.push_back({t, p});
            }
            if (m.action_index(s, act.name) >= 0)
                throw ParseError(lineno, tok[2].column,
                                 "duplicate action '" + act.name + "' on state '" +
                                     tok[1].text + "'");
            m.states[s].actions.push_back(std::move(act));
        } else {
            throw ParseError(lineno, tok[0].column, "unknown directive '" + kw + "'");
        }
    }
    if (!saw_header) throw ParseError(1, 1, "expected 'MDP' header");
    if (init_name.empty()) throw ParseError(lineno + 1, 1, "missing INIT");
    auto it = index.find(init_name);
    if (it == index.end())
        throw ParseError(init_line, 1, "unknown initial state '" + init_name + "'");
    m.initial = it->second;
    if (saw_weight && saw_reward)
        throw ParseError(lineno, 1, "model mixes WEIGHT and REWARD payoffs");
    m.mode = saw_reward ? PayoffMode::Reward : PayoffMode::Weighted;

    // Implicit self-loop for transition-free ABSORBING states.
    for (int s = 0; s < m.num_states(); ++s) {
        if (declared_absorbing[s] && m.states[s].actions.empty()) {
            Action loop;
            loop.name = "loop";
            loop.dist.push_back({s, Rational(1)});
            m.states[s].actions.push_back(std::move(loop));
        }
    }
    return m;
}

std::string print_model(const Mdp& m) {
    std::ostringstream out;
    out << "MDP\n";
    for (const auto& st : m.states) {
        out << "STATE " << st.name;
        bool absorbing = m.is_absorbing(m.state_index(st.name));
        if (absorbing) out << " ABSORBING";
        if (st.weight) out << " WEIGHT " << rational_str(*st.weight);
        out << "\n";
    }
    out << "INIT " << m.states[m.initial].name << "\n";
    for (int s = 0; s < m.num_states(); ++s) {
        const State& st = m.states[s];
        bool implicit_loop = m.is_absorbing(s) && st.actions.size() == 1 &&
                             st.actions[0].name == "loop" &&
                             st.actions[0].reward == 0;
        if (implicit_loop) continue;
        for (const auto& act : st.actions) {
            out << "TRANS " << st.name << " " << act.name;
            if (m.mode == PayoffMode::Reward) out << " REWARD " << act.reward;
            out << " ->";
            for (const auto& tr : act.dist)
                out << " " << m.states[tr.target].name << ":" << rational_str(tr.prob);
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace demvar
