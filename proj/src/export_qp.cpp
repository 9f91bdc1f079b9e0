#include "demvar/export_qp.hpp"

#include <sstream>

#include "demvar/lp.hpp"

namespace demvar {

namespace {

// x[s,a] -> x'[s,a]; the prime sits on the letter, not the bracket.
std::string primed(const std::string& name, bool prime) {
    if (!prime) return name;
    auto bracket = name.find('[');
    return name.substr(0, bracket) + "'" + name.substr(bracket);
}

void append_term(std::ostringstream& out, bool& first, const Rational& coef,
                 const std::string& var) {
    if (coef == 0) return;
    Rational c = coef;
    if (first) {
        if (c < 0) {
            out << "-";
            c = -c;
        }
    } else if (c < 0) {
        out << " - ";
        c = -c;
    } else {
        out << " + ";
    }
    out << rational_str(c) << "*" << var;
    first = false;
}

void emit_flow_rows(std::ostringstream& out, const Mdp& m, const FlowProgram<Rational>& f,
                    bool prime) {
    for (int s = 0; s < m.num_states(); ++s) {
        std::string base = m.is_terminal(s) ? "y" : "flow";
        out << primed(base + "[" + m.states[s].name + "]", prime) << ": ";
        bool first = true;
        for (int j = 0; j < f.num_vars; ++j)
            append_term(out, first, f.lp.A(s, j), primed(f.lp.var_names[j], prime));
        if (first) out << "0";
        out << " = " << rational_str(f.lp.b(s)) << "\n";
    }
}

void emit_moments(std::ostringstream& out, const Mdp& m, const FlowProgram<Rational>& f,
                  bool prime) {
    for (int power = 1; power <= 2; ++power) {
        out << "e" << power << (prime ? "'" : "") << " = ";
        bool first = true;
        for (int q = 0; q < m.num_states(); ++q) {
            if (f.y_index[q] < 0) continue;
            Rational w = *m.states[q].weight;
            append_term(out, first, power == 1 ? w : w * w,
                        primed(f.lp.var_names[f.y_index[q]], prime));
        }
        if (first) out << "0";
        out << "\n";
    }
}

}  // namespace

std::string export_qp(const Mdp& m, QpKind kind) {
    std::ostringstream out;
    if (m.num_states() == 1) {
        const std::string& s = m.states[0].name;
        const std::string& a = m.states[0].actions[0].name;
        out << "x[" << s << "," << a << "] = 1\n";
        out << "y[" << s << "] = x[" << s << "," << a << "]\n";
        return out.str();
    }
    auto f = build_flow<Rational>(m);
    emit_flow_rows(out, m, f, false);
    if (kind == QpKind::Max) {
        emit_moments(out, m, f, false);
        out << "max: e2 - e1*e1\n";
        return out.str();
    }
    emit_flow_rows(out, m, f, true);
    emit_moments(out, m, f, false);
    emit_moments(out, m, f, true);
    out << "max: ";
    bool first = true;
    for (int q = 0; q < m.num_states(); ++q) {
        if (f.y_index[q] < 0) continue;
        for (int r = 0; r < m.num_states(); ++r) {
            if (f.y_index[r] < 0) continue;
            Rational d = *m.states[q].weight - *m.states[r].weight;
            if (d == 0) continue;
            if (!first) out << " + ";
            out << "0.5*" << rational_str(d * d) << "*" << f.lp.var_names[f.y_index[q]]
                << "*" << primed(f.lp.var_names[f.y_index[r]], true);
            first = false;
        }
    }
    if (first) out << "0";
    out << "\n";
    return out.str();
}

}  // namespace demvar
