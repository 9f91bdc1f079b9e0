#include "demvar/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace demvar {

std::string json_number(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

namespace {

std::string emit_scheduler(const std::map<std::string, std::map<std::string, double>>& s) {
    std::ostringstream out;
    out << '{';
    bool first_s = true;
    for (const auto& [state, row] : s) {
        if (!first_s) out << ',';
        first_s = false;
        out << json_quote(state) << ":{";
        bool first_a = true;
        for (const auto& [action, p] : row) {
            if (!first_a) out << ',';
            first_a = false;
            out << json_quote(action) << ':' << json_number(p);
        }
        out << '}';
    }
    out << '}';
    return out.str();
}

}  // namespace

std::string emit_report(const VarianceReport& r) {
    // Keys emitted in sorted order by hand; keep this list alphabetized.
    std::ostringstream out;
    out << '{';
    if (r.bound_b) out << "\"bound_b\":" << json_number(*r.bound_b) << ',';
    if (r.bound_b_prime)
        out << "\"bound_b_prime\":" << json_number(*r.bound_b_prime) << ',';
    out << "\"chebyshev\":[";
    for (size_t i = 0; i < r.chebyshev.size(); ++i) {
        if (i) out << ',';
        out << "{\"bound\":" << json_number(r.chebyshev[i].bound)
            << ",\"k\":" << json_number(r.chebyshev[i].k) << '}';
    }
    out << "],";
    if (r.delta) out << "\"delta\":" << json_number(*r.delta) << ',';
    out << "\"demvar\":" << (r.demvar ? json_number(*r.demvar) : "null") << ',';
    out << "\"diagnostics\":{";
    bool first = true;
    for (const auto& [k, v] : r.diagnostics) {
        if (!first) out << ',';
        first = false;
        out << json_quote(k) << ':' << json_quote(v);
    }
    out << "},";
    if (r.bound_b)
        out << "\"heuristic_bound\":" << (r.heuristic_bound ? "true" : "false") << ',';
    out << "\"maxvar\":" << (r.maxvar ? json_number(*r.maxvar) : "null") << ',';
    out << "\"mode\":" << json_quote(r.mode) << ',';
    out << "\"nds\":" << (r.nds ? json_number(*r.nds) : "null") << ',';
    if (r.q_value) out << "\"q_value\":" << json_number(*r.q_value) << ',';
    out << "\"scheduler_max\":" << emit_scheduler(r.scheduler_max) << ',';
    out << "\"scheduler_pair\":[" << emit_scheduler(r.scheduler_pair_first) << ','
        << emit_scheduler(r.scheduler_pair_second) << ']';
    out << '}';
    return out.str();
}

}  // namespace demvar
