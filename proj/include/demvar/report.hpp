#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "demvar/model.hpp"

namespace demvar {

struct ChebyshevRow {
    double k;
    double bound;  // P(|X - E(X)| >= k * sqrt(demvar)) <= bound
};

// Everything the CLI reports for one analysis run. Scheduler entries map
// "state" -> {"action": probability}.
struct VarianceReport {
    std::string mode;  // "weighted" or "reward"
    std::optional<double> maxvar;
    std::optional<double> demvar;
    std::optional<double> nds;
    std::map<std::string, std::map<std::string, double>> scheduler_max;
    std::map<std::string, std::map<std::string, double>> scheduler_pair_first;
    std::map<std::string, std::map<std::string, double>> scheduler_pair_second;
    std::vector<ChebyshevRow> chebyshev;
    std::map<std::string, std::string> diagnostics;

    // Reward-mode extras (unfolding parameters).
    std::optional<double> bound_b;
    std::optional<double> bound_b_prime;
    std::optional<double> q_value;
    std::optional<double> delta;
    bool heuristic_bound = false;
};

// Canonical JSON: keys sorted, numbers via %.17g, no excess whitespace.
std::string emit_report(const VarianceReport& r);

std::string json_number(double v);
std::string json_quote(const std::string& s);

}  // namespace demvar
