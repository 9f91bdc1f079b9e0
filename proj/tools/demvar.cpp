#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "demvar/accrew.hpp"
#include "demvar/export_qp.hpp"
#include "demvar/oracle.hpp"
#include "demvar/parse.hpp"
#include "demvar/preprocess.hpp"
#include "demvar/report.hpp"
#include "demvar/wreach.hpp"

using namespace demvar;

namespace {

// exit codes: 0 ok, 1 model errors, 2 assumption violations, 3 budget refusals
constexpr int kOk = 0;
constexpr int kModelError = 1;
constexpr int kAssumption = 2;
constexpr int kBudget = 3;

struct Options {
    std::string path;
    bool rational = false;
    bool json = true;
    double tolerance = 1e-9;
    unsigned long long seed = 0;
    long long samples = 100'000;
    std::vector<double> ks;
    std::optional<long long> bound;
    long long max_unfold_states = 5'000'000;
    bool exact_oracle = true;
    std::string kind = "max";  // export-qp
    double mix = -1;           // simulate: mixture weight, <0 means pair mode
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("model", o.path, "model file")->required();
    cmd->add_flag("--rational", o.rational, "exact rational arithmetic");
    cmd->add_option("--tolerance", o.tolerance, "value comparison tolerance");
    cmd->add_option("--seed", o.seed, "root RNG seed");
    cmd->add_option("--samples", o.samples, "Monte-Carlo sample count");
    cmd->add_option("--k", o.ks, "deviation multiples for Chebyshev rows");
    cmd->add_option("--bound", o.bound, "reward-counter unfolding bound override");
    cmd->add_option("--max-unfold-states", o.max_unfold_states,
                    "unfolding state budget");
    cmd->add_flag("--exact-oracle,!--no-exact-oracle", o.exact_oracle,
                  "cross-check demonic results by enumeration when feasible");
    cmd->add_flag("--json,!--no-json", o.json, "JSON report on stdout");
}

AnalysisConfig config_of(const Options& o) {
    AnalysisConfig cfg;
    cfg.mode = o.rational ? ArithmeticMode::Rational : ArithmeticMode::Double;
    cfg.tol_value = o.tolerance;
    cfg.seed = o.seed;
    cfg.samples = o.samples;
    cfg.bound_override = o.bound;
    cfg.max_unfold_states = o.max_unfold_states;
    cfg.use_exact_oracle = o.exact_oracle;
    return cfg;
}

Mdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::invalid_argument("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

// Parse + validate; prints violations to stderr and throws invalid_argument.
Mdp load_checked(const Options& o, const AnalysisConfig& cfg) {
    Mdp m = load_model(o.path);
    auto violations = validate(m, cfg);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << o.path << ": " << v.message << '\n';
        throw std::invalid_argument("model validation failed");
    }
    return m;
}

template <class T>
std::map<std::string, std::map<std::string, double>> scheduler_map(
    const Mdp& m, const Scheduler<T>& s) {
    std::map<std::string, std::map<std::string, double>> out;
    for (int i = 0; i < m.num_states(); ++i) {
        if (m.is_terminal(i)) continue;
        for (int a = 0; a < m.num_actions(i); ++a)
            if (s.choice[i][a] != T(0))
                out[m.states[i].name][m.states[i].actions[a].name] =
                    to_double(s.choice[i][a]);
    }
    return out;
}

// Reward schedules are keyed "state@counter"; "state@*" marks the fallback
// used once the counter passes the unfolding bound.
template <class T>
std::map<std::string, std::map<std::string, double>> schedule_map(
    const Mdp& m, const RewardSchedule<T>& s) {
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& [key, row] : s.choice) {
        auto [st, w] = key;
        std::string name = m.states[st].name + "@" + std::to_string(w);
        for (int a = 0; a < m.num_actions(st); ++a)
            if (row[a] != T(0)) out[name][m.states[st].actions[a].name] = to_double(row[a]);
    }
    if (!s.u_pick.empty())
        for (int st = 0; st < m.num_states(); ++st) {
            if (m.is_terminal(st)) continue;
            out[m.states[st].name + "@*"][m.states[st].actions[s.u_pick[st]].name] = 1.0;
        }
    return out;
}

void finish(const Options& o, VarianceReport& r) {
    if (o.json) {
        std::cout << emit_report(r) << '\n';
    } else {
        if (r.maxvar) std::cout << "maxvar = " << json_number(*r.maxvar) << '\n';
        if (r.demvar) std::cout << "demvar = " << json_number(*r.demvar) << '\n';
        if (r.nds) std::cout << "nds = " << json_number(*r.nds) << '\n';
        for (const auto& row : r.chebyshev)
            std::cout << "P(|X1-X2| >= " << row.k << "*sqrt(demvar)) <= " << row.bound
                      << '\n';
    }
}

std::vector<double> chebyshev_ks(const Options& o) {
    return o.ks.empty() ? std::vector<double>{1.5, 2.0, 3.0} : o.ks;
}

// Shared analysis driver. what: bit 1 = maxvar, bit 2 = demvar.
template <class T>
void analyze(const Options& o, int what, bool want_nds, bool want_chebyshev,
             VarianceReport& r) {
    AnalysisConfig cfg = config_of(o);
    Mdp m = load_checked(o, cfg);

    if (m.mode == PayoffMode::Reward) {
        r.mode = "reward";
        if (!check_finite(m)) {
            std::cerr << "Assumption 1 violated: a reachable end component carries "
                         "positive reward, the maximal expected reward is infinite\n";
            std::exit(kAssumption);
        }
        auto [cm, map] = collapse(m);
        std::optional<AccResult<T>> mv, dv;
        if (what & 1) mv = acc_max_variance<T>(cm, cfg);
        if (what & 2) dv = acc_demonic_variance<T>(cm, cfg);
        const auto& ctx = (mv ? mv->ctx : dv->ctx);
        r.bound_b = to_double(ctx.B);
        r.bound_b_prime = to_double(ctx.Bprime);
        r.q_value = to_double(ctx.Q);
        r.delta = to_double(ctx.delta);
        if (mv) {
            r.maxvar = to_double(mv->value);
            r.scheduler_max = schedule_map(cm, mv->schedule);
            r.heuristic_bound = r.heuristic_bound || mv->heuristic_bound;
            for (const auto& [k, v] : mv->diagnostics) r.diagnostics["maxvar_" + k] = v;
            if (o.rational)
                r.diagnostics["maxvar_exact"] = rational_str(Rational(mv->value));
        }
        if (dv) {
            r.demvar = to_double(dv->value);
            r.scheduler_pair_first = schedule_map(cm, dv->schedule);
            r.scheduler_pair_second = schedule_map(cm, dv->schedule2);
            r.heuristic_bound = r.heuristic_bound || dv->heuristic_bound;
            for (const auto& [k, v] : dv->diagnostics) r.diagnostics["demvar_" + k] = v;
            if (o.rational)
                r.diagnostics["demvar_exact"] = rational_str(Rational(dv->value));
        }
    } else {
        r.mode = "weighted";
        auto [cm, map] = collapse(m);
        if (what & 1) {
            auto mv = max_variance<T>(cm, cfg);
            r.maxvar = to_double(mv.value);
            r.scheduler_max = scheduler_map(cm, mv.witness);
            for (const auto& [k, v] : mv.diagnostics) r.diagnostics["maxvar_" + k] = v;
            if (o.rational)
                r.diagnostics["maxvar_exact"] = rational_str(Rational(mv.value));
        }
        if (what & 2) {
            auto dv = demonic_variance<T>(cm, cfg);
            r.demvar = to_double(dv.value);
            r.scheduler_pair_first = scheduler_map(cm, dv.witness);
            r.scheduler_pair_second = scheduler_map(cm, dv.witness2);
            for (const auto& [k, v] : dv.diagnostics) r.diagnostics["demvar_" + k] = v;
            if (o.rational)
                r.diagnostics["demvar_exact"] = rational_str(Rational(dv.value));
        }
    }

    if (want_nds) r.nds = nds_value(*r.maxvar, *r.demvar, cfg.tol_value);
    if (want_chebyshev)
        for (double k : chebyshev_ks(o)) r.chebyshev.push_back({k, chebyshev_bound(k)});
}

void run_analysis(const Options& o, int what, bool want_nds, bool want_chebyshev) {
    VarianceReport r;
    if (o.rational)
        analyze<Rational>(o, what, want_nds, want_chebyshev, r);
    else
        analyze<double>(o, what, want_nds, want_chebyshev, r);
    finish(o, r);
}

void run_validate(const Options& o) {
    AnalysisConfig cfg = config_of(o);
    Mdp m = load_checked(o, cfg);
    VarianceReport r;
    r.mode = m.mode == PayoffMode::Reward ? "reward" : "weighted";
    r.diagnostics["states"] = std::to_string(m.num_states());
    r.diagnostics["terminals"] = std::to_string(m.terminals().size());
    if (o.json) std::cout << emit_report(r) << '\n';
}

void run_preprocess(const Options& o) {
    AnalysisConfig cfg = config_of(o);
    Mdp m = load_checked(o, cfg);
    if (m.mode == PayoffMode::Reward && !check_finite(m)) {
        std::cerr << "Assumption 1 violated: a reachable end component carries "
                     "positive reward, the maximal expected reward is infinite\n";
        std::exit(kAssumption);
    }
    auto [cm, map] = collapse(m);
    std::cout << print_model(cm);
}

void run_oracle(const Options& o) {
    AnalysisConfig cfg = config_of(o);
    Mdp parsed = load_checked(o, cfg);
    VarianceReport r;
    Mdp work;
    TerminalObjective<double> obj;
    if (parsed.mode == PayoffMode::Reward) {
        r.mode = "reward";
        if (!check_finite(parsed)) {
            std::cerr << "Assumption 1 violated\n";
            std::exit(kAssumption);
        }
        auto [cm, map] = collapse(parsed);
        auto ctx = context(cm);
        auto u = unfold(cm, ctx, cfg);
        work = u.mdp;
        obj = convert_objective<double>(u.obj);
        r.bound_b = to_double(ctx.B);
        r.bound_b_prime = to_double(ctx.Bprime);
        r.q_value = to_double(ctx.Q);
        r.delta = to_double(ctx.delta);
        r.heuristic_bound = u.heuristic;
        r.diagnostics["unfold_states"] = std::to_string(work.num_states());
    } else {
        r.mode = "weighted";
        auto [cm, map] = collapse(parsed);
        work = cm;
        obj = TerminalObjective<double>::weighted(work);
    }
    r.maxvar = hull_maxvar<double>(work, cfg, &obj);
    auto dv = exact_demvar<double>(work, cfg, &obj);
    r.demvar = dv.value;
    r.scheduler_pair_first =
        scheduler_map(work, Scheduler<double>::deterministic(work, dv.first));
    r.scheduler_pair_second =
        scheduler_map(work, Scheduler<double>::deterministic(work, dv.second));
    r.diagnostics["md_count"] = std::to_string(count_md(work));
    finish(o, r);
}

void run_simulate(const Options& o) {
    AnalysisConfig cfg = config_of(o);
    Mdp parsed = load_checked(o, cfg);
    VarianceReport r;
    Mdp work;
    Scheduler<double> s1, s2;
    double analytic;
    if (parsed.mode == PayoffMode::Reward) {
        r.mode = "reward";
        if (!check_finite(parsed)) {
            std::cerr << "Assumption 1 violated\n";
            std::exit(kAssumption);
        }
        // simulate on the unfolding so the witness pair is memoryless there
        auto [cm, map] = collapse(parsed);
        auto ctx = context(cm);
        auto u = unfold(cm, ctx, cfg);
        auto obj = convert_objective<double>(u.obj);
        auto dv = demonic_variance<double>(u.mdp, cfg, &obj);
        work = u.mdp;
        s1 = dv.witness;
        s2 = dv.witness2;
        analytic = dv.value;
    } else {
        r.mode = "weighted";
        auto [cm, map] = collapse(parsed);
        auto dv = demonic_variance<double>(cm, cfg);
        work = cm;
        s1 = dv.witness;
        s2 = dv.witness2;
        analytic = dv.value;
    }
    r.demvar = analytic;
    r.scheduler_pair_first = scheduler_map(work, s1);
    r.scheduler_pair_second = scheduler_map(work, s2);
    if (o.mix >= 0) {
        auto est = simulate_mixture(work, s1, s2, o.mix, cfg.samples, cfg.seed);
        r.diagnostics["mixture_weight"] = json_number(o.mix);
        r.diagnostics["estimate_mean"] = json_number(est.mean);
        r.diagnostics["estimate_std_error"] = json_number(est.std_error);
    } else {
        auto base = simulate_pair(work, s1, s2, cfg.samples, cfg.seed);
        r.diagnostics["estimate_mean"] = json_number(base.mean);
        r.diagnostics["estimate_std_error"] = json_number(base.std_error);
        for (double k : chebyshev_ks(o)) {
            auto est = simulate_pair(work, s1, s2, cfg.samples, cfg.seed,
                                     k * std::sqrt(std::max(0.0, analytic)));
            r.chebyshev.push_back({k, chebyshev_bound(k)});
            r.diagnostics["exceed_frequency_k=" + json_number(k)] =
                json_number(est.exceed_frequency);
        }
    }
    r.diagnostics["samples"] = std::to_string(cfg.samples);
    r.diagnostics["seed"] = std::to_string(cfg.seed);
    finish(o, r);
}

void run_export_qp(const Options& o) {
    AnalysisConfig cfg = config_of(o);
    Mdp parsed = load_checked(o, cfg);
    QpKind kind = o.kind == "demonic" ? QpKind::Demonic : QpKind::Max;
    if (parsed.mode == PayoffMode::Reward) {
        if (!check_finite(parsed)) {
            std::cerr << "Assumption 1 violated\n";
            std::exit(kAssumption);
        }
        auto [cm, map] = collapse(parsed);
        auto ctx = context(cm);
        auto u = unfold(cm, ctx, cfg);
        std::cout << export_qp(u.mdp, kind);
    } else {
        auto [cm, map] = collapse(parsed);
        std::cout << export_qp(cm, kind);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"variance analysis of MDP payoffs"};
    app.require_subcommand(1);
    Options o;

    auto* validate_cmd = app.add_subcommand("validate", "check a model file");
    auto* preprocess_cmd =
        app.add_subcommand("preprocess", "collapse end components, print the model");
    auto* maxvar_cmd = app.add_subcommand("maxvar", "maximal payoff variance");
    auto* demvar_cmd = app.add_subcommand("demvar", "demonic variance");
    auto* nds_cmd = app.add_subcommand("nds", "non-determinism score");
    auto* cheb_cmd = app.add_subcommand("chebyshev", "deviation bounds");
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Monte-Carlo check of the demonic pair");
    auto* oracle_cmd =
        app.add_subcommand("oracle", "brute-force enumeration ground truth");
    auto* export_cmd = app.add_subcommand("export-qp", "emit the quadratic program");
    for (auto* cmd : {validate_cmd, preprocess_cmd, maxvar_cmd, demvar_cmd, nds_cmd,
                      cheb_cmd, simulate_cmd, oracle_cmd, export_cmd})
        add_common(cmd, o);
    simulate_cmd->add_option("--mix", o.mix,
                             "simulate the p-mixture instead of the independent pair");
    export_cmd->add_option("--kind", o.kind, "max or demonic")
        ->check(CLI::IsMember({"max", "demonic"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) run_validate(o);
        else if (*preprocess_cmd) run_preprocess(o);
        else if (*maxvar_cmd) run_analysis(o, 1, false, false);
        else if (*demvar_cmd) run_analysis(o, 2, false, false);
        else if (*nds_cmd) run_analysis(o, 3, true, true);
        else if (*cheb_cmd) run_analysis(o, 2, false, true);
        else if (*simulate_cmd) run_simulate(o);
        else if (*oracle_cmd) run_oracle(o);
        else if (*export_cmd) run_export_qp(o);
        return kOk;
    } catch (const ParseError& e) {
        std::cerr << o.path << ": " << e.what() << '\n';
        return kModelError;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kModelError;
    } catch (const std::domain_error& e) {
        // undefined score (zero maximal variance) and kin
        std::cerr << "Assumption 1 violated: " << e.what() << '\n';
        return kAssumption;
    } catch (const std::exception& e) {
        // budget refusals: md_cap, unfolding and pivot limits
        std::cerr << e.what() << '\n';
        return kBudget;
    }
}
