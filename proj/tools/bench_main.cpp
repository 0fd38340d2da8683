// bench: run seeded optimizer benchmarks, verify library invariants, and
// list the problem/method registries.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfagd/bench.hpp"
#include "pfagd/inner_agd.hpp"
#include "pfagd/linesearch.hpp"
#include "pfagd/oracle.hpp"

namespace {

using namespace pfagd;

int fail(const std::string& kind, const std::string& message) {
    json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << "\n";
    return 1;
}

bool parse_seed_range(const std::string& text, long& begin, long& end) {
    const auto pos = text.find("..");
    try {
        if (pos == std::string::npos) {
            begin = end = std::stol(text);
        } else {
            begin = std::stol(text.substr(0, pos));
            end = std::stol(text.substr(pos + 2));
        }
    } catch (const std::exception&) {
        return false;
    }
    return end >= begin;
}

bool parse_params(const std::vector<std::string>& kvs, std::map<std::string, double>& params,
                  std::string& bad) {
    for (const std::string& kv : kvs) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos) {
            bad = kv;
            return false;
        }
        try {
            params[kv.substr(0, pos)] = std::stod(kv.substr(pos + 1));
        } catch (const std::exception&) {
            bad = kv;
            return false;
        }
    }
    return true;
}

int cmd_run(const ExperimentConfig& cfg) {
    const auto records = run_experiment(cfg);
    const auto cdfs = aggregate_cdf(records);
    if (!cfg.out_dir.empty()) {
        emit(records, cdfs, cfg, cfg.out_dir);
        std::cout << "wrote " << records.size() << " runs to " << cfg.out_dir << "\n";
    }
    long converged = 0;
    for (const auto& r : records)
        if (r.terminal == Terminal::Converged) ++converged;
    std::cout << "runs: " << records.size() << "  converged: " << converged << "\n";
    return 0;
}

struct VerifyReport {
    int failures = 0;
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++failures;
    }
};

// Invariant and counterexample suite: fast self-checks of the library.
int cmd_verify() {
    VerifyReport rep;

    // Lyapunov slack counterexample on f(x) = x^2/2 + log cosh x.
    {
        Objective obj(1, [](const Vector& x) { return 0.5 * x[0] * x[0] + std::log(std::cosh(x[0])); },
                      [](const Vector& x) { return Vector::Constant(1, x[0] + std::tanh(x[0])); });
        Vector y0 = Vector::Constant(1, 2.0);
        Vector w = Vector::Constant(1, -1.0);
        const double g2 = obj.grad(y0)[0];
        const double v1_start = lyapunov(obj, y0, y0, w, 1.0, 1.0);
        BacktrackConfig bt;
        const StepResult sr = abls(obj, y0, Vector(-obj.grad(y0)), 1.0, bt);
        const double Q1 = sr.L1_est;
        const Vector y1 = sr.x_new;
        const double om = (std::sqrt(Q1) - 1.0) / (std::sqrt(Q1) + 1.0);
        const Vector x1 = y1 + om * (y1 - y0);
        const double V1 = lyapunov(obj, y1, x1, w, 1.0, 1.0);
        const double V2 = lyapunov(obj, y1, x1, w, 1.0, Q1);
        const double R = std::pow(Q1, 1.5);
        const bool no_slack_fails = !(V2 <= R * V1);
        const bool slack_holds = V2 <= R * V1 + R * obj.grad(w).squaredNorm();
        std::ostringstream d;
        d << "grad=" << g2 << " V1_0=" << v1_start << " L1=" << sr.L1_est << " V1=" << V1 << " V2=" << V2;
        rep.check("lyapunov slack counterexample", std::abs(g2 - 2.964) < 2e-3 &&
                                                       std::abs(v1_start - 6.891) < 2e-3 &&
                                                       std::abs(sr.L1_est - 1.802) < 2e-3 &&
                                                       no_slack_fails && slack_holds,
                  d.str());
    }

    // Analytic gradients vs central differences across the corpus.
    {
        bool ok = true;
        std::string where;
        for (const std::string& name : problem_names()) {
            Rng rng(0);
            std::map<std::string, double> params;
            if (name == "dixon_price") params["dim"] = 50;
            if (name == "quadratic") params["dim"] = 30;
            if (name == "biweight") { params["dim"] = 40; params["rows"] = 80; }
            const ProblemSpec p = make_problem(name, params, rng);
            for (int i = 0; i < 5 && ok; ++i) {
                Vector x = p.sample_init(rng) + 0.25 * normal_vector(rng, p.dim);
                if (!check_gradient(p.objective, x)) {
                    ok = false;
                    where = name;
                }
            }
            if (!ok) break;
        }
        rep.check("corpus gradients match central differences", ok, where);
    }

    // Regularized oracle identity.
    {
        Rng rng(1);
        const ProblemSpec p = make_problem("rosenbrock", {{"dim", 4}}, rng);
        const Vector c = normal_vector(rng, 4);
        RegularizedOracle<Objective> reg(p.objective, c, 0.7);
        bool ok = true;
        for (int i = 0; i < 20; ++i) {
            const Vector x = normal_vector(rng, 4);
            const Vector lhs = reg.grad(x);
            const Vector rhs = p.objective.grad(x) + 2.0 * 0.7 * (x - c);
            if ((lhs - rhs).norm() > 1e-12 * (1.0 + rhs.norm())) ok = false;
        }
        rep.check("regularized oracle gradient identity", ok);
    }

    // Adaptive shrink factor stays in [eps_min, rho].
    {
        Rng rng(2);
        BacktrackConfig bt;
        bool ok = true;
        for (int i = 0; i < 10000; ++i) {
            const double v = uniform_draw(rng, -50.0, 1.0);
            const double s = adaptive_shrink(v, bt);
            if (!(s >= bt.eps_min && s <= bt.rho + 1e-15)) ok = false;
        }
        rep.check("adaptive shrink factor range", ok);
    }

    // Restart invariance on an oscillatory landscape.
    {
        long restarts = 0;
        double worst = 0.0;
        for (long seed = 0; seed < 4; ++seed) {
            Rng rng(static_cast<std::uint64_t>(seed));
            const ProblemSpec p = make_problem("ackley", {{"dim", 10}}, rng);
            const Vector x0 = p.sample_init(rng);
            CountingOracle oracle(p.objective);
            const double L1 = estimate_initial_L1(oracle, x0, 20, 1e-4, rng);
            OuterConfig cfg;
            cfg.max_oracle_calls = 4000;
            const OuterTrace tr = pf_agd(oracle, x0, L1, cfg);
            restarts += tr.total_restarts;
            for (const EpochLog& e : tr.epoch_logs) worst = std::max(worst, e.restart_invariant_max);
        }
        std::ostringstream d;
        d << restarts << " restarts, max drift " << worst;
        rep.check("restart auxiliary-point invariance", worst <= 1e-10, d.str());
    }

    // Determinism of a small experiment.
    {
        ExperimentConfig cfg;
        cfg.problem = "rosenbrock";
        cfg.params["dim"] = 2;
        cfg.methods = {"pfagd", "cg"};
        cfg.seed_begin = 0;
        cfg.seed_end = 2;
        cfg.budget = 3000;
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        bool ok = a.size() == b.size();
        for (size_t i = 0; ok && i < a.size(); ++i) {
            ok = a[i].total_grad_calls == b[i].total_grad_calls && a[i].terminal == b[i].terminal &&
                 a[i].samples.size() == b[i].samples.size();
            for (size_t s = 0; ok && s < a[i].samples.size(); ++s)
                ok = a[i].samples[s].f == b[i].samples[s].f &&
                     a[i].samples[s].grad_calls == b[i].samples[s].grad_calls;
        }
        rep.check("run_experiment determinism", ok);
    }

    if (rep.failures > 0) return fail("verify_failed", std::to_string(rep.failures) + " checks failed");
    std::cout << "all checks passed\n";
    return 0;
}

int cmd_list() {
    std::cout << "problems:\n";
    for (const auto& name : problem_names()) std::cout << "  " << name << "\n";
    std::cout << "methods:\n";
    for (const auto& name : method_names()) std::cout << "  " << name << "\n";
    std::cout << "problem params: dim, and for quadratic: kappa, loguniform, pos, neg, zero, mu, lmin, "
                 "lmax; for biweight: rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pfagd benchmark harness"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a problem x methods x seeds experiment");
    std::string problem, methods_csv = "pfagd", seeds = "0", mode = "practical", out_dir, format = "csv";
    std::string config_path;
    long dim = -1, budget = 100000;
    double eps = 1e-4;
    int threads = 1;
    std::vector<std::string> param_kvs;
    run->add_option("--problem", problem, "problem name (see `bench list`)");
    run->add_option("--dim", dim, "problem dimension override");
    run->add_option("--param", param_kvs, "extra problem parameter k=v (repeatable)");
    run->add_option("--methods", methods_csv, "comma-separated methods");
    run->add_option("--eps", eps, "target gradient norm accuracy");
    run->add_option("--seeds", seeds, "seed range A..B (inclusive) or a single seed");
    run->add_option("--budget", budget, "max gradient-oracle calls per run");
    run->add_option("--mode", mode, "practical|theoretical");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--format", format, "csv|json");
    run->add_option("--threads", threads, "worker threads");
    run->add_option("--config", config_path, "JSON config file (overrides other options)");

    auto* verify = app.add_subcommand("verify", "run the invariant/counterexample suite");
    auto* list = app.add_subcommand("list", "list problem and method registries");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) return fail("config_error", "cannot open " + config_path);
                json j;
                in >> j;
                cfg = ExperimentConfig::from_json(j);
                if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
            } else {
                cfg.problem = problem;
                std::string bad;
                if (!parse_params(param_kvs, cfg.params, bad))
                    return fail("config_error", "bad --param " + bad);
                if (dim >= 0) cfg.params["dim"] = static_cast<double>(dim);
                std::stringstream ss(methods_csv);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!tok.empty()) cfg.methods.push_back(tok);
                cfg.eps = eps;
                if (!parse_seed_range(seeds, cfg.seed_begin, cfg.seed_end))
                    return fail("config_error", "bad --seeds " + seeds);
                cfg.budget = budget;
                if (mode != "practical" && mode != "theoretical")
                    return fail("config_error", "bad --mode " + mode);
                cfg.mode = mode == "practical" ? pfagd::SolverMode::Practical
                                               : pfagd::SolverMode::Theoretical;
                cfg.out_dir = out_dir;
                cfg.format = format;
                cfg.threads = threads;
            }
            return cmd_run(cfg);
        }
        if (verify->parsed()) return cmd_verify();
        if (list->parsed()) return cmd_list();
    } catch (const pfagd::ConfigError& e) {
        return fail("config_error", e.what());
    } catch (const std::exception& e) {
        return fail("runtime_error", e.what());
    }
    return 0;
}
