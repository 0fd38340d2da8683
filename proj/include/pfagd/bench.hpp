#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfagd/baselines.hpp"
#include "pfagd/outer_pfagd.hpp"
#include "pfagd/problems.hpp"
#include "pfagd/run_record.hpp"
#include "pfagd/version.hpp"

namespace pfagd {

using json = nlohmann::ordered_json;

struct ExperimentConfig {
    std::string problem;
    std::map<std::string, double> params;  // includes "dim" when overridden
    std::vector<std::string> methods;      // pfagd, aug, cg, sd, gd
    double eps = 1e-4;
    long seed_begin = 0;
    long seed_end = 0;  // inclusive
    long budget = 100000;
    SolverMode mode = SolverMode::Practical;
    std::string out_dir;
    std::string format = "csv";
    int threads = 1;

    json to_json() const {
        json j;
        j["problem"] = problem;
        j["params"] = params;
        j["methods"] = methods;
        j["eps"] = eps;
        j["seed_begin"] = seed_begin;
        j["seed_end"] = seed_end;
        j["budget"] = budget;
        j["mode"] = mode == SolverMode::Practical ? "practical" : "theoretical";
        j["format"] = format;
        return j;
    }

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig c;
        c.problem = j.at("problem").get<std::string>();
        if (j.contains("params")) c.params = j.at("params").get<std::map<std::string, double>>();
        c.methods = j.at("methods").get<std::vector<std::string>>();
        c.eps = j.value("eps", 1e-4);
        c.seed_begin = j.value("seed_begin", 0L);
        c.seed_end = j.value("seed_end", 0L);
        c.budget = j.value("budget", 100000L);
        const std::string mode = j.value("mode", std::string("practical"));
        if (mode != "practical" && mode != "theoretical") throw ConfigError("mode must be practical|theoretical");
        c.mode = mode == "practical" ? SolverMode::Practical : SolverMode::Theoretical;
        c.format = j.value("format", std::string("csv"));
        c.threads = j.value("threads", 1);
        return c;
    }
};

inline std::vector<std::string> method_names() { return {"pfagd", "aug", "cg", "sd", "gd"}; }

namespace detail {

inline bool known_method(const std::string& m) {
    for (const auto& name : method_names())
        if (name == m) return true;
    return false;
}

// Defaults for the L1 initialization probe used by AGD-style methods.
constexpr int kL1Trials = 20;
constexpr double kL1Step = 1e-4;

}  // namespace detail

// Runs one (method, seed) cell. The seed fully determines the problem data,
// the initialization, and the L1 probe, so results are order-independent.
inline RunRecord run_single(const ExperimentConfig& cfg, const std::string& method, long seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const ProblemSpec problem = make_problem(cfg.problem, cfg.params, rng);
    const Vector x0 = problem.sample_init(rng);
    CountingOracle oracle(problem.objective);

    RunRecord rec;
    if (method == "pfagd" || method == "aug") {
        const double L1_init =
            estimate_initial_L1(oracle, x0, detail::kL1Trials, detail::kL1Step, rng);
        if (method == "pfagd") {
            RunRecorder recorder(rec, oracle);
            OuterConfig ocfg;
            ocfg.epsilon = cfg.eps;
            ocfg.max_oracle_calls = cfg.budget;
            ocfg.mode = cfg.mode;
            pf_agd(oracle, x0, L1_init, ocfg, &recorder);
        } else {
            rec = aug_practical_run(oracle, x0, L1_init, cfg.eps, cfg.budget);
        }
    } else if (method == "cg") {
        rec = cg_pr_run(oracle, x0, cfg.eps, cfg.budget);
    } else if (method == "sd") {
        rec = armijo_sd_run(oracle, x0, cfg.eps, cfg.budget);
    } else if (method == "gd") {
        if (!problem.known_L1) throw ConfigError("gd requires a problem with known L1");
        rec = gd_run(oracle, x0, *problem.known_L1, cfg.eps, cfg.budget);
    } else {
        throw ConfigError("unknown method: " + method);
    }
    rec.method = method;
    rec.seed = seed;
    return rec;
}

// All (method, seed) cells, optionally on a worker pool; results are sorted
// by (method, seed) so the output is independent of execution order.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.problem.empty()) throw ConfigError("no problem given");
    if (cfg.methods.empty()) throw ConfigError("no methods given");
    for (const auto& m : cfg.methods)
        if (!detail::known_method(m)) throw ConfigError("unknown method: " + m);
    if (cfg.seed_end < cfg.seed_begin) throw ConfigError("empty seed range");
    {
        // Validate the problem name and gd applicability before any run.
        Rng probe(0);
        const ProblemSpec p = make_problem(cfg.problem, cfg.params, probe);
        for (const auto& m : cfg.methods)
            if (m == "gd" && !p.known_L1) throw ConfigError("gd requires a problem with known L1");
    }

    const long n_seeds = cfg.seed_end - cfg.seed_begin + 1;
    const long n_cells = n_seeds * static_cast<long>(cfg.methods.size());
    std::vector<RunRecord> records(n_cells);
    const auto run_cell = [&](long idx) {
        const std::string& method = cfg.methods[static_cast<size_t>(idx / n_seeds)];
        const long seed = cfg.seed_begin + idx % n_seeds;
        records[static_cast<size_t>(idx)] = run_single(cfg, method, seed);
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || n_cells == 1) {
        for (long i = 0; i < n_cells; ++i) run_cell(i);
    } else {
        std::atomic<long> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mu;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const long i = next.fetch_add(1);
                    if (i >= n_cells) return;
                    try {
                        run_cell(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    return records;  // already in (method, seed) order by construction
}

struct CdfTable {
    std::string method;
    std::vector<long> thresholds;
    std::vector<double> fraction_converged;

    double final_fraction() const { return fraction_converged.empty() ? 0.0 : fraction_converged.back(); }
};

// Empirical CDF of total gradient calls over converged runs; runs that hit
// the budget only enlarge the denominator.
inline std::vector<CdfTable> aggregate_cdf(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ConfigError("aggregate_cdf: no records");
    std::map<std::string, std::pair<std::vector<long>, long>> per_method;  // converged calls, total runs
    for (const RunRecord& r : records) {
        auto& slot = per_method[r.method];
        ++slot.second;
        if (r.terminal == Terminal::Converged) slot.first.push_back(r.total_grad_calls);
    }
    std::vector<CdfTable> tables;
    for (auto& [method, slot] : per_method) {
        auto& calls = slot.first;
        std::sort(calls.begin(), calls.end());
        CdfTable t;
        t.method = method;
        long done = 0;
        for (size_t i = 0; i < calls.size(); ++i) {
            ++done;
            if (i + 1 < calls.size() && calls[i + 1] == calls[i]) continue;
            t.thresholds.push_back(calls[i]);
            t.fraction_converged.push_back(static_cast<double>(done) / static_cast<double>(slot.second));
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

namespace detail {

// Shortest round-trip decimal form; deterministic across runs.
inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit: cannot open " + path.string());
    out << content;
    if (!out) throw std::runtime_error("emit: write failed for " + path.string());
}

}  // namespace detail

// Writes runs/events/summary/cdf plus a metadata header. Identical inputs
// produce byte-identical files.
inline void emit(const std::vector<RunRecord>& records, const std::vector<CdfTable>& cdfs,
                 const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json meta;
    meta["library"] = "pfagd";
    meta["version"] = PFAGD_VERSION;
    meta["config"] = cfg.to_json();
    detail::write_file(dir / "metadata.json", meta.dump(2) + "\n");

    if (cfg.format == "csv") {
        std::string runs = "method,seed,grad_calls,f,grad_norm\n";
        std::string events = "method,seed,grad_calls,tag\n";
        std::string summary = "method,seed,total_grad_calls,terminal\n";
        std::string cdf = "method,threshold,fraction\n";
        for (const RunRecord& r : records) {
            for (const Sample& s : r.samples) {
                runs += r.method + "," + std::to_string(r.seed) + "," + std::to_string(s.grad_calls) + "," +
                        detail::fmt_double(s.f) + "," + detail::fmt_double(s.grad_norm) + "\n";
            }
            for (const Event& e : r.events) {
                events += r.method + "," + std::to_string(r.seed) + "," + std::to_string(e.grad_calls) +
                          "," + to_string(e.tag) + "\n";
            }
            summary += r.method + "," + std::to_string(r.seed) + "," + std::to_string(r.total_grad_calls) +
                       "," + to_string(r.terminal) + "\n";
        }
        for (const CdfTable& t : cdfs) {
            for (size_t i = 0; i < t.thresholds.size(); ++i) {
                cdf += t.method + "," + std::to_string(t.thresholds[i]) + "," +
                       detail::fmt_double(t.fraction_converged[i]) + "\n";
            }
        }
        detail::write_file(dir / "runs.csv", runs);
        detail::write_file(dir / "events.csv", events);
        detail::write_file(dir / "summary.csv", summary);
        detail::write_file(dir / "cdf.csv", cdf);
    } else if (cfg.format == "json") {
        json out;
        out["metadata"] = meta;
        out["runs"] = json::array();
        for (const RunRecord& r : records) {
            json jr;
            jr["method"] = r.method;
            jr["seed"] = r.seed;
            jr["terminal"] = to_string(r.terminal);
            jr["total_grad_calls"] = r.total_grad_calls;
            jr["samples"] = json::array();
            for (const Sample& s : r.samples) jr["samples"].push_back({s.grad_calls, s.f, s.grad_norm});
            jr["events"] = json::array();
            for (const Event& e : r.events) jr["events"].push_back({e.grad_calls, to_string(e.tag)});
            out["runs"].push_back(std::move(jr));
        }
        out["cdfs"] = json::array();
        for (const CdfTable& t : cdfs) {
            json jt;
            jt["method"] = t.method;
            jt["thresholds"] = t.thresholds;
            jt["fraction_converged"] = t.fraction_converged;
            out["cdfs"].push_back(std::move(jt));
        }
        detail::write_file(dir / "results.json", out.dump(2) + "\n");
    } else {
        throw ConfigError("emit: format must be csv or json");
    }
}

}  // namespace pfagd
