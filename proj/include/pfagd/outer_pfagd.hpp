#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pfagd/inner_agd.hpp"
#include "pfagd/oracle.hpp"
#include "pfagd/run_record.hpp"

namespace pfagd {

enum class OuterVariant { PfAgd, AgdUntilGuilty };

struct OuterConfig {
    double epsilon = 1e-4;   // target accuracy on ||grad f||
    double M0 = 1e-5;        // initial third-order smoothness estimate
    double gamma = 2.0;      // growth factor for M (and backtracking)
    double C1 = 0.01;        // practical scaling constant
    SolverMode mode = SolverMode::Practical;
    long max_oracle_calls = 100000;
    BacktrackConfig backtrack{};
    int certify_every_practical = 5;
    long inner_max_iters = 100000;
    long max_m_retries = 10000;
    long max_restarts = 10000;
    OuterVariant variant = OuterVariant::PfAgd;

    void validate() const {
        backtrack.validate();
        if (!(epsilon > 0.0)) throw std::invalid_argument("OuterConfig: epsilon must be positive");
        if (!(M0 > 0.0)) throw std::invalid_argument("OuterConfig: M0 must be positive");
        if (!(gamma > 1.0)) throw std::invalid_argument("OuterConfig: gamma must be > 1");
        if (!(C1 > 0.0)) throw std::invalid_argument("OuterConfig: C1 must be positive");
        if (max_oracle_calls < 1) throw std::invalid_argument("OuterConfig: max_oracle_calls must be >= 1");
    }
};

struct EpochParams {
    double alpha = 0.0;
    double tau = 0.0;
    double eta = 0.0;
    double M = 0.0;
    double inner_epsilon = 0.0;
};

// Epoch parameters from the current M estimate. Theoretical mode couples
// alpha to the target accuracy; practical mode couples it to the current
// gradient norm so the run is independent of the final epsilon.
inline EpochParams epoch_params(double M, double eps, double grad_norm, const OuterConfig& cfg) {
    if (!(M > 0.0) || !(eps > 0.0)) throw std::invalid_argument("epoch_params: M and eps must be positive");
    EpochParams p;
    p.M = M;
    if (cfg.mode == SolverMode::Theoretical) {
        p.alpha = 2.0 * std::cbrt(M) * std::pow(eps, 2.0 / 3.0);
        p.inner_epsilon = eps / 10.0;
    } else {
        if (!(grad_norm > 0.0))
            throw std::invalid_argument("epoch_params: grad_norm must be positive in practical mode");
        p.alpha = cfg.C1 * std::cbrt(M) * std::pow(grad_norm, 2.0 / 3.0);
        p.inner_epsilon = grad_norm / 2.0;
    }
    p.tau = std::sqrt(p.alpha / (32.0 * M));
    p.eta = std::sqrt(2.0 * p.alpha / M);
    return p;
}

struct BestPoint {
    Vector point;
    double f_value = 0.0;
};

// Find-Best-Iterate over {y_0..y_t, c_j, q_j, u} with first-index ties.
// The index j is recovered by exact vector equality of v against the stored
// x-history; when v is not an x-iterate (witness pairs involving w or y_j),
// falls back to the recorded scan index, or drops the c/q candidates.
template <Oracle O>
BestPoint find_best_iterate3(const O& oracle_f, const std::vector<Vector>& ys,
                             const std::vector<Vector>& xs, const WitnessPair& witness) {
    const long t = static_cast<long>(ys.size()) - 1;
    long j = -1;
    for (long i = 0; i < t; ++i) {
        if (detail::bitwise_equal(witness.v, xs[i])) {
            j = i;
            break;
        }
    }
    bool have_j = j >= 0;
    if (!have_j && witness.j >= 0 && witness.j < t) {
        if (detail::bitwise_equal(witness.u, ys[witness.j]) ||
            detail::bitwise_equal(witness.v, ys[witness.j])) {
            j = witness.j;
            have_j = true;
        }
    }

    std::vector<const Vector*> candidates;
    candidates.reserve(ys.size() + 3);
    for (const Vector& y : ys) candidates.push_back(&y);
    Vector c_j, q_j;
    if (have_j) {
        if (j > 0) {
            c_j = (ys[j] + ys[j - 1]) / 2.0;
            q_j = -2.0 * ys[j] + 3.0 * ys[j - 1];
        } else {
            c_j = ys[0];
            q_j = ys[0];
        }
        candidates.push_back(&c_j);
        candidates.push_back(&q_j);
    }
    candidates.push_back(&witness.u);
    if (!have_j) candidates.push_back(&witness.v);

    BestPoint best;
    best.f_value = std::numeric_limits<double>::infinity();
    for (const Vector* cand : candidates) {
        const double fv = oracle_f.f(*cand);
        if (fv < best.f_value) {
            best.f_value = fv;
            best.point = *cand;
        }
    }
    return best;
}

struct NcExploit {
    Vector v_minus, u_plus;
    BestPoint best;
};

// Steps along the witness direction: v_- = v - eta d and u_+ = u + eta' d
// with eta' = sqrt(eta (eta + ||u-v||)) - ||u-v||; returns the better point.
template <Oracle O>
NcExploit exploit_nc_pair3(const O& oracle_f, const Vector& u, const Vector& v, double eta) {
    const Vector diff = u - v;
    const double dist = diff.norm();
    if (!(dist > 0.0)) throw std::invalid_argument("exploit_nc_pair3: requires u != v");
    if (!(eta > 0.0)) throw std::invalid_argument("exploit_nc_pair3: eta must be positive");
    const Vector delta = diff / dist;
    const double eta_prime = std::sqrt(eta * (eta + dist)) - dist;
    NcExploit res;
    res.u_plus = u + eta_prime * delta;
    res.v_minus = v - eta * delta;
    const double f_vm = oracle_f.f(res.v_minus);
    const double f_up = oracle_f.f(res.u_plus);
    if (f_vm <= f_up) {
        res.best = {res.v_minus, f_vm};
    } else {
        res.best = {res.u_plus, f_up};
    }
    return res;
}

enum class EpochBranch { NullConvex, BestIterate, NCPair };

inline const char* to_string(EpochBranch b) {
    switch (b) {
        case EpochBranch::NullConvex: return "null";
        case EpochBranch::BestIterate: return "best_iterate";
        case EpochBranch::NCPair: return "nc_pair";
    }
    return "unknown";
}

struct EpochLog {
    long k = 0;
    EpochBranch branch = EpochBranch::NullConvex;
    double M = 0.0;
    double alpha = 0.0;
    long m_retries = 0;
    long inner_iterations = 0;  // summed over M retries
    long inner_restarts = 0;
    long inner_m = 0;           // last inner run
    double L1_final = 0.0;
    long grad_calls_before = 0;
    long grad_calls_after = 0;
    double f_prev = 0.0;
    double f_next = 0.0;
    double eq9_rhs = 0.0;        // last inner run's iteration-bound right side
    long last_inner_iterations = 0;
    double restart_invariant_max = 0.0;
    bool eq11_ok = true;
    bool nc_detected = false;
    bool nc_exploited = false;
};

struct OuterTrace {
    std::vector<Vector> iterates;   // p_0 .. p_K
    std::vector<double> M_history;  // M0, then the post-epoch estimate per k
    long nc_detections = 0;
    long nc_exploitations = 0;
    std::vector<EpochLog> epoch_logs;
    Terminal terminal = Terminal::Budget;
    long total_restarts = 0;

    const Vector& final_point() const { return iterates.back(); }
};

namespace detail {

struct AugParams {
    static EpochParams compute(double grad_norm, const OuterConfig& cfg) {
        // Semi-adaptive ablation: alpha = sigma = C1 ||grad||^{2/3}, no M in
        // the step geometry, inner target ||grad||/10.
        EpochParams p;
        p.M = 1.0;
        p.alpha = cfg.C1 * std::pow(grad_norm, 2.0 / 3.0);
        p.tau = std::sqrt(p.alpha / 32.0);
        p.eta = std::sqrt(2.0 * p.alpha);
        p.inner_epsilon = grad_norm / 10.0;
        return p;
    }
};

}  // namespace detail

// PF-AGD outer loop (and, with variant == AgdUntilGuilty, the semi-adaptive
// baseline that shares the machinery but never adapts M).
inline OuterTrace pf_agd(CountingOracle& oracle_f, const Vector& p0, double L1_init, const OuterConfig& cfg,
                         RunRecorder* rec = nullptr) {
    cfg.validate();
    const bool aug = cfg.variant == OuterVariant::AgdUntilGuilty;

    OuterTrace trace;
    Vector p = p0;
    double M = cfg.M0;
    double L1 = L1_init;

    double f_p = oracle_f.f(p);
    Vector g_p = oracle_f.grad(p);
    double gnorm = g_p.norm();
    trace.iterates.push_back(p);
    trace.M_history.push_back(M);
    if (rec) rec->sample(f_p, gnorm);

    const auto budget_left = [&]() { return oracle_f.grad_calls() < cfg.max_oracle_calls; };

    if (gnorm <= cfg.epsilon) {
        trace.terminal = Terminal::Converged;
        if (rec) rec->finish(trace.terminal);
        return trace;
    }

    for (long k = 1;; ++k) {
        if (!budget_left()) {
            trace.terminal = Terminal::Budget;
            break;
        }
        EpochLog log;
        log.k = k;
        log.grad_calls_before = oracle_f.grad_calls();
        log.f_prev = f_p;

        std::optional<Vector> p_next;
        double f_next = 0.0;
        EpochParams ep;
        long retries = 0;
        bool out_of_budget = false;

        while (true) {
            ep = aug ? detail::AugParams::compute(gnorm, cfg) : epoch_params(M, cfg.epsilon, gnorm, cfg);
            RegularizedOracle<CountingOracle> f_hat(oracle_f, p, ep.alpha);

            InnerConfig ic;
            ic.epsilon = ep.inner_epsilon;
            ic.sigma = ep.alpha;
            ic.L1_init = L1 > ep.alpha ? L1 : cfg.gamma * ep.alpha;
            ic.backtrack = cfg.backtrack;
            ic.certify_every = cfg.mode == SolverMode::Practical ? cfg.certify_every_practical : 1;
            ic.max_iters = cfg.inner_max_iters;
            ic.max_restarts = cfg.max_restarts;
            if (aug) {
                ic.line_search = InnerLineSearch::ArmijoDoubling;
                ic.armijo_c = 1.0;
                ic.enable_restarts = false;
                ic.convexity_check = true;
            }
            ic.should_stop = [&]() { return !budget_left(); };
            if (rec) {
                ic.on_event = [&](EventTag tag) { rec->event(tag); };
                ic.on_iterate = [&, alpha = ep.alpha](long, const Vector& y, double f_hat_y,
                                                      const Vector& g_hat_y) {
                    const double fy = f_hat_y - alpha * (y - p).squaredNorm();
                    const double gn = (g_hat_y - 2.0 * alpha * (y - p)).norm();
                    rec->sample(fy, gn);
                };
            }

            const long calls_before_inner = oracle_f.grad_calls();
            InnerResult ir = modified_agd(f_hat, p, ic);
            L1 = ir.L1_final;
            log.inner_iterations += ir.iterations;
            log.last_inner_iterations = ir.iterations;
            log.inner_restarts += ir.restarts;
            log.inner_m = ir.m;
            log.L1_final = ir.L1_final;
            log.eq9_rhs = ir.eq9_rhs;
            log.restart_invariant_max = std::max(log.restart_invariant_max, ir.restart_invariant_max);
            log.eq11_ok = log.eq11_ok && ir.eq11_ok;
            trace.total_restarts += ir.restarts;

            if (!aug) {
                // Gradient-call accounting per epoch: G <= 4T + 2 doublings + slack.
                const long delta = oracle_f.grad_calls() - calls_before_inner;
                if (delta > 4 * ir.iterations + 2 * ir.doublings + 16)
                    throw InvariantError("pf_agd: per-epoch gradient-call accounting exceeded");
            }

            if (ir.terminated_by == InnerTermination::Budget) {
                out_of_budget = true;
                break;
            }
            if (!ir.witness) {
                p_next = ir.final_y();
                f_next = oracle_f.f(*p_next);
                log.branch = EpochBranch::NullConvex;
                break;
            }

            ++trace.nc_detections;
            log.nc_detected = true;
            const WitnessPair& wp = *ir.witness;
            const BestPoint b1 = find_best_iterate3(oracle_f, ir.history.ys, ir.history.xs, wp);
            const NcExploit b2 = exploit_nc_pair3(oracle_f, wp.u, wp.v, ep.eta);
            if (rec && b2.best.f_value < b1.f_value) rec->event(EventTag::NcExploited);
            if (b2.best.f_value < b1.f_value) {
                ++trace.nc_exploitations;
                log.nc_exploited = true;
            }

            if (aug) {
                if (b1.f_value <= b2.best.f_value) {
                    p_next = b1.point;
                    f_next = b1.f_value;
                    log.branch = EpochBranch::BestIterate;
                } else {
                    p_next = b2.best.point;
                    f_next = b2.best.f_value;
                    log.branch = EpochBranch::NCPair;
                }
                break;
            }

            if (b1.f_value <= f_p - ep.alpha * ep.tau * ep.tau) {
                p_next = b1.point;
                f_next = b1.f_value;
                log.branch = EpochBranch::BestIterate;
                break;
            }

            const double f_u = oracle_f.f(wp.u);
            const double f_v = oracle_f.f(wp.v);
            const double eta_sq = ep.eta * ep.eta;
            const bool proxy_fails =
                b2.best.f_value > std::max(f_v - ep.alpha * eta_sq / 4.0, f_u - ep.alpha * eta_sq / 12.0) ||
                f_v > f_p + 14.0 * ep.alpha * ep.tau * ep.tau;
            if (proxy_fails) {
                M *= cfg.gamma;
                ++retries;
                if (rec) rec->event(EventTag::MIncrease);
                if (retries > cfg.max_m_retries) {
                    out_of_budget = true;
                    break;
                }
                continue;
            }
            if (b1.f_value <= b2.best.f_value) {
                p_next = b1.point;
                f_next = b1.f_value;
            } else {
                p_next = b2.best.point;
                f_next = b2.best.f_value;
            }
            log.branch = EpochBranch::NCPair;
            break;
        }

        log.m_retries = retries;
        log.M = M;
        log.alpha = ep.alpha;

        if (out_of_budget || !p_next) {
            trace.terminal = Terminal::Budget;
            trace.epoch_logs.push_back(log);
            break;
        }

        // Outer monotonicity holds by construction on every branch.
        if (f_next > f_p + 1e-12 * (1.0 + std::abs(f_p)))
            throw InvariantError("pf_agd: outer iterate increased the objective");
        // Sufficient-progress guarantee on the proxy-certified branch.
        if (!aug && cfg.mode == SolverMode::Theoretical && log.branch == EpochBranch::NCPair) {
            const double need =
                std::min(cfg.epsilon * cfg.epsilon / (5.0 * ep.alpha), ep.alpha * ep.alpha / (32.0 * ep.M));
            if (f_p - f_next < need - 1e-9)
                throw InvariantError("pf_agd: certified epoch fell short of the guaranteed decrease");
        }

        p = *p_next;
        f_p = f_next;
        g_p = oracle_f.grad(p);
        gnorm = g_p.norm();
        log.f_next = f_p;
        log.grad_calls_after = oracle_f.grad_calls();
        trace.iterates.push_back(p);
        trace.M_history.push_back(M);
        trace.epoch_logs.push_back(log);
        if (rec) rec->sample(f_p, gnorm);

        if (gnorm <= cfg.epsilon) {
            trace.terminal = Terminal::Converged;
            break;
        }
    }

    if (rec) rec->finish(trace.terminal);
    return trace;
}

}  // namespace pfagd
