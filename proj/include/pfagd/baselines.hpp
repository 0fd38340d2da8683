#pragma once

#include <cmath>
#include <stdexcept>

#include "pfagd/linesearch.hpp"
#include "pfagd/oracle.hpp"
#include "pfagd/outer_pfagd.hpp"
#include "pfagd/run_record.hpp"

namespace pfagd {

// Fixed-step gradient descent with the true Lipschitz constant. Only usable
// on problems that expose L1.
inline RunRecord gd_run(CountingOracle& oracle, const Vector& x0, double L1_true, double eps, long budget) {
    if (!(L1_true > 0.0)) throw std::invalid_argument("gd_run: requires a problem with known L1 > 0");
    RunRecord rec;
    RunRecorder recorder(rec, oracle);
    Vector x = x0;
    Vector g = oracle.grad(x);
    recorder.sample(oracle.f(x), g.norm());
    while (g.norm() > eps) {
        if (oracle.grad_calls() >= budget) {
            recorder.finish(Terminal::Budget);
            return rec;
        }
        x -= g / L1_true;
        g = oracle.grad(x);
        recorder.sample(oracle.f(x), g.norm());
    }
    recorder.finish(Terminal::Converged);
    return rec;
}

// Armijo steepest descent with doubling; the accepted L1 estimate carries
// across iterations. c defaults to 1e-4.
inline RunRecord armijo_sd_run(CountingOracle& oracle, const Vector& x0, double eps, long budget,
                               double c_armijo = 1e-4, double L1_init = 1.0) {
    RunRecord rec;
    RunRecorder recorder(rec, oracle);
    Vector x = x0;
    double L1 = L1_init;
    Vector g = oracle.grad(x);
    double f_x = oracle.f(x);
    recorder.sample(f_x, g.norm());
    while (g.norm() > eps) {
        if (oracle.grad_calls() >= budget) {
            recorder.finish(Terminal::Budget);
            return rec;
        }
        const double gsq = g.squaredNorm();
        for (;;) {
            const Vector x_try = x - g / L1;
            const double f_try = oracle.f(x_try);
            if (f_try <= f_x - c_armijo / L1 * gsq) {
                x = x_try;
                f_x = f_try;
                break;
            }
            L1 *= 2.0;
        }
        g = oracle.grad(x);
        recorder.sample(f_x, g.norm());
    }
    recorder.finish(Terminal::Converged);
    return rec;
}

struct CGState {
    Vector x;
    Vector grad_prev;
    Vector delta_prev;
    double eta_prev = 1.0;
};

// Polak-Ribiere nonlinear CG with direction truncation and a doubling/halving
// line search (eta starts at twice the previous accepted step).
inline RunRecord cg_pr_run(CountingOracle& oracle, const Vector& x0, double eps, long budget,
                           double eta0 = 1.0, int max_halvings = 100) {
    RunRecord rec;
    RunRecorder recorder(rec, oracle);
    CGState st;
    st.x = x0;
    st.eta_prev = eta0;
    st.delta_prev = Vector::Zero(x0.size());
    Vector g = oracle.grad(st.x);
    double f_x = oracle.f(st.x);
    recorder.sample(f_x, g.norm());
    bool have_prev = false;
    while (g.norm() > eps) {
        if (oracle.grad_calls() >= budget) {
            recorder.finish(Terminal::Budget);
            return rec;
        }
        Vector delta;
        if (!have_prev) {
            delta = -g;
        } else {
            const double beta =
                std::max(g.dot(g - st.grad_prev) / st.grad_prev.squaredNorm(), 0.0);
            delta = -g + beta * st.delta_prev;
            if (delta.dot(g) >= 0.0) delta = -g;  // truncate the recursion
        }
        const double slope = delta.dot(g);
        double eta = 2.0 * st.eta_prev;
        double f_try = 0.0;
        bool accepted = false;
        for (int hv = 0; hv <= max_halvings; ++hv) {
            f_try = oracle.f(st.x + eta * delta);
            if (f_try <= f_x + eta * slope / 2.0) {
                accepted = true;
                break;
            }
            eta /= 2.0;
        }
        if (!accepted) {
            // Retry once along steepest descent before giving up.
            delta = -g;
            const double slope2 = delta.dot(g);
            eta = 2.0 * st.eta_prev;
            accepted = false;
            for (int hv = 0; hv <= max_halvings; ++hv) {
                f_try = oracle.f(st.x + eta * delta);
                if (f_try <= f_x + eta * slope2 / 2.0) {
                    accepted = true;
                    break;
                }
                eta /= 2.0;
            }
            if (!accepted) {
                recorder.finish(Terminal::Error);
                return rec;
            }
        }
        st.grad_prev = g;
        st.delta_prev = delta;
        st.eta_prev = eta;
        st.x += eta * delta;
        f_x = f_try;
        g = oracle.grad(st.x);
        recorder.sample(f_x, g.norm());
        have_prev = true;
    }
    recorder.finish(Terminal::Converged);
    return rec;
}

// Semi-adaptive AGD-Until-Guilty: shares the outer/inner machinery with
// PF-AGD but never adapts M, uses plain Armijo doubling with c = 1 inside
// the accelerated step, disables restarts, and adds the linearization check
// to the certificate. The only delta vs pf_agd is the variant switch.
inline RunRecord aug_practical_run(CountingOracle& oracle, const Vector& p0, double L1_init, double eps,
                                   long budget, const OuterConfig& base_cfg = {}) {
    RunRecord rec;
    RunRecorder recorder(rec, oracle);
    OuterConfig cfg = base_cfg;
    cfg.epsilon = eps;
    cfg.max_oracle_calls = budget;
    cfg.mode = SolverMode::Practical;
    cfg.variant = OuterVariant::AgdUntilGuilty;
    OuterTrace trace = pf_agd(oracle, p0, L1_init, cfg, &recorder);
    return rec;
}

}  // namespace pfagd
