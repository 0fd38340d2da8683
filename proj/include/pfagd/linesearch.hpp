#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pfagd/oracle.hpp"

namespace pfagd {

struct BacktrackConfig {
    double c = 0.5;        // Armijo parameter, in [1/2, 1)
    double rho = 0.8;      // base shrink factor, in (0, 1)
    double gamma = 2.0;    // L1 growth factor, > 1
    double eps_min = 0.1;  // floor of the adaptive shrink factor, in (0, 1)
    int max_shrinks = 200;
    int max_doublings = 100;

    void validate() const {
        if (!(c >= 0.5 && c < 1.0)) throw std::invalid_argument("BacktrackConfig: c must be in [1/2, 1)");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("BacktrackConfig: rho must be in (0, 1)");
        if (!(gamma > 1.0)) throw std::invalid_argument("BacktrackConfig: gamma must be > 1");
        if (!(eps_min > 0.0 && eps_min < 1.0))
            throw std::invalid_argument("BacktrackConfig: eps_min must be in (0, 1)");
    }
};

class LineSearchError : public std::runtime_error {
public:
    LineSearchError(const std::string& what, double last_alpha)
        : std::runtime_error(what), last_alpha(last_alpha) {}
    double last_alpha;
};

// Violation map v(alpha): acceptance of the Armijo condition is v >= 1.
// gdotd is <grad f(x), d> and must be negative (descent direction).
inline double violation_value(double f_trial, double f_x, double alpha, double gdotd, double c) {
    const double denom = c * alpha * gdotd;
    if (!(denom < 0.0))
        throw std::invalid_argument("violation: requires a descent direction (<grad, d> < 0) and alpha > 0");
    return (f_trial - f_x) / denom;
}

template <Oracle O>
double violation(const O& oracle, const Vector& x, const Vector& d, double alpha, double c) {
    if (!(alpha > 0.0)) throw std::invalid_argument("violation: alpha must be positive");
    const double f_x = oracle.f(x);
    const double gdotd = oracle.grad(x).dot(d);
    return violation_value(oracle.f(x + alpha * d), f_x, alpha, gdotd, c);
}

// Adaptive shrink factor: max{eps_min, rho (1-c) / (1 - c v)}. Defined for
// v <= 1; the denominator is then at least 1 - c > 0.
inline double adaptive_shrink(double v, const BacktrackConfig& cfg) {
    if (!(v <= 1.0)) throw std::invalid_argument("adaptive_shrink: expects v <= 1");
    const double denom = 1.0 - cfg.c * v;
    return std::max(cfg.eps_min, cfg.rho * (1.0 - cfg.c) / denom);
}

struct StepResult {
    double alpha = 0.0;
    double L1_est = 0.0;  // = 1 / alpha
    int shrink_count = 0;
    Vector x_new;         // accepted trial point x + alpha d
    double f_new = 0.0;   // objective at the accepted point (cached)
};

// Adaptive backtracking line search. Starts from alpha_prev and shrinks by
// the adaptive factor until the Armijo condition holds. f_x and gdotd are
// the cached value and directional derivative at x.
template <Oracle O>
StepResult abls_cached(const O& oracle, const Vector& x, const Vector& d, double alpha_prev,
                       const BacktrackConfig& cfg, double f_x, double gdotd) {
    if (!(alpha_prev > 0.0)) throw std::invalid_argument("abls: alpha_prev must be positive");
    if (!(gdotd < 0.0)) throw std::invalid_argument("abls: d must be a descent direction");
    double alpha = alpha_prev;
    StepResult res;
    for (int shrinks = 0;; ++shrinks) {
        res.x_new = x + alpha * d;
        res.f_new = oracle.f(res.x_new);
        const double v = violation_value(res.f_new, f_x, alpha, gdotd, cfg.c);
        if (v >= 1.0) {
            res.alpha = alpha;
            res.L1_est = 1.0 / alpha;
            res.shrink_count = shrinks;
            return res;
        }
        if (shrinks >= cfg.max_shrinks)
            throw LineSearchError("abls: shrink cap exceeded without acceptance", alpha);
        alpha *= adaptive_shrink(v, cfg);
    }
}

template <Oracle O>
StepResult abls(const O& oracle, const Vector& x, const Vector& d, double alpha_prev,
                const BacktrackConfig& cfg) {
    const double f_x = oracle.f(x);
    const double gdotd = oracle.grad(x).dot(d);
    return abls_cached(oracle, x, d, alpha_prev, cfg, f_x, gdotd);
}

struct DescentStep {
    Vector zeta;
    double L1_new = 0.0;
    double f_zeta = 0.0;
    int doublings = 0;
};

// Gradient step from y with gamma-doubling of L1 until the descent condition
// f(zeta) <= f(y) - ||grad f(y)||^2 / (2 L1) holds.
template <Oracle O>
DescentStep descent_backtrack_cached(const O& oracle, const Vector& y, double f_y, const Vector& g_y,
                                     double L1, const BacktrackConfig& cfg) {
    if (!(L1 > 0.0)) throw std::invalid_argument("descent_backtrack: L1 must be positive");
    const double gsq = g_y.squaredNorm();
    DescentStep res;
    if (gsq == 0.0) {
        res.zeta = y;
        res.L1_new = L1;
        res.f_zeta = f_y;
        return res;
    }
    for (int doublings = 0;; ++doublings) {
        res.zeta = y - g_y / L1;
        res.f_zeta = oracle.f(res.zeta);
        if (res.f_zeta <= f_y - gsq / (2.0 * L1)) {
            res.L1_new = L1;
            res.doublings = doublings;
            return res;
        }
        if (doublings >= cfg.max_doublings)
            throw LineSearchError("descent_backtrack: doubling cap exceeded", 1.0 / L1);
        L1 *= cfg.gamma;
    }
}

template <Oracle O>
DescentStep descent_backtrack(const O& oracle, const Vector& y, double L1, const BacktrackConfig& cfg) {
    const double f_y = oracle.f(y);
    const Vector g_y = oracle.grad(y);
    return descent_backtrack_cached(oracle, y, f_y, g_y, L1, cfg);
}

struct ArmijoStep {
    Vector x_next;
    double L1_next = 0.0;
    double f_x = 0.0;     // value at the base point
    double f_next = 0.0;  // value at the accepted point
    int doublings = 0;
};

// One Armijo steepest-descent step with L1 doubling; the accepted L1 carries
// over to the next iteration. Uses one gradient call.
template <Oracle O>
ArmijoStep armijo_doubling_sd_step(const O& oracle, const Vector& x, double L1, double c_armijo,
                                   int max_doublings = 100) {
    if (!(L1 > 0.0)) throw std::invalid_argument("armijo_doubling_sd_step: L1 must be positive");
    ArmijoStep res;
    res.f_x = oracle.f(x);
    const Vector g = oracle.grad(x);
    const double gsq = g.squaredNorm();
    if (gsq == 0.0) {
        res.x_next = x;
        res.L1_next = L1;
        res.f_next = res.f_x;
        return res;
    }
    for (int doublings = 0;; ++doublings) {
        res.x_next = x - g / L1;
        res.f_next = oracle.f(res.x_next);
        if (res.f_next <= res.f_x - c_armijo / L1 * gsq) {
            res.L1_next = L1;
            res.doublings = doublings;
            return res;
        }
        if (doublings >= max_doublings)
            throw LineSearchError("armijo_doubling_sd_step: doubling cap exceeded", 1.0 / L1);
        L1 *= 2.0;
    }
}

}  // namespace pfagd
