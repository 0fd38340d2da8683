#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "pfagd/rng.hpp"

namespace pfagd {

// First-order objective: f and its analytic gradient over R^d.
// Both callables must be deterministic (same input, same output bits).
class Objective {
public:
    using FuncEval = std::function<double(const Vector&)>;
    using GradEval = std::function<Vector(const Vector&)>;

    Objective() = default;
    Objective(Eigen::Index dim, FuncEval f, GradEval grad)
        : dim_(dim), f_(std::move(f)), grad_(std::move(grad)) {
        if (dim_ <= 0) throw std::invalid_argument("Objective: dim must be positive");
    }

    Eigen::Index dim() const { return dim_; }
    double f(const Vector& x) const { return f_(x); }
    Vector grad(const Vector& x) const { return grad_(x); }

private:
    Eigen::Index dim_ = 0;
    FuncEval f_;
    GradEval grad_;
};

// Anything exposing dim/f/grad works as an oracle for the solvers.
template <class T>
concept Oracle = requires(const T& o, const Vector& x) {
    { o.dim() } -> std::convertible_to<Eigen::Index>;
    { o.f(x) } -> std::convertible_to<double>;
    { o.grad(x) } -> std::convertible_to<Vector>;
};

// Per-run call accounting. Single-writer: one solver run owns one instance.
// Complexity metrics report grad_calls only; f_calls are tracked separately.
class CountingOracle {
public:
    explicit CountingOracle(const Objective& base) : base_(&base) {}

    Eigen::Index dim() const { return base_->dim(); }
    double f(const Vector& x) const {
        ++f_calls_;
        return base_->f(x);
    }
    Vector grad(const Vector& x) const {
        ++grad_calls_;
        return base_->grad(x);
    }

    long grad_calls() const { return grad_calls_; }
    long f_calls() const { return f_calls_; }

private:
    const Objective* base_;
    mutable long grad_calls_ = 0;
    mutable long f_calls_ = 0;
};

// f_hat(x) = f(x) + alpha * ||x - center||^2, the epoch objective of the
// outer loop. Exactly one base call per call.
template <Oracle Base>
class RegularizedOracle {
public:
    RegularizedOracle(const Base& base, Vector center, double alpha)
        : base_(&base), center_(std::move(center)), alpha_(alpha) {
        if (alpha_ <= 0.0) throw std::invalid_argument("RegularizedOracle: alpha must be positive");
    }

    Eigen::Index dim() const { return base_->dim(); }
    double f(const Vector& x) const { return base_->f(x) + alpha_ * (x - center_).squaredNorm(); }
    Vector grad(const Vector& x) const { return base_->grad(x) + 2.0 * alpha_ * (x - center_); }

    double alpha() const { return alpha_; }
    const Vector& center() const { return center_; }

    // Recover base-objective value/gradient from regularized ones without
    // touching the oracle (used for trajectory recording).
    double base_f(const Vector& x, double f_hat) const { return f_hat - alpha_ * (x - center_).squaredNorm(); }
    Vector base_grad(const Vector& x, const Vector& g_hat) const { return g_hat - 2.0 * alpha_ * (x - center_); }

private:
    const Base* base_;
    Vector center_;
    double alpha_;
};

// Central finite differences, component-wise. Throws on non-finite values so
// verification failures are loud rather than silent NaNs.
template <Oracle O>
Vector finite_diff_grad(const O& oracle, const Vector& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
    if (!x.allFinite()) throw std::invalid_argument("finite_diff_grad: x must be finite");
    Vector g(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        xp[i] = xi + h;
        const double fp = oracle.f(xp);
        xp[i] = xi - h;
        const double fm = oracle.f(xp);
        xp[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::domain_error("finite_diff_grad: non-finite objective value");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Norm-wise relative check of analytic vs central-FD gradient.
template <Oracle O>
bool check_gradient(const O& oracle, const Vector& x, double h = 1e-6, double rel_tol = 1e-6,
                    double abs_floor = 1e-8) {
    Vector fd;
    try {
        fd = finite_diff_grad(oracle, x, h);
    } catch (const std::domain_error&) {
        return false;
    }
    const Vector g = oracle.grad(x);
    const double err = (fd - g).norm();
    return err <= std::max(rel_tol * g.norm(), abs_floor);
}

// Local estimate of the gradient Lipschitz constant at x0:
// max over random unit directions u of ||grad(x0 + h u) - grad(x0)|| / h.
// Falls back to 1.0 on perfectly flat regions. Costs trials + 1 grad calls.
template <Oracle O>
double estimate_initial_L1(const O& oracle, const Vector& x0, int trials, double h, Rng& rng) {
    if (trials < 1) throw std::invalid_argument("estimate_initial_L1: trials must be >= 1");
    if (!(h > 0.0)) throw std::invalid_argument("estimate_initial_L1: h must be positive");
    const Vector g0 = oracle.grad(x0);
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Vector u = unit_vector(rng, x0.size());
        const double est = (oracle.grad(x0 + h * u) - g0).norm() / h;
        best = std::max(best, est);
    }
    return best > 0.0 ? best : 1.0;
}

}  // namespace pfagd
