#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfagd/oracle.hpp"
#include "pfagd/rng.hpp"

namespace pfagd {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Spectrum { Uniform, LogUniform, Explicit };

struct QuadraticSpec {
    Eigen::MatrixXd H;
    Vector b;
    Vector eigenvalues;  // the drawn diagonal D
    double kappa = 0.0;
    double mu = 0.0;
};

struct ProblemSpec {
    std::string name;
    Eigen::Index dim = 0;
    Objective objective;
    std::function<Vector(Rng&)> sample_init;
    std::optional<double> known_L1;
    std::optional<double> known_fmin;
    std::shared_ptr<const QuadraticSpec> quadratic;
};

namespace detail {

inline Vector fixed_init(Vector x0) {
    return x0;
}

inline std::function<Vector(Rng&)> constant_init(Vector x0) {
    return [x0 = std::move(x0)](Rng&) { return x0; };
}

inline std::function<Vector(Rng&)> gaussian_init(Vector center, double variance) {
    return [center = std::move(center), stddev = std::sqrt(variance)](Rng& rng) {
        return Vector(center + normal_vector(rng, center.size(), 0.0, stddev));
    };
}

}  // namespace detail

// Sum of 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2; init (-1.2, 1) tiled.
inline ProblemSpec make_rosenbrock(Eigen::Index d) {
    if (d < 2) throw ConfigError("rosenbrock: d must be >= 2");
    ProblemSpec p;
    p.name = "rosenbrock";
    p.dim = d;
    p.objective = Objective(
        d,
        [](const Vector& x) {
            double v = 0.0;
            for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
                const double a = x[i + 1] - x[i] * x[i];
                const double b = 1.0 - x[i];
                v += 100.0 * a * a + b * b;
            }
            return v;
        },
        [](const Vector& x) {
            Vector g = Vector::Zero(x.size());
            for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
                const double a = x[i + 1] - x[i] * x[i];
                g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
                g[i + 1] += 200.0 * a;
            }
            return g;
        });
    Vector x0(d);
    for (Eigen::Index i = 0; i < d; ++i) x0[i] = (i % 2 == 0) ? -1.2 : 1.0;
    p.sample_init = detail::constant_init(std::move(x0));
    p.known_fmin = 0.0;
    return p;
}

inline ProblemSpec make_ackley(Eigen::Index d) {
    if (d < 1) throw ConfigError("ackley: d must be >= 1");
    ProblemSpec p;
    p.name = "ackley";
    p.dim = d;
    const double dd = static_cast<double>(d);
    p.objective = Objective(
        d,
        [dd](const Vector& x) {
            const double s = std::sqrt(x.squaredNorm() / dd);
            double c = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) c += std::cos(2.0 * std::numbers::pi * x[i]);
            c /= dd;
            return -20.0 * std::exp(-0.2 * s) - std::exp(c) + std::numbers::e + 20.0;
        },
        [dd](const Vector& x) {
            const double s = std::sqrt(x.squaredNorm() / dd);
            double c = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) c += std::cos(2.0 * std::numbers::pi * x[i]);
            c /= dd;
            Vector g(x.size());
            const double radial = s > 0.0 ? 4.0 * std::exp(-0.2 * s) / (dd * s) : 0.0;
            const double expc = std::exp(c);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                g[i] = radial * x[i] +
                       2.0 * std::numbers::pi / dd * std::sin(2.0 * std::numbers::pi * x[i]) * expc;
            }
            return g;
        });
    Vector center = Vector::Zero(d);
    center[0] = -1.0;
    if (d > 1) center[1] = -1.0;
    p.sample_init = detail::gaussian_init(std::move(center), 1e-4);
    p.known_fmin = 0.0;
    return p;
}

inline ProblemSpec make_powell(Eigen::Index d) {
    if (d < 4 || d % 4 != 0) throw ConfigError("powell: d must be a positive multiple of 4");
    ProblemSpec p;
    p.name = "powell";
    p.dim = d;
    p.objective = Objective(
        d,
        [](const Vector& x) {
            double v = 0.0;
            for (Eigen::Index i = 0; i < x.size(); i += 4) {
                const double a = x[i] + 10.0 * x[i + 1];
                const double b = x[i + 2] - x[i + 3];
                const double c = x[i + 1] - 2.0 * x[i + 2];
                const double e = x[i] - x[i + 3];
                v += a * a + 5.0 * b * b + c * c * c * c + 10.0 * e * e * e * e;
            }
            return v;
        },
        [](const Vector& x) {
            Vector g(x.size());
            for (Eigen::Index i = 0; i < x.size(); i += 4) {
                const double a = x[i] + 10.0 * x[i + 1];
                const double b = x[i + 2] - x[i + 3];
                const double c = x[i + 1] - 2.0 * x[i + 2];
                const double e = x[i] - x[i + 3];
                g[i] = 2.0 * a + 40.0 * e * e * e;
                g[i + 1] = 20.0 * a + 4.0 * c * c * c;
                g[i + 2] = 10.0 * b - 8.0 * c * c * c;
                g[i + 3] = -10.0 * b - 40.0 * e * e * e;
            }
            return g;
        });
    p.sample_init = detail::gaussian_init(Vector::Zero(d), 1e-1);
    p.known_fmin = 0.0;
    return p;
}

inline ProblemSpec make_qing(Eigen::Index d) {
    if (d < 1) throw ConfigError("qing: d must be >= 1");
    ProblemSpec p;
    p.name = "qing";
    p.dim = d;
    p.objective = Objective(
        d,
        [](const Vector& x) {
            double v = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double r = x[i] * x[i] - static_cast<double>(i + 1);
                v += r * r;
            }
            return v;
        },
        [](const Vector& x) {
            Vector g(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i)
                g[i] = 4.0 * x[i] * (x[i] * x[i] - static_cast<double>(i + 1));
            return g;
        });
    Vector xstar(d);
    for (Eigen::Index i = 0; i < d; ++i) xstar[i] = std::sqrt(static_cast<double>(i + 1));
    p.sample_init = detail::gaussian_init(std::move(xstar), 1e-1);
    p.known_fmin = 0.0;
    return p;
}

inline Vector dixon_price_minimizer(Eigen::Index d) {
    Vector xstar(d);
    for (Eigen::Index i = 0; i < d; ++i)
        xstar[i] = std::exp2(std::exp2(-static_cast<double>(i)) - 1.0);
    return xstar;
}

inline ProblemSpec make_dixon_price(Eigen::Index d) {
    if (d < 2) throw ConfigError("dixon_price: d must be >= 2");
    ProblemSpec p;
    p.name = "dixon_price";
    p.dim = d;
    p.objective = Objective(
        d,
        [](const Vector& x) {
            double v = (x[0] - 1.0) * (x[0] - 1.0);
            for (Eigen::Index i = 1; i < x.size(); ++i) {
                const double r = 2.0 * x[i] * x[i] - x[i - 1];
                v += static_cast<double>(i + 1) * r * r;
            }
            return v;
        },
        [](const Vector& x) {
            Vector g = Vector::Zero(x.size());
            g[0] = 2.0 * (x[0] - 1.0);
            for (Eigen::Index i = 1; i < x.size(); ++i) {
                const double w = static_cast<double>(i + 1);
                const double r = 2.0 * x[i] * x[i] - x[i - 1];
                g[i] += 8.0 * w * r * x[i];
                g[i - 1] += -2.0 * w * r;
            }
            return g;
        });
    p.sample_init = detail::gaussian_init(dixon_price_minimizer(d), 1e-1);
    p.known_fmin = 0.0;
    return p;
}

inline ProblemSpec make_scosine(Eigen::Index d) {
    if (d < 2) throw ConfigError("scosine: d must be >= 2");
    ProblemSpec p;
    p.name = "scosine";
    p.dim = d;
    p.objective = Objective(
        d,
        [](const Vector& x) {
            double v = 0.0;
            for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
                const double c = std::cos(x[i] * x[i] - 0.5 * x[i + 1]);
                v += c * c;
            }
            return v;
        },
        [](const Vector& x) {
            Vector g = Vector::Zero(x.size());
            for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
                const double s2 = std::sin(2.0 * (x[i] * x[i] - 0.5 * x[i + 1]));
                g[i] += -2.0 * x[i] * s2;
                g[i + 1] += 0.5 * s2;
            }
            return g;
        });
    p.sample_init = detail::constant_init(Vector::Ones(d));
    p.known_fmin = 0.0;
    return p;
}

// One minimizer of the scosine family via x_1 = 0, x_{i+1} = 2 x_i^2 - pi.
// Grows doubly exponentially; meaningful only for small d.
inline Vector scosine_reference_minimizer(Eigen::Index d) {
    Vector x(d);
    x[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < d; ++i) x[i + 1] = 2.0 * x[i] * x[i] - std::numbers::pi;
    return x;
}

struct QuadraticOptions {
    double kappa = 100.0;          // convex family: eigenvalues in [1, kappa], endpoints pinned
    Spectrum spectrum = Spectrum::Uniform;
    std::vector<double> explicit_eigenvalues;  // Spectrum::Explicit
    int positives = 0, negatives = 0, zeros = 0;  // sign-constrained slots (indefinite family)
    double mu = 0.0;               // quartic regularization weight
    double lambda_min = -10.0;     // range of the remaining eigenvalues (indefinite family)
    double lambda_max = 10.0;
};

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
// of R's diagonal folded into Q.
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index d, Rng& rng) {
    Eigen::MatrixXd A(d, d);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) A(i, j) = dist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

// f(x) = 1/2 x^T H x + 1^T x + mu ||x||^4 with H a Haar rotation of a drawn
// spectrum. mu = 0 gives the convex family with exact condition number kappa.
inline ProblemSpec make_quadratic(Eigen::Index d, const QuadraticOptions& opt, Rng& rng) {
    if (d < 2) throw ConfigError("quadratic: d must be >= 2");
    const int forced = opt.positives + opt.negatives + opt.zeros;
    if (forced > d) throw ConfigError("quadratic: sign counts exceed dimension");

    Vector D(d);
    if (opt.spectrum == Spectrum::Explicit) {
        if (static_cast<Eigen::Index>(opt.explicit_eigenvalues.size()) != d)
            throw ConfigError("quadratic: explicit spectrum size mismatch");
        for (Eigen::Index i = 0; i < d; ++i) D[i] = opt.explicit_eigenvalues[i];
    } else if (forced == 0 && opt.mu == 0.0) {
        // Convex family: pin the endpoints so kappa(H) = kappa exactly.
        if (!(opt.kappa >= 1.0)) throw ConfigError("quadratic: kappa must be >= 1");
        D[0] = 1.0;
        D[1] = opt.kappa;
        for (Eigen::Index i = 2; i < d; ++i) {
            if (opt.spectrum == Spectrum::Uniform)
                D[i] = uniform_draw(rng, 1.0, opt.kappa);
            else
                D[i] = std::exp(uniform_draw(rng, 0.0, std::log(opt.kappa)));
        }
    } else {
        Eigen::Index k = 0;
        for (int i = 0; i < opt.positives; ++i) D[k++] = opt.lambda_max * (1.0 - uniform_draw(rng, 0.0, 1.0));
        for (int i = 0; i < opt.negatives; ++i) D[k++] = opt.lambda_min * (1.0 - uniform_draw(rng, 0.0, 1.0));
        for (int i = 0; i < opt.zeros; ++i) D[k++] = 0.0;
        for (; k < d; ++k) D[k] = uniform_draw(rng, opt.lambda_min, opt.lambda_max);
    }

    const Eigen::MatrixXd Q = haar_orthogonal(d, rng);
    auto spec = std::make_shared<QuadraticSpec>();
    spec->H = Q * D.asDiagonal() * Q.transpose();
    spec->H = 0.5 * (spec->H + spec->H.transpose());  // symmetrize rounding
    spec->b = Vector::Ones(d);
    spec->eigenvalues = D;
    spec->mu = opt.mu;
    const double dmax = D.cwiseAbs().maxCoeff();
    const double dmin = D.cwiseAbs().minCoeff();
    spec->kappa = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();

    ProblemSpec p;
    p.name = "quadratic";
    p.dim = d;
    p.quadratic = spec;
    const double mu = opt.mu;
    p.objective = Objective(
        d,
        [spec, mu](const Vector& x) {
            double v = 0.5 * x.dot(spec->H * x) + spec->b.dot(x);
            if (mu > 0.0) {
                const double n2 = x.squaredNorm();
                v += mu * n2 * n2;
            }
            return v;
        },
        [spec, mu](const Vector& x) {
            Vector g = spec->H * x + spec->b;
            if (mu > 0.0) g += 4.0 * mu * x.squaredNorm() * x;
            return g;
        });
    p.sample_init = detail::constant_init(Vector::Zero(d));
    if (mu == 0.0) {
        p.known_L1 = dmax;
        if (D.minCoeff() > 0.0) {
            const Vector xstar = spec->H.ldlt().solve(-spec->b);
            p.known_fmin = 0.5 * xstar.dot(spec->H * xstar) + spec->b.dot(xstar);
        }
    } else {
        // Local bound at the (zero) initialization; informational only.
        p.known_L1 = dmax;
    }
    return p;
}

struct BiweightData {
    Eigen::MatrixXd A;
    Vector b;
};

// Robust regression with the bounded biweight loss phi(t) = t^2 / (1 + t^2).
inline ProblemSpec make_biweight_regression(Eigen::Index d, Eigen::Index m_rows, Rng& rng) {
    if (m_rows < 1) throw ConfigError("biweight: m_rows must be >= 1");
    auto data = std::make_shared<BiweightData>();
    data->A.resize(m_rows, d);
    const double entry_std = std::pow(static_cast<double>(d), -0.25);  // covariance I / sqrt(d)
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index i = 0; i < m_rows; ++i)
        for (Eigen::Index j = 0; j < d; ++j) data->A(i, j) = entry_std * dist(rng);
    data->b.resize(m_rows);
    for (Eigen::Index i = 0; i < m_rows; ++i) data->b[i] = dist(rng);

    ProblemSpec p;
    p.name = "biweight";
    p.dim = d;
    const double m = static_cast<double>(m_rows);
    p.objective = Objective(
        d,
        [data, m](const Vector& x) {
            const Vector r = data->A * x - data->b;
            double v = 0.0;
            for (Eigen::Index i = 0; i < r.size(); ++i) {
                const double t2 = r[i] * r[i];
                v += t2 / (1.0 + t2);
            }
            return v / m;
        },
        [data, m](const Vector& x) {
            const Vector r = data->A * x - data->b;
            Vector w(r.size());
            for (Eigen::Index i = 0; i < r.size(); ++i) {
                const double den = 1.0 + r[i] * r[i];
                w[i] = 2.0 * r[i] / (den * den);
            }
            return Vector(data->A.transpose() * w / m);
        });
    p.sample_init = detail::constant_init(Vector::Zero(d));
    // phi'' <= 2, so L1 <= (2/m) lambda_max(A^T A).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data->A.transpose() * data->A);
    p.known_L1 = 2.0 * es.eigenvalues().maxCoeff() / m;
    return p;
}

// ---------------------------------------------------------------------------
// Registry: name + parameter map + seed -> ProblemSpec. The seed drives both
// the data draw and the initialization sample (via the same stream).

inline std::vector<std::string> problem_names() {
    return {"rosenbrock", "ackley", "powell", "qing", "dixon_price", "scosine", "quadratic", "biweight"};
}

inline ProblemSpec make_problem(const std::string& name, const std::map<std::string, double>& params,
                                Rng& rng) {
    const auto get = [&](const std::string& key, double fallback) {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "rosenbrock") return make_rosenbrock(static_cast<Eigen::Index>(get("dim", 2)));
    if (name == "ackley") return make_ackley(static_cast<Eigen::Index>(get("dim", 10)));
    if (name == "powell") return make_powell(static_cast<Eigen::Index>(get("dim", 20)));
    if (name == "qing") return make_qing(static_cast<Eigen::Index>(get("dim", 20)));
    if (name == "dixon_price") return make_dixon_price(static_cast<Eigen::Index>(get("dim", 1000)));
    if (name == "scosine") return make_scosine(static_cast<Eigen::Index>(get("dim", 10)));
    if (name == "quadratic") {
        QuadraticOptions opt;
        opt.kappa = get("kappa", 100.0);
        const double spectrum = get("loguniform", 0.0);
        opt.spectrum = spectrum != 0.0 ? Spectrum::LogUniform : Spectrum::Uniform;
        opt.positives = static_cast<int>(get("pos", 0));
        opt.negatives = static_cast<int>(get("neg", 0));
        opt.zeros = static_cast<int>(get("zero", 0));
        opt.mu = get("mu", 0.0);
        opt.lambda_min = get("lmin", -10.0);
        opt.lambda_max = get("lmax", 10.0);
        return make_quadratic(static_cast<Eigen::Index>(get("dim", 100)), opt, rng);
    }
    if (name == "biweight") {
        return make_biweight_regression(static_cast<Eigen::Index>(get("dim", 200)),
                                        static_cast<Eigen::Index>(get("rows", 400)), rng);
    }
    throw ConfigError("unknown problem: " + name);
}

}  // namespace pfagd
