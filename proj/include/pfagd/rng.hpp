#pragma once

#include <random>

#include <Eigen/Core>

namespace pfagd {

using Rng = std::mt19937_64;
using Vector = Eigen::VectorXd;

inline double normal_draw(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(rng);
}

inline double uniform_draw(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

inline Vector normal_vector(Rng& rng, Eigen::Index n, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

// Gaussian direction normalized to the unit sphere.
inline Vector unit_vector(Rng& rng, Eigen::Index n) {
    Vector u = normal_vector(rng, n);
    double nrm = u.norm();
    while (nrm == 0.0) {
        u = normal_vector(rng, n);
        nrm = u.norm();
    }
    return u / nrm;
}

}  // namespace pfagd
