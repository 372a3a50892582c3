#ifndef ATE_NUMERICS_HPP
#define ATE_NUMERICS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace ate {

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Max absolute error ~1e-16 via the complementary error function.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_logistic(double x) {
    // log(1/(1+exp(-x))) without overflow on either tail
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

// phi(eta)/Phi(eta); the caller clamps eta, Phi(-8) ~ 6e-16 stays positive.
inline double inverse_mills_upper(double eta) {
    return norm_pdf(eta) / norm_cdf(eta);
}

// -phi(eta)/(1 - Phi(eta))
inline double inverse_mills_lower(double eta) {
    return -norm_pdf(eta) / norm_cdf(-eta);
}

// Physicists' Gauss-Hermite rule: integral of exp(-x^2) f(x) dx ~ sum w_k f(x_k).
// Rules are computed by Golub-Welsch and cached per node count.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

const GaussHermiteRule& gauss_hermite(int n);

// Recursive adaptive Simpson quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

}  // namespace ate

#endif
