#include "ate/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ate {

namespace {

GaussHermiteRule build_gauss_hermite(int n) {
    // Jacobi matrix of the Hermite three-term recurrence, off-diagonal sqrt(k/2).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(0.5 * k);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermiteRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(n);
    const double sqrt_pi = 1.7724538509055160273;
    for (int k = 0; k < n; ++k) {
        double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = sqrt_pi * v0 * v0;
    }
    return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: node count must be positive");
    static std::map<int, GaussHermiteRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, build_gauss_hermite(n)).first;
    }
    return it->second;
}

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a, double b,
                       double fa, double fm, double fb, double whole, double tol,
                       int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
    if (a == b) return 0.0;
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace ate
