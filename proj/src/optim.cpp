#include "ate/optim.hpp"

#include <cmath>

namespace ate {

OptimResult minimize_bfgs(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                          const OptimOptions& opts) {
    const int n = static_cast<int>(x0.size());
    OptimResult res;
    res.x = x0;
    Eigen::VectorXd g(n);
    res.f = fn(res.x, &g);
    res.grad = g;

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    const double c1 = 1e-4;

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        res.iterations = iter;
        if (g.cwiseAbs().maxCoeff() < opts.grad_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = -(H * g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            // curvature information went bad, restart from steepest descent
            H.setIdentity();
            d = -g;
            slope = g.dot(d);
        }

        double alpha = 1.0;
        double f_new = res.f;
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = res.x + alpha * d;
            f_new = fn(x_new, nullptr);
            if (std::isfinite(f_new) && f_new <= res.f + c1 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // no descent available at this scale

        Eigen::VectorXd g_new(n);
        fn(x_new, &g_new);
        Eigen::VectorXd s = x_new - res.x;
        Eigen::VectorXd yv = g_new - g;
        double sy = s.dot(yv);
        if (sy > 1e-10 * s.norm() * yv.norm()) {
            if (!scaled) {
                H *= sy / yv.squaredNorm();
                scaled = true;
            }
            double rho = 1.0 / sy;
            Eigen::MatrixXd V =
                Eigen::MatrixXd::Identity(n, n) - rho * s * yv.transpose();
            H = V * H * V.transpose() + rho * s * s.transpose();
        }
        res.x = x_new;
        res.f = f_new;
        g = g_new;
        res.grad = g;
    }
    if (g.cwiseAbs().maxCoeff() < opts.grad_tol) res.converged = true;
    return res;
}

}  // namespace ate
