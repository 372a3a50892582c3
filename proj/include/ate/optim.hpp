#ifndef ATE_OPTIM_HPP
#define ATE_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

namespace ate {

// f(x, grad): returns the objective, fills grad when non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct OptimOptions {
    int max_iterations = 400;
    double grad_tol = 1e-6;  // on the max-norm of the gradient
};

struct OptimResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    bool converged = false;
    int iterations = 0;
};

// Dense BFGS minimizer with Armijo backtracking. Accepts only improving steps,
// so the objective is non-increasing along the run.
OptimResult minimize_bfgs(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                          const OptimOptions& opts = {});

}  // namespace ate

#endif
