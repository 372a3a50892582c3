#ifndef ATE_GLM_HPP
#define ATE_GLM_HPP

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace ate {

enum class Link { Logit, Probit };

struct FitResult {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    double scale = 0.0;  // residual sd, least squares only
    double loglik = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
};

// Weighted least squares. weights = 1 gives OLS. Column-pivoted QR on the
// weighted system; rank deficiency names the offending column when names are
// supplied. covariance = sigma^2 (X'WX)^-1 with sigma^2 = weighted RSS/(n-k).
FitResult fit_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights,
                  const std::vector<std::string>& col_names = {});

// Weighted Bernoulli ML by Newton iterations with step halving.
// Tolerance ||grad||_inf < 1e-8, max 100 iterations, separation guard at
// |linear predictor| > 30. covariance = inverse observed information.
FitResult fit_logit(const Eigen::MatrixXd& X, const std::vector<int>& t,
                    const Eigen::VectorXd& weights,
                    const std::vector<std::string>& col_names = {});

FitResult fit_probit(const Eigen::MatrixXd& X, const std::vector<int>& t,
                     const Eigen::VectorXd& weights,
                     const std::vector<std::string>& col_names = {});

// Fitted response probabilities, clamped to [1e-12, 1 - 1e-12].
Eigen::VectorXd predict_prob(const FitResult& fit, const Eigen::MatrixXd& X, Link link);

}  // namespace ate

#endif
