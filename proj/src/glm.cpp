#include "ate/glm.hpp"

#include <cmath>

#include "ate/errors.hpp"
#include "ate/numerics.hpp"

namespace ate {

namespace {

std::string column_label(int j, const std::vector<std::string>& names) {
    if (j == 0) return "intercept";
    if (j - 1 < static_cast<int>(names.size())) return "'" + names[j - 1] + "'";
    return "column " + std::to_string(j);
}

void check_binary(const std::vector<int>& t) {
    bool has0 = false, has1 = false;
    for (int v : t) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else throw ValidationError("binary response must be 0 or 1");
    }
    if (!has0 || !has1) {
        throw ValidationError("binary fit requires both classes present");
    }
}

// Shared Newton loop for logit/probit. Per-observation the link supplies the
// log-likelihood term, d ll/d eta and -d2 ll/d eta2.
template <typename Terms>
FitResult newton_binary(const Eigen::MatrixXd& X, const std::vector<int>& t,
                        const Eigen::VectorXd& weights,
                        const std::vector<std::string>& col_names, Terms terms) {
    (void)col_names;
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    if (n != static_cast<int>(t.size()) || n != weights.size()) {
        throw ValidationError("dimension mismatch in binary fit");
    }
    check_binary(t);

    const int max_iter = 100;
    const double grad_tol = 1e-8;
    const double eta_bound = 30.0;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd score(n), info(n);

    auto evaluate = [&](const Eigen::VectorXd& e, Eigen::VectorXd* s,
                        Eigen::VectorXd* h) {
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            double li, si, hi;
            terms(e[i], t[i], li, si, hi);
            ll += weights[i] * li;
            if (s) (*s)[i] = weights[i] * si;
            if (h) (*h)[i] = weights[i] * hi;
        }
        return ll;
    };

    double ll = evaluate(eta, &score, &info);
    FitResult fit;
    fit.coefficients = beta;

    for (int iter = 1; iter <= max_iter; ++iter) {
        Eigen::VectorXd grad = X.transpose() * score;
        Eigen::MatrixXd H = X.transpose() * info.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw SingularDesignError("information matrix is singular in binary fit");
        }
        Eigen::VectorXd step = ldlt.solve(grad);

        // step halving until the log-likelihood does not decrease
        double alpha = 1.0;
        Eigen::VectorXd beta_new, eta_new;
        double ll_new = ll;
        for (int h = 0; h < 40; ++h) {
            beta_new = beta + alpha * step;
            eta_new = X * beta_new;
            ll_new = evaluate(eta_new, nullptr, nullptr);
            if (std::isfinite(ll_new) && ll_new >= ll - 1e-12) break;
            alpha *= 0.5;
        }
        beta = beta_new;
        eta = eta_new;
        ll = ll_new;
        fit.iterations = iter;

        if (eta.cwiseAbs().maxCoeff() > eta_bound) {
            throw SeparationError(
                "linear predictor exceeds bound; classes appear separated");
        }

        ll = evaluate(eta, &score, &info);
        Eigen::VectorXd grad_new = X.transpose() * score;
        if (grad_new.cwiseAbs().maxCoeff() < grad_tol) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        throw ConvergenceError("binary fit did not converge in 100 iterations");
    }

    Eigen::MatrixXd H = X.transpose() * info.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) {
        throw SingularDesignError("observed information is singular at the optimum");
    }
    fit.coefficients = beta;
    fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
    fit.loglik = ll;
    return fit;
}

}  // namespace

FitResult fit_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights,
                  const std::vector<std::string>& col_names) {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    if (n != y.size() || n != weights.size()) {
        throw ValidationError("dimension mismatch in least squares");
    }
    if (n <= k) {
        throw ValidationError("least squares needs more rows than columns");
    }
    if ((weights.array() <= 0.0).any()) {
        throw ValidationError("least-squares weights must be positive");
    }

    Eigen::VectorXd sw = weights.array().sqrt();
    Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    Eigen::VectorXd yw = sw.asDiagonal() * y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        // first pivoted-out column is the offender
        int bad = qr.colsPermutation().indices()[qr.rank()];
        throw SingularDesignError("design is rank deficient, " +
                                  column_label(bad, col_names) +
                                  " is collinear with earlier columns");
    }

    FitResult fit;
    fit.coefficients = qr.solve(yw);
    Eigen::VectorXd resid = yw - Xw * fit.coefficients;
    double rss = resid.squaredNorm();
    double sigma2 = rss / (n - k);
    fit.scale = std::sqrt(sigma2);

    Eigen::MatrixXd xtx = Xw.transpose() * Xw;
    fit.covariance = sigma2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

FitResult fit_logit(const Eigen::MatrixXd& X, const std::vector<int>& t,
                    const Eigen::VectorXd& weights,
                    const std::vector<std::string>& col_names) {
    return newton_binary(X, t, weights, col_names,
                         [](double eta, int ti, double& ll, double& s, double& h) {
                             double p = logistic(eta);
                             ll = ti ? log_logistic(eta) : log_logistic(-eta);
                             s = ti - p;
                             h = p * (1.0 - p);
                         });
}

FitResult fit_probit(const Eigen::MatrixXd& X, const std::vector<int>& t,
                     const Eigen::VectorXd& weights,
                     const std::vector<std::string>& col_names) {
    return newton_binary(X, t, weights, col_names,
                         [](double eta, int ti, double& ll, double& s, double& h) {
                             double P = norm_cdf(eta);
                             double phi = norm_pdf(eta);
                             P = std::min(std::max(P, 1e-300), 1.0 - 1e-16);
                             if (ti) {
                                 ll = std::log(P);
                                 s = phi / P;
                                 h = s * (s + eta);  // observed information
                             } else {
                                 ll = std::log1p(-P);
                                 s = -phi / (1.0 - P);
                                 h = -s * (-s + eta);
                             }
                             if (h < 1e-12) h = 1e-12;
                         });
}

Eigen::VectorXd predict_prob(const FitResult& fit, const Eigen::MatrixXd& X, Link link) {
    if (X.cols() != fit.coefficients.size()) {
        throw ValidationError("predict_prob: column count does not match fit");
    }
    Eigen::VectorXd eta = X * fit.coefficients;
    Eigen::VectorXd p(eta.size());
    const double eps = 1e-12;
    for (int i = 0; i < eta.size(); ++i) {
        double v = link == Link::Logit ? logistic(eta[i]) : norm_cdf(eta[i]);
        p[i] = std::min(std::max(v, eps), 1.0 - eps);
    }
    return p;
}

}  // namespace ate
