#ifndef ATE_SELECTION_ESTIMATORS_HPP
#define ATE_SELECTION_ESTIMATORS_HPP

#include "ate/dataset.hpp"
#include "ate/glm.hpp"
#include "ate/report.hpp"

namespace ate {

struct HeckmanFit {
    FitResult selection_fit;   // probit of T on (1, v), pooled sample
    Eigen::VectorXd mills;     // per-unit correction, sign depends on group
    FitResult outcome_fit1;    // y on (1, x, mills) within each group
    FitResult outcome_fit0;
    Eigen::VectorXd beta_lv1;  // coefficients on (1, x) only
    Eigen::VectorXd beta_lv0;
};

HeckmanFit heckman_two_stage(const StudyData& data, bool weighted);

// Two-stage latent-variable estimator; se from the stage-2 covariance only.
AteReport ate_heckman_lv(const StudyData& data, bool weighted);

struct IvDesign {
    std::string instrument;
    Eigen::VectorXd g_hat;      // fitted assignment probabilities g(x, h)
    Eigen::MatrixXd z_hat;      // rows (g_i x_i', (1-g_i) x_i')
    Eigen::MatrixXd x_tilde;    // rows (T_i x_i', (1-T_i) x_i')
    double instrument_z = 0.0;  // z-score of h in the assignment model
};

IvDesign build_iv_design(const StudyData& data, const std::string& instrument,
                         bool weighted, Link link = Link::Logit);

// theta = (sum z x')^-1 sum z y; heteroskedasticity-robust sandwich se.
AteReport ate_iv(const StudyData& data, const std::string& instrument, bool weighted,
                 Link link = Link::Logit);

}  // namespace ate

#endif
