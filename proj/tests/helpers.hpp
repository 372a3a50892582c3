#ifndef ATE_TEST_HELPERS_HPP
#define ATE_TEST_HELPERS_HPP

#include <string>
#include <vector>

#include "ate/dataset.hpp"
#include "ate/rng.hpp"
#include "ate/sim.hpp"

namespace testutil {

// Assemble a StudyData directly from columns.
inline ate::StudyData make_data(const std::vector<double>& y, const std::vector<int>& t,
                                const std::vector<std::string>& cov_names,
                                const std::vector<std::vector<double>>& cov_cols,
                                const std::vector<double>& w = {}) {
    ate::StudyData d;
    int n = static_cast<int>(y.size());
    d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    d.t = t;
    if (w.empty()) {
        d.w = Eigen::VectorXd::Ones(n);
    } else {
        d.w = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    }
    d.cov_names = cov_names;
    d.cov.resize(n, static_cast<int>(cov_cols.size()));
    for (size_t j = 0; j < cov_cols.size(); ++j) {
        d.cov.col(static_cast<int>(j)) =
            Eigen::Map<const Eigen::VectorXd>(cov_cols[j].data(), n);
    }
    return d;
}

// Synthetic covariate panel shaped like the schools application: two binary
// background indicators, three standardized scales, one binary location flag.
inline std::vector<ate::CovariateSpec> school_covariates() {
    return {
        {"GEN", true, 0.53, 0.0, 1.0},  {"ME", true, 0.61, 0.0, 1.0},
        {"SEI", false, 0.5, 0.0, 1.0},  {"HER", false, 0.5, 0.0, 1.0},
        {"SES", false, 0.5, 0.0, 1.0},  {"S.loc", true, 0.40, 0.0, 1.0},
    };
}

inline std::vector<std::string> school_x() { return {"GEN", "ME", "SEI", "HER", "SES"}; }
inline std::vector<std::string> school_v() {
    return {"GEN", "SEI", "HER", "SES", "S.loc"};
}

// Fitted private-school model (group 1) used as a generating truth.
inline ate::GroupModel school_group1() {
    ate::GroupModel m;
    m.pop.beta0 = 6.09;
    m.pop.beta = Eigen::VectorXd(5);
    m.pop.beta << -0.20, 0.18, 0.16, 0.39, 0.21;  // GEN ME SEI HER SES
    m.pop.sigma = 0.83;
    m.assign.gamma0 = -2.95;
    m.assign.delta = 0.49;
    m.assign.gamma = Eigen::VectorXd(5);
    m.assign.gamma << 0.77, -0.12, 3.16, 0.09, 1.13;  // GEN SEI HER SES S.loc
    return m;
}

// Fitted public-school model (group 0).
inline ate::GroupModel school_group0() {
    ate::GroupModel m;
    m.pop.beta0 = 6.89;
    m.pop.beta = Eigen::VectorXd(5);
    m.pop.beta << 0.17, 0.11, 0.16, 1.35, 0.30;
    m.pop.sigma = 1.10;
    m.assign.gamma0 = 13.88;
    m.assign.delta = -2.02;
    m.assign.gamma = Eigen::VectorXd(5);
    m.assign.gamma << -0.76, 0.40, -2.57, 0.27, -1.63;
    return m;
}

inline ate::GeneratorSpec school_spec(std::uint64_t seed, int n = 1938) {
    ate::GeneratorSpec spec;
    spec.synthetic = school_covariates();
    spec.x_names = school_x();
    spec.v_names = school_v();
    spec.g1 = school_group1();
    spec.g0 = school_group0();
    spec.n_population = n;
    spec.seed = seed;
    return spec;
}

}  // namespace testutil

#endif
