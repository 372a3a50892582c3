#ifndef ATE_SI_ESTIMATORS_HPP
#define ATE_SI_ESTIMATORS_HPP

#include <cstdint>

#include "ate/dataset.hpp"
#include "ate/glm.hpp"
#include "ate/report.hpp"

namespace ate {

// Pr(T = 1 | z) fitted on z = x union v. Predictions live in (eps, 1-eps).
struct PropensityModel {
    FitResult fit;
    Link link = Link::Logit;
    std::vector<std::string> names;

    Eigen::VectorXd predict(const StudyData& data) const;
};

PropensityModel fit_propensity(const StudyData& data, bool weighted,
                               Link link = Link::Logit);

// Crude difference of group means; two-sample variance, Hajek-linearized
// when weighted.
AteReport ate_difference(const StudyData& data, bool weighted);

// Per-group least squares on (1, x); tau = xbar'(b1 - b0) with xbar the
// (weighted) full-sample covariate mean. Delta-method se treats xbar fixed.
AteReport ate_regression(const StudyData& data, bool weighted);

struct MatchOptions {
    int m = 4;
    int se_replicates = 200;  // 0 skips the bootstrap se
    std::uint64_t seed = 1;
};

// Nearest-neighbor imputation with replacement, Euclidean distance on the x
// covariates, ties broken by lowest row index. Bootstrap se resamples units
// within treatment groups.
AteReport ate_matching(const StudyData& data, const MatchOptions& opts, bool weighted);

AteReport ate_brewer_hajek(const StudyData& data, const PropensityModel& prop,
                           bool weighted);

AteReport ate_doubly_robust(const StudyData& data, const PropensityModel& prop,
                            bool weighted);

}  // namespace ate

#endif
