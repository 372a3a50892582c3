#ifndef ATE_GOF_HPP
#define ATE_GOF_HPP

#include <cstdint>
#include <vector>

#include "ate/dataset.hpp"
#include "ate/sample_model.hpp"

namespace ate {

struct GofReport {
    int group = 1;
    double ks = 0.0, cm = 0.0, ad = 0.0;
    double p_ks = 1.0, p_cm = 1.0, p_ad = 1.0;
    int replicates = 0;  // successful replicates entering the p-values
    int failures = 0;
    double rep_size_mean = 0.0;
    double rep_size_sd = 0.0;
};

// Probability integral transform under the fitted sample cdf: u_i = F_S(y_i | z_i)
// for the in-group units, clamped to (1e-12, 1 - 1e-12).
Eigen::VectorXd pit_transform(const StudyData& data, int group,
                              const SampleModelFit& fit);

// Empirical-cdf discrepancy at the order statistics: max_i |i/n - u_(i)|.
double ks_stat(const Eigen::VectorXd& u);

// 1/(12n) + sum [u_(i) - (2i-1)/(2n)]^2
double cm_stat(const Eigen::VectorXd& u);

// -n - (1/n) sum [(2i-1) ln u_(i) + (2n+1-2i) ln(1-u_(i))]
double ad_stat(const Eigen::VectorXd& u);

struct GofOptions {
    int B = 250;
    std::uint64_t seed = 1;
    int threads = 0;
    bool collect_replicates = false;
};

struct GofReplicateStats {
    std::vector<double> ks, cm, ad;  // per successful replicate
    std::vector<int> sizes;
};

// Parametric bootstrap calibration for one group: redraw responses from the
// fitted population model at the observed covariates, reselect units with the
// fitted assignment rule (replicate group sizes vary), refit warm-started from
// the original optimum, recompute the statistics. p = (1 + #{rep >= obs})/(B+1)
// over successful replicates; more than 10% failures is an error.
GofReport bootstrap_pvalues_group(const StudyData& data, const SampleModelFit& fit,
                                  const GofOptions& opts,
                                  GofReplicateStats* replicate_stats = nullptr);

// Both groups with one options block; seeds are keyed per group internally.
std::pair<GofReport, GofReport> bootstrap_pvalues(const StudyData& data,
                                                  const SampleModelFit& fit1,
                                                  const SampleModelFit& fit0,
                                                  const GofOptions& opts);

}  // namespace ate

#endif
