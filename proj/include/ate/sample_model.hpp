#ifndef ATE_SAMPLE_MODEL_HPP
#define ATE_SAMPLE_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ate/dataset.hpp"
#include "ate/report.hpp"

namespace ate {

// Normal population model for one treatment group: Y | x ~ N(beta0 + x'beta, sigma^2).
struct PopulationParams {
    double beta0 = 0.0;
    Eigen::VectorXd beta;
    double sigma = 1.0;
};

// Logistic assignment rule: Pr(T = t | y, v) = logistic(gamma0 + delta y + v'gamma).
// Each group carries its own parameter set.
struct AssignmentParams {
    double gamma0 = 0.0;
    double delta = 0.0;
    Eigen::VectorXd gamma;
};

struct SampleModelFit {
    int group = 1;
    PopulationParams pop;
    AssignmentParams assign;
    Eigen::MatrixXd covariance;  // joint (theta, alpha) from observed information
    bool covariance_valid = false;
    double loglik = 0.0;
    int quadrature = 40;
    bool converged = false;
    int iterations = 0;
    bool weighted = false;
    std::vector<std::string> param_names;

    // packed parameter vector (beta0, beta, log sigma, gamma0, delta, gamma)
    Eigen::VectorXd packed() const;
    Eigen::VectorXd se() const;  // NaN entries when covariance is unavailable
};

double assignment_prob(double y, const Eigen::VectorXd& v, const AssignmentParams& a);

// Pr(T = t | z) = E[ logistic(gamma0 + delta Y + v'gamma) ], Y ~ N(beta0 + x'beta,
// sigma^2), by Gauss-Hermite quadrature.
double unconditional_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          const PopulationParams& p, const AssignmentParams& a,
                          int nodes = 40);

// f_S(y | z): the population normal density reweighted by the response-dependent
// assignment probability and renormalized.
double sample_pdf(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                  const PopulationParams& p, const AssignmentParams& a, int nodes = 40);

// Joint likelihood of the in-group responses and the whole sample's assignment
// indicators. Group t = 0 uses its own parameter set with Pr(T = 0 | y, v)
// modeled directly as the logistic above.
double full_loglik(const StudyData& data, int group, const PopulationParams& p,
                   const AssignmentParams& a, int nodes = 40, bool weighted = false);

// Gradient in the packed parameterization (beta0, beta, log sigma, gamma0,
// delta, gamma).
Eigen::VectorXd full_loglik_gradient(const StudyData& data, int group,
                                     const PopulationParams& p,
                                     const AssignmentParams& a, int nodes = 40,
                                     bool weighted = false);

// In-group-only likelihood (the conditional form); diagnostic, not a fitting
// target.
double conditional_loglik(const StudyData& data, int group, const PopulationParams& p,
                          const AssignmentParams& a, int nodes = 40,
                          bool weighted = false);

struct MleOptions {
    int nodes = 40;
    int max_iterations = 400;
    double grad_tol = 1e-6;
    bool weighted = false;
    bool compute_covariance = true;
    bool multi_start = true;  // off means init (or the default start) only
    std::optional<Eigen::VectorXd> init;
};

// Quasi-Newton maximization of the full likelihood over (beta0, beta, log sigma,
// gamma0, delta, gamma) with analytic gradient. Three starts by default: the
// per-group least-squares / membership-logit start with delta in {0, +0.5, -0.5}.
SampleModelFit fit_mle(const StudyData& data, int group, const MleOptions& opts = {});

// Population-mean estimators built on the fitted group model.
std::pair<double, double> mean_pop(const SampleModelFit& fit,
                                   const Eigen::VectorXd& xbar_population);

std::pair<double, double> mean_sample(const SampleModelFit& fit, const StudyData& data,
                                      bool weighted = false);

struct CombinedOptions {
    int se_replicates = 200;  // 0 skips the bootstrap se
    std::uint64_t seed = 1;
    int nodes = 40;
    bool weighted = false;
    int threads = 0;
};

// GREG-style combined estimator; se by nonparametric bootstrap with warm-start
// refits.
std::pair<double, double> mean_combined(const SampleModelFit& fit, const StudyData& data,
                                        const CombinedOptions& opts = {});

struct SampleMleResult {
    SampleModelFit fit1;
    SampleModelFit fit0;
    AteReport regression_form;  // SampleMLE-S
    AteReport combined_form;    // SampleMLE-C
};

// Fits both groups and assembles the two ATE reports.
SampleMleResult run_sample_mle(const StudyData& data, const MleOptions& mle_opts = {},
                               const CombinedOptions& comb_opts = {});

}  // namespace ate

#endif
