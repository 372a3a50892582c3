#ifndef ATE_SIM_HPP
#define ATE_SIM_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ate/dataset.hpp"
#include "ate/rng.hpp"
#include "ate/sample_model.hpp"

namespace ate {

// Azzalini-Capitanio skew-t parameters; nu = infinity gives the skew normal,
// (0, 1, 0, inf) the standard normal.
struct SkewT {
    double xi = 0.0;
    double w = 1.0;
    double alpha = 0.0;
    double nu = std::numeric_limits<double>::infinity();
};

double skew_t_draw(Rng& rng, const SkewT& st);
Eigen::VectorXd skew_t_sample(double xi, double w, double alpha, double nu, int n,
                              std::uint64_t seed);

// normal => residual is sigma_t * N(0,1); otherwise the skew-t draw replaces
// the whole residual (its own scale, sigma_t unused).
struct ResidualSpec {
    bool normal = true;
    SkewT skew;
};

struct CovariateSpec {
    std::string name;
    bool binary = false;
    double p = 0.5;  // Bernoulli probability when binary
    double mean = 0.0;
    double sd = 1.0;
};

struct GroupModel {
    PopulationParams pop;
    AssignmentParams assign;
};

// How the observed response of non-selected (group 0) units is drawn in the
// partitioned generator: from the population model, or from the group-0
// observed-data law (the assignment-reweighted density).
enum class ControlDraw { Population, SampleLaw };

struct GeneratorSpec {
    const StudyData* resample_from = nullptr;  // row resampling when set
    std::vector<CovariateSpec> synthetic;      // used otherwise
    std::vector<std::string> x_names, v_names;
    GroupModel g1, g0;
    ResidualSpec residual;
    int n_population = 1938;
    ControlDraw control_draw = ControlDraw::Population;
    std::uint64_t seed = 1;
};

struct Panel {
    std::vector<std::string> names;
    Eigen::MatrixXd cov;
};

// Covariate rows for one replicate; draws are keyed by (seed, replicate, unit).
Panel make_panel(const GeneratorSpec& spec, std::uint64_t replicate);

struct GeneratedStudy {
    StudyData data;
    double mu1_true = 0.0;
    double mu0_true = 0.0;
    double tau_true = 0.0;
    Eigen::VectorXd y1_all, y0_all;  // potential outcomes, counterfactual bookkeeping
};

// Partitioned dataset: both potential outcomes drawn, assignment by the
// group-1 rule on Y1, non-selected units labeled group 0. Attached truth is
// computed from the realized covariate rows.
GeneratedStudy generate_study(const GeneratorSpec& spec, std::uint64_t replicate = 0);

// One group's selection scheme on a shared panel: every unit gets a fresh
// Y_group; units enter S_group with the fitted-rule probability, the rest are
// labeled as the other group (response kept for bookkeeping only).
StudyData generate_group_study(const GeneratorSpec& spec, const Panel& panel, int group,
                               std::uint64_t replicate);

struct PowerConfig {
    GeneratorSpec base;  // residual field is overridden per distribution
    std::vector<std::pair<std::string, ResidualSpec>> distributions;
    std::vector<double> levels = {0.10, 0.05, 0.025, 0.01};
    int replicates = 100;
    int B = 99;
    std::uint64_t seed = 1;
    int threads = 0;
    int mle_nodes = 40;
};

struct PowerRejectionRow {
    std::string distribution;
    int group = 1;
    std::string statistic;
    double level = 0.0;
    double rejection_rate = 0.0;
};

struct PowerEstimateRow {
    std::string distribution;
    std::string estimator;
    double mean = 0.0;
    double se = 0.0;  // sd of the estimate across replicates
};

struct PowerResult {
    std::vector<PowerRejectionRow> rejections;
    std::vector<PowerEstimateRow> estimates;
    int fit_failures = 0;
};

// Per-group generation, misspecified normal/logistic refits, bootstrap-
// calibrated rejection rates, and the usual estimator summaries.
PowerResult power_study(const PowerConfig& config);

}  // namespace ate

#endif
