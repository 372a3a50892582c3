#ifndef ATE_RUNNER_HPP
#define ATE_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ate/dataset.hpp"
#include "ate/report.hpp"
#include "ate/sim.hpp"

namespace ate {

struct SimulationConfig {
    std::string kind = "recovery";  // recovery | power
    GeneratorSpec generator;
    int replicates = 100;
    std::vector<std::pair<std::string, ResidualSpec>> distributions;
    std::vector<double> levels = {0.10, 0.05, 0.025, 0.01};
    int gof_B = 99;
};

struct RunConfig {
    std::string data_path;
    CsvSchema schema;
    std::vector<std::string> x_names, v_names;
    std::string instrument;
    bool auto_standardize = true;
    std::vector<Method> estimators;
    bool weighted = false;
    bool compare_weighted = false;
    int matching_m = 4;
    int quadrature_nodes = 40;
    int bootstrap_B = 250;
    int se_replicates = 200;
    bool gof_collect_replicates = false;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int threads = 0;
    std::optional<SimulationConfig> simulation;

    std::string raw;  // original config text, echoed into the manifest
};

RunConfig load_config(const std::string& path);

// Loads, validates, optionally standardizes, and attaches covariate roles.
StudyData load_study(const RunConfig& config);

AteReport run_estimator(const StudyData& data, Method method, const RunConfig& config,
                        bool weighted);

struct WeightedCompareRow {
    Method method;
    AteReport unweighted;
    AteReport weighted;
};

std::vector<WeightedCompareRow> compare_weighted(const StudyData& data,
                                                 const RunConfig& config);

// Executes one subcommand (estimate | gof | simulate | power), writes the
// report bundle plus a manifest under config.out_dir. Returns a process exit
// code; failures are also recorded in the manifest.
int run(const RunConfig& config, const std::string& command);

}  // namespace ate

#endif
