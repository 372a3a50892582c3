#ifndef ATE_DATASET_HPP
#define ATE_DATASET_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ate {

struct Observation {
    double y = 0.0;
    int t = 0;
    double w = 1.0;
    std::map<std::string, double> covariates;
};

// Column-role mapping for CSV ingestion. An empty weight name means the file
// carries no weight column and every unit gets w = 1.
struct CsvSchema {
    std::string y = "y";
    std::string t = "t";
    std::string w;
    std::vector<std::string> covariates;
};

// Immutable after construction/setup; estimators only read it, so concurrent
// use from parallel bootstrap replicates is safe.
class StudyData {
public:
    Eigen::VectorXd y;
    Eigen::VectorXd w;
    std::vector<int> t;
    std::vector<std::string> cov_names;
    Eigen::MatrixXd cov;  // n x p, column j holds cov_names[j]

    std::vector<std::string> x_names;  // outcome-model covariates
    std::vector<std::string> v_names;  // assignment-model covariates
    std::map<std::string, std::pair<double, double>> standardization;

    std::string y_name = "y", t_name = "t", w_name = "w";

    int n() const { return static_cast<int>(y.size()); }
    int n_group(int group) const;

    bool has_covariate(const std::string& name) const;
    int cov_index(const std::string& name) const;  // throws SchemaError
    Eigen::VectorXd column(const std::string& name) const;

    // [1 | named columns], in the given order
    Eigen::MatrixXd design(const std::vector<std::string>& names) const;
    Eigen::MatrixXd x_design() const { return design(x_names); }
    Eigen::MatrixXd v_design() const { return design(v_names); }

    // x union v, x order first then v-only names
    std::vector<std::string> z_names() const;

    // Covariate submatrix without intercept
    Eigen::MatrixXd columns(const std::vector<std::string>& names) const;

    void set_roles(std::vector<std::string> x, std::vector<std::string> v);
    void require_roles() const;

    Observation observation(int i) const;
};

struct GroupView {
    const StudyData* parent = nullptr;
    int group = 0;
    std::vector<int> indices;

    int n() const { return static_cast<int>(indices.size()); }
    Eigen::VectorXd y() const;
    Eigen::VectorXd w() const;
    Eigen::MatrixXd design(const std::vector<std::string>& names) const;
    Eigen::MatrixXd columns(const std::vector<std::string>& names) const;
};

StudyData load_csv(const std::string& path, const CsvSchema& schema);
void write_csv(const StudyData& data, const std::string& path);

// (value - mean)/sd for each named covariate; binary columns (values in
// {0,1}) are skipped, zero-spread columns are rejected. An empty name list
// means all covariates.
StudyData standardize(const StudyData& data, const std::vector<std::string>& names = {});

std::vector<std::pair<std::string, double>> covariate_means(const StudyData& data,
                                                            bool weighted);

std::pair<GroupView, GroupView> split_groups(const StudyData& data);

}  // namespace ate

#endif
