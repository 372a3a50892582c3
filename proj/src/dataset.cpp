#include "ate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ate/errors.hpp"

namespace ate {

int StudyData::n_group(int group) const {
    int c = 0;
    for (int ti : t)
        if (ti == group) ++c;
    return c;
}

bool StudyData::has_covariate(const std::string& name) const {
    return std::find(cov_names.begin(), cov_names.end(), name) != cov_names.end();
}

int StudyData::cov_index(const std::string& name) const {
    auto it = std::find(cov_names.begin(), cov_names.end(), name);
    if (it == cov_names.end()) {
        throw SchemaError("unknown covariate '" + name + "'");
    }
    return static_cast<int>(it - cov_names.begin());
}

Eigen::VectorXd StudyData::column(const std::string& name) const {
    return cov.col(cov_index(name));
}

Eigen::MatrixXd StudyData::columns(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(n(), static_cast<int>(names.size()));
    for (int j = 0; j < static_cast<int>(names.size()); ++j) {
        out.col(j) = cov.col(cov_index(names[j]));
    }
    return out;
}

Eigen::MatrixXd StudyData::design(const std::vector<std::string>& names) const {
    Eigen::MatrixXd X(n(), 1 + static_cast<int>(names.size()));
    X.col(0).setOnes();
    for (int j = 0; j < static_cast<int>(names.size()); ++j) {
        X.col(j + 1) = cov.col(cov_index(names[j]));
    }
    return X;
}

std::vector<std::string> StudyData::z_names() const {
    std::vector<std::string> z = x_names;
    for (const auto& name : v_names) {
        if (std::find(z.begin(), z.end(), name) == z.end()) z.push_back(name);
    }
    return z;
}

void StudyData::set_roles(std::vector<std::string> x, std::vector<std::string> v) {
    if (x.empty()) throw SchemaError("x_names must be non-empty");
    if (v.empty()) throw SchemaError("v_names must be non-empty");
    for (const auto& name : x) cov_index(name);
    for (const auto& name : v) cov_index(name);
    x_names = std::move(x);
    v_names = std::move(v);
}

void StudyData::require_roles() const {
    if (x_names.empty() || v_names.empty()) {
        throw SchemaError("covariate roles (x_names, v_names) have not been set");
    }
}

Observation StudyData::observation(int i) const {
    Observation obs;
    obs.y = y[i];
    obs.t = t[i];
    obs.w = w[i];
    for (int j = 0; j < static_cast<int>(cov_names.size()); ++j) {
        obs.covariates[cov_names[j]] = cov(i, j);
    }
    return obs;
}

Eigen::VectorXd GroupView::y() const {
    Eigen::VectorXd out(n());
    for (int i = 0; i < n(); ++i) out[i] = parent->y[indices[i]];
    return out;
}

Eigen::VectorXd GroupView::w() const {
    Eigen::VectorXd out(n());
    for (int i = 0; i < n(); ++i) out[i] = parent->w[indices[i]];
    return out;
}

Eigen::MatrixXd GroupView::design(const std::vector<std::string>& names) const {
    Eigen::MatrixXd full = parent->design(names);
    Eigen::MatrixXd out(n(), full.cols());
    for (int i = 0; i < n(); ++i) out.row(i) = full.row(indices[i]);
    return out;
}

Eigen::MatrixXd GroupView::columns(const std::vector<std::string>& names) const {
    Eigen::MatrixXd full = parent->columns(names);
    Eigen::MatrixXd out(n(), full.cols());
    for (int i = 0; i < n(); ++i) out.row(i) = full.row(indices[i]);
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim spaces and a trailing CR from CRLF files
        size_t b = field.find_first_not_of(" \t\r");
        size_t e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_cell(const std::string& cell, const std::string& col, int row) {
    if (cell.empty() || cell == "NA" || cell == "na" || cell == "NaN") {
        throw ValidationError("missing value in column '" + col + "' at row " +
                              std::to_string(row) + " (missing data are not accepted)");
    }
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
        throw ParseError("non-numeric value '" + cell + "' in column '" + col +
                         "' at row " + std::to_string(row));
    }
    if (!std::isfinite(v)) {
        throw ValidationError("non-finite value in column '" + col + "' at row " +
                              std::to_string(row));
    }
    return v;
}

}  // namespace

StudyData load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError("empty file '" + path + "'");
    std::vector<std::string> header = split_line(header_line);

    auto col_of = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw SchemaError("column '" + name + "' not found in '" + path + "'");
        }
        return static_cast<int>(it - header.begin());
    };

    int y_col = col_of(schema.y);
    int t_col = col_of(schema.t);
    int w_col = schema.w.empty() ? -1 : col_of(schema.w);
    std::vector<int> cov_cols;
    cov_cols.reserve(schema.covariates.size());
    for (const auto& name : schema.covariates) cov_cols.push_back(col_of(name));

    std::vector<double> ys, ws;
    std::vector<int> ts;
    std::vector<std::vector<double>> covs(schema.covariates.size());

    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        }
        ys.push_back(parse_cell(fields[y_col], schema.y, row));

        double tv = parse_cell(fields[t_col], schema.t, row);
        if (tv != 0.0 && tv != 1.0) {
            throw ParseError("treatment indicator must be 0 or 1, got '" +
                             fields[t_col] + "' at row " + std::to_string(row));
        }
        ts.push_back(static_cast<int>(tv));

        double wv = 1.0;
        if (w_col >= 0) {
            wv = parse_cell(fields[w_col], schema.w, row);
            if (wv <= 0.0) {
                throw ValidationError("sampling weight must be positive, got " +
                                      fields[w_col] + " at row " + std::to_string(row));
            }
        }
        ws.push_back(wv);

        for (size_t j = 0; j < cov_cols.size(); ++j) {
            covs[j].push_back(parse_cell(fields[cov_cols[j]], schema.covariates[j], row));
        }
    }

    StudyData data;
    int n = static_cast<int>(ys.size());
    data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    data.w = Eigen::Map<Eigen::VectorXd>(ws.data(), n);
    data.t = std::move(ts);
    data.cov_names = schema.covariates;
    data.cov.resize(n, static_cast<int>(covs.size()));
    for (size_t j = 0; j < covs.size(); ++j) {
        data.cov.col(static_cast<int>(j)) = Eigen::Map<Eigen::VectorXd>(covs[j].data(), n);
    }
    data.y_name = schema.y;
    data.t_name = schema.t;
    data.w_name = schema.w.empty() ? "w" : schema.w;
    return data;
}

void write_csv(const StudyData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << data.y_name << ',' << data.t_name << ',' << data.w_name;
    for (const auto& name : data.cov_names) out << ',' << name;
    out << '\n';
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (int i = 0; i < data.n(); ++i) {
        put(data.y[i]);
        out << ',' << data.t[i] << ',';
        put(data.w[i]);
        for (int j = 0; j < data.cov.cols(); ++j) {
            out << ',';
            put(data.cov(i, j));
        }
        out << '\n';
    }
}

StudyData standardize(const StudyData& data, const std::vector<std::string>& names) {
    StudyData out = data;
    const std::vector<std::string>& wanted = names.empty() ? data.cov_names : names;
    for (const auto& name : wanted) {
        int j = out.cov_index(name);
        Eigen::VectorXd col = out.cov.col(j);

        bool binary = true;
        for (int i = 0; i < col.size(); ++i) {
            if (col[i] != 0.0 && col[i] != 1.0) {
                binary = false;
                break;
            }
        }
        if (binary) continue;

        double mean = col.mean();
        double ss = (col.array() - mean).square().sum();
        int n = static_cast<int>(col.size());
        double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        if (sd <= 0.0) {
            throw ValidationError("covariate '" + name + "' is degenerate (zero spread)");
        }
        out.cov.col(j) = (col.array() - mean) / sd;
        out.standardization[name] = {mean, sd};
    }
    return out;
}

std::vector<std::pair<std::string, double>> covariate_means(const StudyData& data,
                                                            bool weighted) {
    if (data.n() == 0) throw ValidationError("covariate_means: empty data");
    std::vector<std::pair<std::string, double>> out;
    out.reserve(data.cov_names.size());
    double wsum = weighted ? data.w.sum() : static_cast<double>(data.n());
    for (int j = 0; j < static_cast<int>(data.cov_names.size()); ++j) {
        double m;
        if (weighted) {
            m = data.w.dot(data.cov.col(j)) / wsum;
        } else {
            m = data.cov.col(j).mean();
        }
        out.emplace_back(data.cov_names[j], m);
    }
    return out;
}

std::pair<GroupView, GroupView> split_groups(const StudyData& data) {
    GroupView g1{&data, 1, {}};
    GroupView g0{&data, 0, {}};
    for (int i = 0; i < data.n(); ++i) {
        (data.t[i] == 1 ? g1 : g0).indices.push_back(i);
    }
    return {g1, g0};
}

}  // namespace ate
