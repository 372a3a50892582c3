#include "ate/si_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ate/errors.hpp"
#include "ate/rng.hpp"

namespace ate {

namespace {

Eigen::VectorXd unit_weights(const StudyData& data, bool weighted) {
    if (weighted) return data.w;
    return Eigen::VectorXd::Ones(data.n());
}

void require_both_groups(const StudyData& data) {
    int n1 = data.n_group(1);
    if (n1 == 0 || n1 == data.n()) {
        throw ValidationError("both treatment groups must be non-empty");
    }
}

// Hajek mean and its linearized variance within one group.
void group_mean_var(const StudyData& data, int group, bool weighted, double& mean,
                    double& var) {
    double sw = 0.0, sy = 0.0;
    int n = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (data.t[i] != group) continue;
        double wi = weighted ? data.w[i] : 1.0;
        sw += wi;
        sy += wi * data.y[i];
        ++n;
    }
    mean = sy / sw;
    double ss = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        if (data.t[i] != group) continue;
        double wi = weighted ? data.w[i] : 1.0;
        double d = (wi / sw) * (data.y[i] - mean);
        ss += d * d;
    }
    var = n > 1 ? ss * n / (n - 1.0) : 0.0;
}

Eigen::VectorXd xbar_with_intercept(const StudyData& data, bool weighted) {
    const auto& names = data.x_names;
    Eigen::VectorXd xbar(1 + static_cast<int>(names.size()));
    xbar[0] = 1.0;
    double sw = weighted ? data.w.sum() : static_cast<double>(data.n());
    for (int j = 0; j < static_cast<int>(names.size()); ++j) {
        Eigen::VectorXd col = data.column(names[j]);
        xbar[j + 1] = weighted ? data.w.dot(col) / sw : col.mean();
    }
    return xbar;
}

struct GroupFits {
    FitResult fit1, fit0;
};

GroupFits per_group_wls(const StudyData& data, bool weighted) {
    data.require_roles();
    auto [g1, g0] = split_groups(data);
    if (g1.n() == 0 || g0.n() == 0) {
        throw ValidationError("both treatment groups must be non-empty");
    }
    GroupFits out;
    Eigen::VectorXd w1 = weighted ? g1.w() : Eigen::VectorXd::Ones(g1.n());
    Eigen::VectorXd w0 = weighted ? g0.w() : Eigen::VectorXd::Ones(g0.n());
    out.fit1 = fit_wls(g1.design(data.x_names), g1.y(), w1, data.x_names);
    out.fit0 = fit_wls(g0.design(data.x_names), g0.y(), w0, data.x_names);
    return out;
}

}  // namespace

Eigen::VectorXd PropensityModel::predict(const StudyData& data) const {
    return predict_prob(fit, data.design(names), link);
}

PropensityModel fit_propensity(const StudyData& data, bool weighted, Link link) {
    data.require_roles();
    PropensityModel model;
    model.link = link;
    model.names = data.z_names();
    Eigen::MatrixXd Z = data.design(model.names);
    Eigen::VectorXd w = unit_weights(data, weighted);
    model.fit = link == Link::Logit ? fit_logit(Z, data.t, w, model.names)
                                    : fit_probit(Z, data.t, w, model.names);
    return model;
}

AteReport ate_difference(const StudyData& data, bool weighted) {
    require_both_groups(data);
    double mu1, mu0, v1, v0;
    group_mean_var(data, 1, weighted, mu1, v1);
    group_mean_var(data, 0, weighted, mu0, v0);
    return make_report(Method::Diff, mu1, mu0, std::sqrt(v1 + v0), weighted);
}

AteReport ate_regression(const StudyData& data, bool weighted) {
    GroupFits fits = per_group_wls(data, weighted);
    Eigen::VectorXd xbar = xbar_with_intercept(data, weighted);
    double mu1 = xbar.dot(fits.fit1.coefficients);
    double mu0 = xbar.dot(fits.fit0.coefficients);
    double var = xbar.dot((fits.fit1.covariance + fits.fit0.covariance) * xbar);
    AteReport rep = make_report(Method::OLS, mu1, mu0, std::sqrt(std::max(var, 0.0)),
                                weighted);
    rep.details["sigma1"] = fits.fit1.scale;
    rep.details["sigma0"] = fits.fit0.scale;
    return rep;
}

namespace {

// Mean response of the m nearest opposite-group rows. Candidates are ordered
// by (distance, row index), so distance ties go to the lowest row index.
double knn_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<int>& pool, const Eigen::RowVectorXd& query, int m) {
    std::vector<std::pair<double, int>> d;
    d.reserve(pool.size());
    for (int idx : pool) {
        d.emplace_back((X.row(idx) - query).squaredNorm(), idx);
    }
    if (m < static_cast<int>(d.size())) {
        std::nth_element(d.begin(), d.begin() + (m - 1), d.end());
    }
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += y[d[k].second];
    return s / m;
}

double matching_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, const std::vector<int>& t,
                      const std::vector<int>& idx1, const std::vector<int>& idx0, int m,
                      double* mu1_out, double* mu0_out) {
    const int n = static_cast<int>(t.size());
    double sw = 0.0, s1 = 0.0, s0 = 0.0;
    for (int i = 0; i < n; ++i) {
        double y1 = t[i] == 1 ? y[i] : knn_mean(X, y, idx1, X.row(i), m);
        double y0 = t[i] == 0 ? y[i] : knn_mean(X, y, idx0, X.row(i), m);
        sw += w[i];
        s1 += w[i] * y1;
        s0 += w[i] * y0;
    }
    if (mu1_out) *mu1_out = s1 / sw;
    if (mu0_out) *mu0_out = s0 / sw;
    return (s1 - s0) / sw;
}

}  // namespace

AteReport ate_matching(const StudyData& data, const MatchOptions& opts, bool weighted) {
    data.require_roles();
    if (opts.m < 1) throw ValidationError("matching requires m >= 1");
    auto [g1, g0] = split_groups(data);
    if (g1.n() < opts.m || g0.n() < opts.m) {
        throw ValidationError("insufficient group size for m = " +
                              std::to_string(opts.m) + " matches");
    }
    Eigen::MatrixXd X = data.columns(data.x_names);
    Eigen::VectorXd w = unit_weights(data, weighted);

    double mu1, mu0;
    matching_point(X, data.y, w, data.t, g1.indices, g0.indices, opts.m, &mu1, &mu0);

    double se = 0.0;
    if (opts.se_replicates > 0) {
        std::vector<double> taus(opts.se_replicates);
        const int n = data.n();
        for (int b = 0; b < opts.se_replicates; ++b) {
            Rng rng = Rng::keyed(opts.seed, 0x4d415443u, b);
            Eigen::MatrixXd Xb(n, X.cols());
            Eigen::VectorXd yb(n), wb(n);
            std::vector<int> tb(n);
            std::vector<int> i1, i0;
            int row = 0;
            for (const auto* g : {&g1, &g0}) {
                for (int k = 0; k < g->n(); ++k) {
                    int src = g->indices[rng.uniform_int(g->n())];
                    Xb.row(row) = X.row(src);
                    yb[row] = data.y[src];
                    wb[row] = w[src];
                    tb[row] = data.t[src];
                    (g->group == 1 ? i1 : i0).push_back(row);
                    ++row;
                }
            }
            taus[b] = matching_point(Xb, yb, wb, tb, i1, i0, opts.m, nullptr, nullptr);
        }
        double mean = std::accumulate(taus.begin(), taus.end(), 0.0) / taus.size();
        double ss = 0.0;
        for (double v : taus) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / (taus.size() - 1));
    }

    AteReport rep = make_report(Method::Match, mu1, mu0, se, weighted);
    rep.details["m"] = opts.m;
    rep.details["se_replicates"] = opts.se_replicates;
    if (opts.se_replicates == 0) rep.notes.push_back("bootstrap se skipped");
    return rep;
}

namespace {

void check_propensity(const Eigen::VectorXd& e) {
    double best = 0.0;
    for (int i = 0; i < e.size(); ++i) {
        best = std::max(best, std::min(e[i], 1.0 - e[i]));
    }
    if (best < 1e-8) {
        throw ValidationError("degenerate propensity scores (all at 0 or 1)");
    }
}

}  // namespace

AteReport ate_brewer_hajek(const StudyData& data, const PropensityModel& prop,
                           bool weighted) {
    require_both_groups(data);
    Eigen::VectorXd e = prop.predict(data);
    check_propensity(e);
    const int n = data.n();
    Eigen::VectorXd w = unit_weights(data, weighted);

    double A = 0.0, Ay = 0.0, B = 0.0, By = 0.0;
    for (int i = 0; i < n; ++i) {
        if (data.t[i] == 1) {
            double a = w[i] / e[i];
            A += a;
            Ay += a * data.y[i];
        } else {
            double b = w[i] / (1.0 - e[i]);
            B += b;
            By += b * data.y[i];
        }
    }
    double mu1 = Ay / A;
    double mu0 = By / B;

    double V = 0.0;
    for (int i = 0; i < n; ++i) {
        double phi = data.t[i] == 1 ? w[i] * (data.y[i] - mu1) / (e[i] * A)
                                    : -w[i] * (data.y[i] - mu0) / ((1.0 - e[i]) * B);
        V += phi * phi;
    }

    AteReport rep = make_report(Method::BH, mu1, mu0, std::sqrt(V), weighted);
    rep.details["e_min"] = e.minCoeff();
    rep.details["e_max"] = e.maxCoeff();
    return rep;
}

AteReport ate_doubly_robust(const StudyData& data, const PropensityModel& prop,
                            bool weighted) {
    require_both_groups(data);
    Eigen::VectorXd e = prop.predict(data);
    check_propensity(e);
    GroupFits fits = per_group_wls(data, weighted);
    Eigen::MatrixXd X = data.x_design();
    Eigen::VectorXd r1 = X * fits.fit1.coefficients;
    Eigen::VectorXd r0 = X * fits.fit0.coefficients;
    Eigen::VectorXd w = unit_weights(data, weighted);

    const int n = data.n();
    double sw = w.sum();
    Eigen::VectorXd phi(n);
    double m1 = 0.0, m0 = 0.0;
    for (int i = 0; i < n; ++i) {
        double Ti = data.t[i];
        double a = (Ti * data.y[i] - (Ti - e[i]) * r1[i]) / e[i];
        double b = ((1.0 - Ti) * data.y[i] + (Ti - e[i]) * r0[i]) / (1.0 - e[i]);
        phi[i] = a - b;
        m1 += w[i] * a;
        m0 += w[i] * b;
    }
    double mu1 = m1 / sw;
    double mu0 = m0 / sw;
    double tau = mu1 - mu0;
    double V = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = w[i] * (phi[i] - tau) / sw;
        V += d * d;
    }

    AteReport rep = make_report(Method::DR, mu1, mu0, std::sqrt(V), weighted);
    rep.details["e_min"] = e.minCoeff();
    rep.details["e_max"] = e.maxCoeff();
    return rep;
}

}  // namespace ate
