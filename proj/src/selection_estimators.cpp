#include "ate/selection_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ate/errors.hpp"
#include "ate/numerics.hpp"

namespace ate {

namespace {

Eigen::VectorXd unit_weights(const StudyData& data, bool weighted) {
    if (weighted) return data.w;
    return Eigen::VectorXd::Ones(data.n());
}

Eigen::VectorXd xbar_with_intercept(const StudyData& data, bool weighted) {
    Eigen::VectorXd xbar(1 + static_cast<int>(data.x_names.size()));
    xbar[0] = 1.0;
    double sw = weighted ? data.w.sum() : static_cast<double>(data.n());
    for (int j = 0; j < static_cast<int>(data.x_names.size()); ++j) {
        Eigen::VectorXd col = data.column(data.x_names[j]);
        xbar[j + 1] = weighted ? data.w.dot(col) / sw : col.mean();
    }
    return xbar;
}

constexpr double kMillsIndexBound = 8.0;

}  // namespace

HeckmanFit heckman_two_stage(const StudyData& data, bool weighted) {
    data.require_roles();
    HeckmanFit out;
    Eigen::VectorXd w = unit_weights(data, weighted);

    Eigen::MatrixXd V = data.v_design();
    out.selection_fit = fit_probit(V, data.t, w, data.v_names);

    Eigen::VectorXd eta = V * out.selection_fit.coefficients;
    out.mills.resize(data.n());
    for (int i = 0; i < data.n(); ++i) {
        double e = std::clamp(eta[i], -kMillsIndexBound, kMillsIndexBound);
        out.mills[i] = data.t[i] == 1 ? inverse_mills_upper(e) : inverse_mills_lower(e);
    }

    const int k = 1 + static_cast<int>(data.x_names.size());
    std::vector<std::string> stage2_names = data.x_names;
    stage2_names.push_back("mills");
    auto [g1, g0] = split_groups(data);
    if (g1.n() == 0 || g0.n() == 0) {
        throw ValidationError("both treatment groups must be non-empty");
    }
    for (const auto* g : {&g1, &g0}) {
        Eigen::MatrixXd X(g->n(), k + 1);
        Eigen::VectorXd y(g->n()), wg(g->n());
        Eigen::MatrixXd base = g->design(data.x_names);
        for (int i = 0; i < g->n(); ++i) {
            X.row(i).head(k) = base.row(i);
            X(i, k) = out.mills[g->indices[i]];
            y[i] = data.y[g->indices[i]];
            wg[i] = w[g->indices[i]];
        }
        FitResult fit = fit_wls(X, y, wg, stage2_names);
        if (g->group == 1) {
            out.outcome_fit1 = fit;
            out.beta_lv1 = fit.coefficients.head(k);
        } else {
            out.outcome_fit0 = fit;
            out.beta_lv0 = fit.coefficients.head(k);
        }
    }
    return out;
}

AteReport ate_heckman_lv(const StudyData& data, bool weighted) {
    HeckmanFit hf = heckman_two_stage(data, weighted);
    const int k = static_cast<int>(hf.beta_lv1.size());

    Eigen::VectorXd xbar = xbar_with_intercept(data, weighted);
    double mu1 = xbar.dot(hf.beta_lv1);
    double mu0 = xbar.dot(hf.beta_lv0);

    Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 1);
    c.head(k) = xbar;
    double var = c.dot((hf.outcome_fit1.covariance + hf.outcome_fit0.covariance) * c);

    AteReport rep = make_report(Method::LV, mu1, mu0, std::sqrt(std::max(var, 0.0)),
                                weighted);
    rep.details["mills_coef1"] = hf.outcome_fit1.coefficients[k];
    rep.details["mills_coef0"] = hf.outcome_fit0.coefficients[k];
    if (std::set<std::string>(data.x_names.begin(), data.x_names.end()) ==
        std::set<std::string>(data.v_names.begin(), data.v_names.end())) {
        rep.notes.push_back(
            "assignment covariates v identical to outcome covariates x; "
            "identification rests on the normal-link curvature only");
    }
    return rep;
}

IvDesign build_iv_design(const StudyData& data, const std::string& instrument,
                         bool weighted, Link link) {
    data.require_roles();
    if (std::find(data.x_names.begin(), data.x_names.end(), instrument) !=
        data.x_names.end()) {
        throw ValidationError("instrument '" + instrument +
                              "' must be excluded from the outcome covariates");
    }
    Eigen::VectorXd w = unit_weights(data, weighted);

    std::vector<std::string> assign_names = data.x_names;
    assign_names.push_back(instrument);
    Eigen::MatrixXd G = data.design(assign_names);
    FitResult gfit = link == Link::Logit ? fit_logit(G, data.t, w, assign_names)
                                         : fit_probit(G, data.t, w, assign_names);

    IvDesign design;
    design.instrument = instrument;
    design.g_hat = predict_prob(gfit, G, link);

    const int n = data.n();
    const int k = 1 + static_cast<int>(data.x_names.size());
    Eigen::MatrixXd X = data.x_design();
    design.z_hat.resize(n, 2 * k);
    design.x_tilde.resize(n, 2 * k);
    for (int i = 0; i < n; ++i) {
        double g = design.g_hat[i];
        double Ti = data.t[i];
        design.z_hat.row(i).head(k) = g * X.row(i);
        design.z_hat.row(i).tail(k) = (1.0 - g) * X.row(i);
        design.x_tilde.row(i).head(k) = Ti * X.row(i);
        design.x_tilde.row(i).tail(k) = (1.0 - Ti) * X.row(i);
    }

    // instrument z-score for the relevance check; h sits after the x block
    int hj = k;
    design.instrument_z =
        gfit.coefficients[hj] / std::sqrt(gfit.covariance(hj, hj));
    return design;
}

AteReport ate_iv(const StudyData& data, const std::string& instrument, bool weighted,
                 Link link) {
    IvDesign design = build_iv_design(data, instrument, weighted, link);
    Eigen::VectorXd w = unit_weights(data, weighted);
    const int n = data.n();
    const int k = 1 + static_cast<int>(data.x_names.size());
    const int dim = 2 * k;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < n; ++i) {
        A += w[i] * design.z_hat.row(i).transpose() * design.x_tilde.row(i);
        b += w[i] * design.z_hat.row(i).transpose() * data.y[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
        throw SingularDesignError(
            "instrumented moment matrix is singular; the instrument does not move "
            "the assignment probabilities");
    }
    Eigen::VectorXd theta = lu.solve(b);

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < n; ++i) {
        double u = data.y[i] - design.x_tilde.row(i).dot(theta);
        B += (w[i] * u) * (w[i] * u) * design.z_hat.row(i).transpose() *
             design.z_hat.row(i);
    }
    Eigen::MatrixXd Ainv = lu.inverse();
    Eigen::MatrixXd Vtheta = Ainv * B * Ainv.transpose();

    Eigen::VectorXd xbar = xbar_with_intercept(data, weighted);
    Eigen::VectorXd beta1 = theta.head(k);
    Eigen::VectorXd beta0 = theta.tail(k);
    double mu1 = xbar.dot(beta1);
    double mu0 = xbar.dot(beta0);

    Eigen::VectorXd c(dim);
    c.head(k) = xbar;
    c.tail(k) = -xbar;
    double var = c.dot(Vtheta * c);

    AteReport rep = make_report(Method::IV, mu1, mu0, std::sqrt(std::max(var, 0.0)),
                                weighted);
    rep.details["instrument_z"] = design.instrument_z;
    if (std::abs(design.instrument_z) < 1.96) {
        rep.notes.push_back("instrument '" + instrument +
                            "' is weak: |z| = " +
                            std::to_string(std::abs(design.instrument_z)) +
                            " < 1.96 in the assignment model");
    }
    return rep;
}

}  // namespace ate
