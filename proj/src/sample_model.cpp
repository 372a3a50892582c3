#include "ate/sample_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ate/errors.hpp"
#include "ate/glm.hpp"
#include "ate/numerics.hpp"
#include "ate/optim.hpp"
#include "ate/parallel.hpp"
#include "ate/rng.hpp"

namespace ate {

namespace {

constexpr double kProbEps = 1e-15;
constexpr double kLog2Pi = 1.8378770664093454836;

double clamp_prob(double p) {
    return std::min(std::max(p, kProbEps), 1.0 - kProbEps);
}

}  // namespace

double assignment_prob(double y, const Eigen::VectorXd& v, const AssignmentParams& a) {
    double eta = a.gamma0 + a.delta * y + a.gamma.dot(v);
    return clamp_prob(logistic(eta));
}

double unconditional_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          const PopulationParams& p, const AssignmentParams& a,
                          int nodes) {
    if (nodes < 10) throw ValidationError("quadrature needs at least 10 nodes");
    const GaussHermiteRule& rule = gauss_hermite(nodes);
    double mu = p.beta0 + p.beta.dot(x);
    double base = a.gamma0 + a.gamma.dot(v);
    const double sqrt2_sigma = 1.4142135623730950488 * p.sigma;
    const double inv_sqrt_pi = 0.56418958354775628695;
    double sum = 0.0;
    for (int k = 0; k < nodes; ++k) {
        double yk = mu + sqrt2_sigma * rule.nodes[k];
        sum += rule.weights[k] * logistic(base + a.delta * yk);
    }
    return clamp_prob(inv_sqrt_pi * sum);
}

double sample_pdf(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                  const PopulationParams& p, const AssignmentParams& a, int nodes) {
    double mu = p.beta0 + p.beta.dot(x);
    double r = (y - mu) / p.sigma;
    double pop = std::exp(-0.5 * (kLog2Pi + r * r)) / p.sigma;
    double num = assignment_prob(y, v, a) * pop;
    return num / unconditional_prob(x, v, p, a, nodes);
}

namespace {

// Precomputed design pieces for one group's full likelihood. "in" rows are the
// group members (response observed), "out" rows contribute only through the
// unconditional assignment probability.
class FullLikelihood {
public:
    FullLikelihood(const StudyData& data, int group, int nodes, bool weighted)
        : nodes_(nodes) {
        data.require_roles();
        p_ = static_cast<int>(data.x_names.size());
        q_ = static_cast<int>(data.v_names.size());
        Eigen::MatrixXd X = data.columns(data.x_names);
        Eigen::MatrixXd V = data.columns(data.v_names);

        int n_in = data.n_group(group);
        int n_out = data.n() - n_in;
        Xin_.resize(n_in, p_);
        Vin_.resize(n_in, q_);
        yin_.resize(n_in);
        win_.resize(n_in);
        rows_in_.resize(n_in);
        Xout_.resize(n_out, p_);
        Vout_.resize(n_out, q_);
        wout_.resize(n_out);
        rows_out_.resize(n_out);
        int a = 0, b = 0;
        for (int i = 0; i < data.n(); ++i) {
            double wi = weighted ? data.w[i] : 1.0;
            if (data.t[i] == group) {
                Xin_.row(a) = X.row(i);
                Vin_.row(a) = V.row(i);
                yin_[a] = data.y[i];
                win_[a] = wi;
                rows_in_[a++] = i;
            } else {
                Xout_.row(b) = X.row(i);
                Vout_.row(b) = V.row(i);
                wout_[b] = wi;
                rows_out_[b++] = i;
            }
        }
    }

    int dim() const { return p_ + q_ + 3; }
    int n_in() const { return static_cast<int>(yin_.size()); }
    int p() const { return p_; }
    int q() const { return q_; }

    Eigen::VectorXd pack(const PopulationParams& pop, const AssignmentParams& as) const {
        Eigen::VectorXd psi(dim());
        psi[0] = pop.beta0;
        psi.segment(1, p_) = pop.beta;
        psi[1 + p_] = std::log(pop.sigma);
        psi[2 + p_] = as.gamma0;
        psi[3 + p_] = as.delta;
        psi.segment(4 + p_, q_) = as.gamma;
        return psi;
    }

    void unpack(const Eigen::VectorXd& psi, PopulationParams* pop,
                AssignmentParams* as) const {
        pop->beta0 = psi[0];
        pop->beta = psi.segment(1, p_);
        pop->sigma = std::exp(psi[1 + p_]);
        as->gamma0 = psi[2 + p_];
        as->delta = psi[3 + p_];
        as->gamma = psi.segment(4 + p_, q_);
    }

    // log-likelihood; fills the packed-space gradient when grad != nullptr
    double eval(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const {
        const double log_sigma = psi[1 + p_];
        if (std::abs(log_sigma) > 20.0) return -std::numeric_limits<double>::infinity();
        PopulationParams pop;
        AssignmentParams as;
        unpack(psi, &pop, &as);
        const double sigma = pop.sigma;
        const double inv_s2 = 1.0 / (sigma * sigma);

        if (grad) grad->setZero(dim());
        double ll = 0.0;

        // in-group rows: log Pr(T | y, v) + log f_p(y | x)
        Eigen::VectorXd mu_in = Eigen::VectorXd::Constant(n_in(), pop.beta0);
        mu_in.noalias() += Xin_ * pop.beta;
        Eigen::VectorXd eta_in = Eigen::VectorXd::Constant(n_in(), as.gamma0);
        eta_in.noalias() += as.delta * yin_ + Vin_ * as.gamma;
        Eigen::VectorXd sres(n_in()), sassign(n_in());
        for (int i = 0; i < n_in(); ++i) {
            double r = yin_[i] - mu_in[i];
            ll += win_[i] * (log_logistic(eta_in[i]) - 0.5 * kLog2Pi - log_sigma -
                             0.5 * r * r * inv_s2);
            sres[i] = win_[i] * r * inv_s2;
            sassign[i] = win_[i] * (1.0 - logistic(eta_in[i]));
        }
        if (grad) {
            (*grad)[0] += sres.sum();
            grad->segment(1, p_).noalias() += Xin_.transpose() * sres;
            double gls = 0.0;
            for (int i = 0; i < n_in(); ++i) {
                double r = yin_[i] - mu_in[i];
                gls += win_[i] * (-1.0 + r * r * inv_s2);
            }
            (*grad)[1 + p_] += gls;
            (*grad)[2 + p_] += sassign.sum();
            (*grad)[3 + p_] += sassign.dot(yin_);
            grad->segment(4 + p_, q_).noalias() += Vin_.transpose() * sassign;
        }

        // out-of-group rows: log[1 - Pr(T | z)]
        const int n_out = static_cast<int>(wout_.size());
        if (n_out > 0) {
            const GaussHermiteRule& rule = gauss_hermite(nodes_);
            const int K = nodes_;
            const double sqrt2_sigma = 1.4142135623730950488 * sigma;
            const double inv_sqrt_pi = 0.56418958354775628695;
            Eigen::VectorXd offsets(K), wk(K);
            for (int k = 0; k < K; ++k) {
                offsets[k] = sqrt2_sigma * rule.nodes[k];
                wk[k] = inv_sqrt_pi * rule.weights[k];
            }
            Eigen::VectorXd mu_out = Eigen::VectorXd::Constant(n_out, pop.beta0);
            mu_out.noalias() += Xout_ * pop.beta;
            Eigen::VectorXd c = Eigen::VectorXd::Constant(n_out, as.gamma0);
            c.noalias() += as.delta * mu_out + Vout_ * as.gamma;

            Eigen::VectorXd tmp0, tmpc;
            if (grad) {
                tmp0.resize(n_out);
                tmpc.resize(n_out);
            }
            for (int j = 0; j < n_out; ++j) {
                double P = 0.0, S0 = 0.0, Sc = 0.0;
                const double cj = c[j];
                if (grad) {
                    for (int k = 0; k < K; ++k) {
                        double pi = logistic(cj + as.delta * offsets[k]);
                        double wpk = wk[k] * pi;
                        P += wpk;
                        double dd = wpk * (1.0 - pi);
                        S0 += dd;
                        Sc += dd * offsets[k];
                    }
                } else {
                    for (int k = 0; k < K; ++k) {
                        P += wk[k] * logistic(cj + as.delta * offsets[k]);
                    }
                }
                P = std::min(P, 1.0 - 1e-12);
                ll += wout_[j] * std::log1p(-P);
                if (!std::isfinite(ll)) {
                    throw Error("non-finite likelihood term at data row " +
                                std::to_string(rows_out_[j]));
                }
                if (grad) {
                    double f = -wout_[j] / (1.0 - P);
                    tmp0[j] = f * S0;
                    tmpc[j] = f * Sc;
                }
            }
            if (grad) {
                double sum0 = tmp0.sum();
                double sumc = tmpc.sum();
                (*grad)[2 + p_] += sum0;
                (*grad)[3 + p_] += sumc + tmp0.dot(mu_out);
                grad->segment(4 + p_, q_).noalias() += Vout_.transpose() * tmp0;
                (*grad)[0] += as.delta * sum0;
                grad->segment(1, p_).noalias() += as.delta * (Xout_.transpose() * tmp0);
                (*grad)[1 + p_] += as.delta * sumc;
            }
        }
        if (!std::isfinite(ll)) {
            throw Error("non-finite likelihood value (in-group rows)");
        }
        return ll;
    }

    std::vector<std::string> param_names(const StudyData& data) const {
        std::vector<std::string> names;
        names.push_back("const.pop");
        for (const auto& nm : data.x_names) names.push_back("pop." + nm);
        names.push_back("sigma");
        names.push_back("const.assign");
        names.push_back("delta");
        for (const auto& nm : data.v_names) names.push_back("assign." + nm);
        return names;
    }

private:
    int p_ = 0, q_ = 0, nodes_ = 40;
    Eigen::MatrixXd Xin_, Vin_, Xout_, Vout_;
    Eigen::VectorXd yin_, win_, wout_;
    std::vector<int> rows_in_, rows_out_;
};

void check_exclusion(const StudyData& data) {
    for (const auto& name : data.x_names) {
        if (std::find(data.v_names.begin(), data.v_names.end(), name) ==
            data.v_names.end()) {
            return;
        }
    }
    throw ValidationError(
        "sample-model fit requires an exclusion restriction: at least one outcome "
        "covariate (x) must be absent from the assignment covariates (v)");
}

}  // namespace

Eigen::VectorXd SampleModelFit::packed() const {
    Eigen::VectorXd psi(pop.beta.size() + assign.gamma.size() + 5);
    psi[0] = pop.beta0;
    psi.segment(1, pop.beta.size()) = pop.beta;
    psi[1 + pop.beta.size()] = std::log(pop.sigma);
    psi[2 + pop.beta.size()] = assign.gamma0;
    psi[3 + pop.beta.size()] = assign.delta;
    psi.segment(4 + pop.beta.size(), assign.gamma.size()) = assign.gamma;
    return psi;
}

Eigen::VectorXd SampleModelFit::se() const {
    int d = static_cast<int>(pop.beta.size() + assign.gamma.size() + 5);
    Eigen::VectorXd out = Eigen::VectorXd::Constant(
        d, std::numeric_limits<double>::quiet_NaN());
    if (!covariance_valid) return out;
    for (int i = 0; i < d; ++i) out[i] = std::sqrt(std::max(covariance(i, i), 0.0));
    // report sigma on its own scale rather than log sigma
    out[1 + pop.beta.size()] *= pop.sigma;
    return out;
}

double full_loglik(const StudyData& data, int group, const PopulationParams& p,
                   const AssignmentParams& a, int nodes, bool weighted) {
    FullLikelihood fl(data, group, nodes, weighted);
    return fl.eval(fl.pack(p, a), nullptr);
}

Eigen::VectorXd full_loglik_gradient(const StudyData& data, int group,
                                     const PopulationParams& p,
                                     const AssignmentParams& a, int nodes,
                                     bool weighted) {
    FullLikelihood fl(data, group, nodes, weighted);
    Eigen::VectorXd grad;
    fl.eval(fl.pack(p, a), &grad);
    return grad;
}

double conditional_loglik(const StudyData& data, int group, const PopulationParams& p,
                          const AssignmentParams& a, int nodes, bool weighted) {
    double ll = 0.0;
    Eigen::MatrixXd X = data.columns(data.x_names);
    Eigen::MatrixXd V = data.columns(data.v_names);
    for (int i = 0; i < data.n(); ++i) {
        if (data.t[i] != group) continue;
        double wi = weighted ? data.w[i] : 1.0;
        ll += wi * std::log(sample_pdf(data.y[i], X.row(i), V.row(i), p, a, nodes));
    }
    return ll;
}

SampleModelFit fit_mle(const StudyData& data, int group, const MleOptions& opts) {
    data.require_roles();
    check_exclusion(data);
    if (data.n_group(group) < static_cast<int>(data.x_names.size()) + 3) {
        throw ValidationError("group " + std::to_string(group) +
                              " is too small for the sample-model fit");
    }

    FullLikelihood fl(data, group, opts.nodes, opts.weighted);

    std::vector<Eigen::VectorXd> starts;
    if (opts.init) {
        starts.push_back(*opts.init);
        if (opts.multi_start) {
            for (double d : {0.5, -0.5}) {
                Eigen::VectorXd s = *opts.init;
                s[3 + fl.p()] = d;
                starts.push_back(s);
            }
        }
    } else {
        // least-squares start for theta, membership logit with delta = 0 for alpha
        auto [g1, g0] = split_groups(data);
        const GroupView& g = group == 1 ? g1 : g0;
        Eigen::VectorXd wg = Eigen::VectorXd::Ones(g.n());
        if (opts.weighted) wg = g.w();
        FitResult ols = fit_wls(g.design(data.x_names), g.y(), wg, data.x_names);

        std::vector<int> member(data.n());
        for (int i = 0; i < data.n(); ++i) member[i] = data.t[i] == group ? 1 : 0;
        Eigen::VectorXd wall =
            opts.weighted ? data.w : Eigen::VectorXd::Ones(data.n());
        FitResult mem;
        bool have_mem = true;
        try {
            mem = fit_logit(data.v_design(), member, wall, data.v_names);
        } catch (const Error&) {
            have_mem = false;  // fall back to a flat assignment start
        }

        PopulationParams pop0;
        pop0.beta0 = ols.coefficients[0];
        pop0.beta = ols.coefficients.tail(fl.p());
        pop0.sigma = std::max(ols.scale, 1e-3);
        AssignmentParams as0;
        as0.gamma = Eigen::VectorXd::Zero(fl.q());
        if (have_mem) {
            as0.gamma0 = mem.coefficients[0];
            as0.gamma = mem.coefficients.tail(fl.q());
        } else {
            double share = static_cast<double>(data.n_group(group)) / data.n();
            as0.gamma0 = std::log(share / (1.0 - share));
        }
        as0.delta = 0.0;

        Eigen::VectorXd base = fl.pack(pop0, as0);
        starts.push_back(base);
        if (opts.multi_start) {
            for (double d : {0.5, -0.5}) {
                Eigen::VectorXd s = base;
                s[3 + fl.p()] = d;
                starts.push_back(s);
            }
        }
    }

    ObjectiveFn objective = [&fl](const Eigen::VectorXd& psi, Eigen::VectorXd* grad) {
        double ll = fl.eval(psi, grad);
        if (grad) *grad = -*grad;
        return -ll;
    };

    OptimOptions oopts;
    oopts.max_iterations = opts.max_iterations;
    oopts.grad_tol = opts.grad_tol;

    OptimResult best;
    bool have_best = false;
    int total_iters = 0;
    for (const auto& s : starts) {
        OptimResult r = minimize_bfgs(objective, s, oopts);
        total_iters += r.iterations;
        if (!have_best || r.f < best.f) {
            best = r;
            have_best = true;
        }
    }
    if (!have_best || !std::isfinite(best.f)) {
        throw ConvergenceError("sample-model fit failed from every start");
    }

    SampleModelFit fit;
    fit.group = group;
    fl.unpack(best.x, &fit.pop, &fit.assign);
    fit.loglik = -best.f;
    fit.quadrature = opts.nodes;
    fit.converged = best.converged;
    fit.iterations = total_iters;
    fit.weighted = opts.weighted;
    fit.param_names = fl.param_names(data);

    if (opts.compute_covariance) {
        if (!fit.converged) {
            throw ConvergenceError(
                "sample-model fit did not reach the gradient tolerance after all "
                "starts");
        }
        const int d = fl.dim();
        Eigen::MatrixXd H(d, d);
        Eigen::VectorXd gp(d), gm(d);
        for (int i = 0; i < d; ++i) {
            double h = 1e-4 * (1.0 + std::abs(best.x[i]));
            Eigen::VectorXd xp = best.x, xm = best.x;
            xp[i] += h;
            xm[i] -= h;
            fl.eval(xp, &gp);
            fl.eval(xm, &gm);
            H.col(i) = -(gp - gm) / (2.0 * h);  // observed information
        }
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
            fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
            fit.covariance_valid = true;
        } else {
            fit.covariance_valid = false;  // flagged, covariance omitted
        }
    }
    return fit;
}

namespace {

Eigen::VectorXd sample_xbar(const StudyData& data, bool weighted) {
    Eigen::VectorXd xbar(data.x_names.size());
    double sw = weighted ? data.w.sum() : static_cast<double>(data.n());
    for (int j = 0; j < xbar.size(); ++j) {
        Eigen::VectorXd col = data.column(data.x_names[j]);
        xbar[j] = weighted ? data.w.dot(col) / sw : col.mean();
    }
    return xbar;
}

double delta_method_se(const SampleModelFit& fit, const Eigen::VectorXd& xbar) {
    if (!fit.covariance_valid) return std::numeric_limits<double>::quiet_NaN();
    int d = static_cast<int>(fit.covariance.rows());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    g[0] = 1.0;
    g.segment(1, xbar.size()) = xbar;
    return std::sqrt(std::max(g.dot(fit.covariance * g), 0.0));
}

}  // namespace

std::pair<double, double> mean_pop(const SampleModelFit& fit,
                                   const Eigen::VectorXd& xbar_population) {
    if (xbar_population.size() != fit.pop.beta.size()) {
        throw ValidationError("mean_pop: covariate mean length mismatch");
    }
    double est = fit.pop.beta0 + fit.pop.beta.dot(xbar_population);
    return {est, delta_method_se(fit, xbar_population)};
}

std::pair<double, double> mean_sample(const SampleModelFit& fit, const StudyData& data,
                                      bool weighted) {
    Eigen::VectorXd xbar = sample_xbar(data, weighted);
    double est = fit.pop.beta0 + fit.pop.beta.dot(xbar);
    return {est, delta_method_se(fit, xbar)};
}

namespace {

double combined_point(const SampleModelFit& fit, const StudyData& data, bool weighted,
                      int* low_prob_count) {
    Eigen::MatrixXd X = data.columns(data.x_names);
    Eigen::MatrixXd V = data.columns(data.v_names);
    Eigen::VectorXd pred = Eigen::VectorXd::Constant(data.n(), fit.pop.beta0);
    pred.noalias() += X * fit.pop.beta;

    double sw = 0.0, sp = 0.0;
    double num = 0.0, den = 0.0;
    int low = 0;
    for (int i = 0; i < data.n(); ++i) {
        double wi = weighted ? data.w[i] : 1.0;
        sw += wi;
        sp += wi * pred[i];
        if (data.t[i] != fit.group) continue;
        double p = assignment_prob(data.y[i], V.row(i), fit.assign);
        if (p < 1e-6) ++low;
        num += wi * (data.y[i] - pred[i]) / p;
        den += wi / p;
    }
    if (low_prob_count) *low_prob_count = low;
    return num / den + sp / sw;
}

}  // namespace

std::pair<double, double> mean_combined(const SampleModelFit& fit, const StudyData& data,
                                        const CombinedOptions& opts) {
    int low = 0;
    double est = combined_point(fit, data, opts.weighted, &low);

    double se = 0.0;
    if (opts.se_replicates > 0) {
        auto [g1, g0] = split_groups(data);
        std::vector<double> reps(opts.se_replicates,
                                 std::numeric_limits<double>::quiet_NaN());
        parallel_for(opts.se_replicates, opts.threads, [&](int b) {
            Rng rng = Rng::keyed(opts.seed, 0x434f4d42u, fit.group, b);
            StudyData boot = data;
            int row = 0;
            for (const auto* g : {&g1, &g0}) {
                for (int k = 0; k < g->n(); ++k) {
                    int src = g->indices[rng.uniform_int(g->n())];
                    boot.y[row] = data.y[src];
                    boot.w[row] = data.w[src];
                    boot.t[row] = data.t[src];
                    boot.cov.row(row) = data.cov.row(src);
                    ++row;
                }
            }
            try {
                MleOptions mo;
                mo.nodes = fit.quadrature;
                mo.weighted = opts.weighted;
                mo.compute_covariance = false;
                mo.multi_start = false;
                mo.init = fit.packed();
                SampleModelFit refit = fit_mle(boot, fit.group, mo);
                reps[b] = combined_point(refit, boot, opts.weighted, nullptr);
            } catch (const Error&) {
                // failed replicate stays NaN and is dropped below
            }
        });
        std::vector<double> ok;
        ok.reserve(reps.size());
        for (double v : reps) {
            if (std::isfinite(v)) ok.push_back(v);
        }
        if (ok.size() < reps.size() / 2) {
            throw ConvergenceError("combined-estimator bootstrap: too many failed refits");
        }
        double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / ok.size();
        double ss = 0.0;
        for (double v : ok) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / (ok.size() - 1));
    }
    (void)low;
    return {est, se};
}

SampleMleResult run_sample_mle(const StudyData& data, const MleOptions& mle_opts,
                               const CombinedOptions& comb_opts) {
    SampleMleResult out;
    out.fit1 = fit_mle(data, 1, mle_opts);
    out.fit0 = fit_mle(data, 0, mle_opts);

    bool weighted = mle_opts.weighted;
    auto [mu1s, se1s] = mean_sample(out.fit1, data, weighted);
    auto [mu0s, se0s] = mean_sample(out.fit0, data, weighted);
    out.regression_form = make_report(Method::SampleMleS, mu1s, mu0s,
                                      std::sqrt(se1s * se1s + se0s * se0s), weighted);
    out.regression_form.details["delta1"] = out.fit1.assign.delta;
    out.regression_form.details["delta0"] = out.fit0.assign.delta;
    out.regression_form.details["sigma1"] = out.fit1.pop.sigma;
    out.regression_form.details["sigma0"] = out.fit0.pop.sigma;
    out.regression_form.details["loglik1"] = out.fit1.loglik;
    out.regression_form.details["loglik0"] = out.fit0.loglik;

    CombinedOptions c1 = comb_opts;
    c1.weighted = weighted;
    auto [mu1c, se1c] = mean_combined(out.fit1, data, c1);
    auto [mu0c, se0c] = mean_combined(out.fit0, data, c1);
    out.combined_form = make_report(Method::SampleMleC, mu1c, mu0c,
                                    std::sqrt(se1c * se1c + se0c * se0c), weighted);

    int low1 = 0, low0 = 0;
    combined_point(out.fit1, data, weighted, &low1);
    combined_point(out.fit0, data, weighted, &low0);
    if (low1 + low0 > 0) {
        out.combined_form.notes.push_back(
            std::to_string(low1 + low0) +
            " units with fitted assignment probability below 1e-6");
    }
    return out;
}

}  // namespace ate
