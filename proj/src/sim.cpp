#include "ate/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ate/errors.hpp"
#include "ate/gof.hpp"
#include "ate/numerics.hpp"
#include "ate/parallel.hpp"

namespace ate {

double skew_t_draw(Rng& rng, const SkewT& st) {
    if (!(st.w > 0.0)) throw ValidationError("skew-t scale must be positive");
    if (!(st.nu > 0.0)) throw ValidationError("skew-t degrees of freedom must be positive");
    double d = st.alpha / std::sqrt(1.0 + st.alpha * st.alpha);
    double u0 = rng.normal();
    double u1 = rng.normal();
    double z = d * std::abs(u0) + std::sqrt(1.0 - d * d) * u1;
    double x = z;
    if (std::isfinite(st.nu)) {
        double v = rng.chi_squared(st.nu);
        x = z / std::sqrt(v / st.nu);
    }
    return st.xi + st.w * x;
}

Eigen::VectorXd skew_t_sample(double xi, double w, double alpha, double nu, int n,
                              std::uint64_t seed) {
    SkewT st{xi, w, alpha, nu};
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::keyed(seed, 0x534b4557u, i);
        out[i] = skew_t_draw(rng, st);
    }
    return out;
}

namespace {

constexpr std::uint64_t kTagPanel = 0xC0;
constexpr std::uint64_t kTagY1 = 0xD1;
constexpr std::uint64_t kTagY0 = 0xD0;
constexpr std::uint64_t kTagAssign = 0xA5;
constexpr std::uint64_t kTagControl = 0xCD;
constexpr std::uint64_t kTagGroup = 0x6500;

double residual_draw(Rng& rng, const ResidualSpec& res, double sigma) {
    if (res.normal) return sigma * rng.normal();
    return skew_t_draw(rng, res.skew);
}

// Exact draw from f(y) proportional to logistic(c + delta y) * N(y; mu, sigma^2).
// Envelope: logistic(z) <= min(1, e^z); the e^z branch tilts the normal mean.
double tilted_normal_draw(Rng& rng, double mu, double sigma, double c, double delta) {
    double eta_bar = c + delta * mu;
    bool use_tilt = eta_bar + 0.5 * delta * delta * sigma * sigma < 0.0;
    double prop_mu = use_tilt ? mu + delta * sigma * sigma : mu;
    for (int it = 0; it < 1000000; ++it) {
        double y = prop_mu + sigma * rng.normal();
        double z = c + delta * y;
        double accept = use_tilt ? logistic(-z) : logistic(z);
        if (rng.uniform() < accept) return y;
    }
    throw Error("tilted normal sampler failed to accept");
}

}  // namespace

Panel make_panel(const GeneratorSpec& spec, std::uint64_t replicate) {
    Panel panel;
    const int n = spec.n_population;
    if (spec.resample_from) {
        const StudyData& src = *spec.resample_from;
        panel.names = src.cov_names;
        panel.cov.resize(n, src.cov.cols());
        for (int i = 0; i < n; ++i) {
            Rng rng = Rng::keyed(spec.seed, replicate, i, kTagPanel);
            panel.cov.row(i) = src.cov.row(rng.uniform_int(src.n()));
        }
    } else {
        if (spec.synthetic.empty()) {
            throw ValidationError("generator needs a dataset or synthetic covariates");
        }
        panel.cov.resize(n, static_cast<int>(spec.synthetic.size()));
        for (const auto& cs : spec.synthetic) panel.names.push_back(cs.name);
        for (int i = 0; i < n; ++i) {
            Rng rng = Rng::keyed(spec.seed, replicate, i, kTagPanel);
            for (int j = 0; j < static_cast<int>(spec.synthetic.size()); ++j) {
                const CovariateSpec& cs = spec.synthetic[j];
                panel.cov(i, j) = cs.binary ? (rng.uniform() < cs.p ? 1.0 : 0.0)
                                            : cs.mean + cs.sd * rng.normal();
            }
        }
    }
    return panel;
}

namespace {

StudyData shell_from_panel(const GeneratorSpec& spec, const Panel& panel) {
    StudyData data;
    const int n = static_cast<int>(panel.cov.rows());
    data.y = Eigen::VectorXd::Zero(n);
    data.w = Eigen::VectorXd::Ones(n);
    data.t.assign(n, 0);
    data.cov_names = panel.names;
    data.cov = panel.cov;
    data.set_roles(spec.x_names, spec.v_names);
    return data;
}

}  // namespace

GeneratedStudy generate_study(const GeneratorSpec& spec, std::uint64_t replicate) {
    Panel panel = make_panel(spec, replicate);
    GeneratedStudy out;
    out.data = shell_from_panel(spec, panel);
    const int n = out.data.n();
    Eigen::MatrixXd X = out.data.columns(spec.x_names);
    Eigen::MatrixXd V = out.data.columns(spec.v_names);

    out.y1_all.resize(n);
    out.y0_all.resize(n);
    double s1 = 0.0, s0 = 0.0;
    for (int i = 0; i < n; ++i) {
        double mu1 = spec.g1.pop.beta0 + spec.g1.pop.beta.dot(X.row(i));
        double mu0 = spec.g0.pop.beta0 + spec.g0.pop.beta.dot(X.row(i));
        s1 += mu1;
        s0 += mu0;

        Rng rng1 = Rng::keyed(spec.seed, replicate, i, kTagY1);
        Rng rng0 = Rng::keyed(spec.seed, replicate, i, kTagY0);
        double y1 = mu1 + residual_draw(rng1, spec.residual, spec.g1.pop.sigma);
        double y0 = mu0 + residual_draw(rng0, spec.residual, spec.g0.pop.sigma);
        out.y1_all[i] = y1;
        out.y0_all[i] = y0;

        Rng rng_a = Rng::keyed(spec.seed, replicate, i, kTagAssign);
        double p1 = assignment_prob(y1, V.row(i), spec.g1.assign);
        if (rng_a.uniform() < p1) {
            out.data.t[i] = 1;
            out.data.y[i] = y1;
        } else {
            out.data.t[i] = 0;
            if (spec.control_draw == ControlDraw::Population) {
                out.data.y[i] = y0;
            } else {
                Rng rng_c = Rng::keyed(spec.seed, replicate, i, kTagControl);
                double base = spec.g0.assign.gamma0 + spec.g0.assign.gamma.dot(V.row(i));
                if (spec.residual.normal) {
                    out.data.y[i] = tilted_normal_draw(rng_c, mu0, spec.g0.pop.sigma,
                                                       base, spec.g0.assign.delta);
                } else {
                    // plain rejection on the skew-t proposal
                    double y = y0;
                    for (int it = 0; it < 100000; ++it) {
                        double p0 = logistic(base + spec.g0.assign.delta * y);
                        if (rng_c.uniform() < p0) break;
                        y = mu0 + residual_draw(rng_c, spec.residual,
                                                spec.g0.pop.sigma);
                    }
                    out.data.y[i] = y;
                }
            }
        }
    }
    out.mu1_true = s1 / n;
    out.mu0_true = s0 / n;
    out.tau_true = out.mu1_true - out.mu0_true;
    return out;
}

StudyData generate_group_study(const GeneratorSpec& spec, const Panel& panel, int group,
                               std::uint64_t replicate) {
    StudyData data = shell_from_panel(spec, panel);
    const GroupModel& model = group == 1 ? spec.g1 : spec.g0;
    Eigen::MatrixXd X = data.columns(spec.x_names);
    Eigen::MatrixXd V = data.columns(spec.v_names);
    for (int i = 0; i < data.n(); ++i) {
        Rng rng = Rng::keyed(spec.seed, replicate, i, kTagGroup + group);
        double mu = model.pop.beta0 + model.pop.beta.dot(X.row(i));
        double y = mu + residual_draw(rng, spec.residual, model.pop.sigma);
        data.y[i] = y;
        double p = assignment_prob(y, V.row(i), model.assign);
        data.t[i] = rng.uniform() < p ? group : 1 - group;
    }
    return data;
}

PowerResult power_study(const PowerConfig& config) {
    PowerResult result;
    const int R = config.replicates;
    const auto& levels = config.levels;
    const char* stat_names[3] = {"KS", "CM", "AD"};

    std::vector<int> fit_fail_per_dist(config.distributions.size(), 0);
    for (size_t d = 0; d < config.distributions.size(); ++d) {
        GeneratorSpec spec = config.base;
        spec.residual = config.distributions[d].second;
        const std::string& dist_name = config.distributions[d].first;

        // per replicate: p-values[group][stat], estimates
        struct RepOut {
            bool ok = false;
            double p[2][3];       // index 0 -> group 1, 1 -> group 0
            double mu_s[2], mu_c[2];
        };
        std::vector<RepOut> reps(R);

        parallel_for(R, config.threads, [&](int r) {
            std::uint64_t rep_key = Rng::mix(spec.seed ^ (0xD157ULL + d)) + r;
            Panel panel = make_panel(spec, rep_key);
            RepOut out;
            try {
                for (int gi = 0; gi < 2; ++gi) {
                    int group = gi == 0 ? 1 : 0;
                    StudyData data = generate_group_study(spec, panel, group, rep_key);
                    MleOptions mo;
                    mo.nodes = config.mle_nodes;
                    mo.compute_covariance = false;
                    SampleModelFit fit = fit_mle(data, group, mo);
                    GofOptions go;
                    go.B = config.B;
                    go.seed = Rng::mix(spec.seed ^ 0xB007ULL) + 977u * rep_key + group;
                    go.threads = 1;
                    GofReport gof = bootstrap_pvalues_group(data, fit, go);
                    out.p[gi][0] = gof.p_ks;
                    out.p[gi][1] = gof.p_cm;
                    out.p[gi][2] = gof.p_ad;
                    out.mu_s[gi] = mean_sample(fit, data).first;
                    CombinedOptions co;
                    co.se_replicates = 0;
                    out.mu_c[gi] = mean_combined(fit, data, co).first;
                }
                out.ok = true;
            } catch (const Error&) {
                out.ok = false;
            }
            reps[r] = out;
        });

        int ok = 0;
        for (const auto& rep : reps)
            if (rep.ok) ++ok;
        fit_fail_per_dist[d] = R - ok;
        if (ok == 0) throw ConvergenceError("power study: every replicate failed");

        for (int gi = 0; gi < 2; ++gi) {
            for (int s = 0; s < 3; ++s) {
                for (double level : levels) {
                    int rejected = 0;
                    for (const auto& rep : reps) {
                        if (rep.ok && rep.p[gi][s] <= level) ++rejected;
                    }
                    PowerRejectionRow row;
                    row.distribution = dist_name;
                    row.group = gi == 0 ? 1 : 0;
                    row.statistic = stat_names[s];
                    row.level = level;
                    row.rejection_rate = static_cast<double>(rejected) / ok;
                    result.rejections.push_back(row);
                }
            }
        }

        auto push_estimate = [&](const std::string& name, auto getter) {
            std::vector<double> vals;
            vals.reserve(ok);
            for (const auto& rep : reps) {
                if (rep.ok) vals.push_back(getter(rep));
            }
            double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            PowerEstimateRow row;
            row.distribution = dist_name;
            row.estimator = name;
            row.mean = mean;
            row.se = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1)) : 0.0;
            result.estimates.push_back(row);
        };
        push_estimate("mu1_S", [](const RepOut& r) { return r.mu_s[0]; });
        push_estimate("mu0_S", [](const RepOut& r) { return r.mu_s[1]; });
        push_estimate("mu1_C", [](const RepOut& r) { return r.mu_c[0]; });
        push_estimate("mu0_C", [](const RepOut& r) { return r.mu_c[1]; });
        push_estimate("tau_S", [](const RepOut& r) { return r.mu_s[0] - r.mu_s[1]; });
        push_estimate("tau_C", [](const RepOut& r) { return r.mu_c[0] - r.mu_c[1]; });
    }
    result.fit_failures = std::accumulate(fit_fail_per_dist.begin(),
                                          fit_fail_per_dist.end(), 0);
    return result;
}

}  // namespace ate
