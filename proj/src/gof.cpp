#include "ate/gof.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ate/errors.hpp"
#include "ate/numerics.hpp"
#include "ate/parallel.hpp"
#include "ate/rng.hpp"

namespace ate {

namespace {

constexpr double kUEps = 1e-12;

double clamp_u(double u) { return std::min(std::max(u, kUEps), 1.0 - kUEps); }

// F_S(y) for one unit by truncated adaptive quadrature of pi(s) phi(s; mu, sigma)
// over [mu - 10 sigma, y], normalized by the full-range integral.
double unit_pit(double y, double mu, double sigma, double assign_base, double delta) {
    const double lo = mu - 10.0 * sigma;
    const double hi = mu + 10.0 * sigma;
    auto integrand = [&](double s) {
        double r = (s - mu) / sigma;
        return logistic(assign_base + delta * s) * norm_pdf(r) / sigma;
    };
    double total = adaptive_simpson(integrand, lo, hi, 1e-12);
    if (!(total > 0.0)) throw Error("sample-cdf normalization failed");
    if (y <= lo) return clamp_u(0.0);
    if (y >= hi) return clamp_u(1.0);
    double part = adaptive_simpson(integrand, lo, y, 1e-12);
    return clamp_u(part / total);
}

}  // namespace

Eigen::VectorXd pit_transform(const StudyData& data, int group,
                              const SampleModelFit& fit) {
    Eigen::MatrixXd X = data.columns(data.x_names);
    Eigen::MatrixXd V = data.columns(data.v_names);
    std::vector<double> u;
    u.reserve(data.n());
    for (int i = 0; i < data.n(); ++i) {
        if (data.t[i] != group) continue;
        double mu = fit.pop.beta0 + fit.pop.beta.dot(X.row(i));
        double base = fit.assign.gamma0 + fit.assign.gamma.dot(V.row(i));
        u.push_back(unit_pit(data.y[i], mu, fit.pop.sigma, base, fit.assign.delta));
    }
    return Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<int>(u.size()));
}

double ks_stat(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    if (n == 0) throw ValidationError("ks_stat: empty input");
    std::vector<double> s(u.data(), u.data() + n);
    std::sort(s.begin(), s.end());
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        best = std::max(best, std::abs((i + 1.0) / n - s[i]));
    }
    return best;
}

double cm_stat(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    if (n == 0) throw ValidationError("cm_stat: empty input");
    std::vector<double> s(u.data(), u.data() + n);
    std::sort(s.begin(), s.end());
    double acc = 1.0 / (12.0 * n);
    for (int i = 0; i < n; ++i) {
        double d = s[i] - (2.0 * (i + 1.0) - 1.0) / (2.0 * n);
        acc += d * d;
    }
    return acc;
}

double ad_stat(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    if (n == 0) throw ValidationError("ad_stat: empty input");
    std::vector<double> s(u.data(), u.data() + n);
    std::sort(s.begin(), s.end());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double ui = clamp_u(s[i]);
        acc += (2.0 * (i + 1.0) - 1.0) * std::log(ui) +
               (2.0 * n + 1.0 - 2.0 * (i + 1.0)) * std::log1p(-ui);
    }
    return -n - acc / n;
}

GofReport bootstrap_pvalues_group(const StudyData& data, const SampleModelFit& fit,
                                  const GofOptions& opts,
                                  GofReplicateStats* replicate_stats) {
    if (opts.B < 50) throw ValidationError("bootstrap needs at least 50 replicates");
    if (!fit.converged) {
        throw ConvergenceError("goodness-of-fit requires a converged fit");
    }

    GofReport rep;
    rep.group = fit.group;
    Eigen::VectorXd u_obs = pit_transform(data, fit.group, fit);
    rep.ks = ks_stat(u_obs);
    rep.cm = cm_stat(u_obs);
    rep.ad = ad_stat(u_obs);

    Eigen::MatrixXd X = data.columns(data.x_names);
    Eigen::MatrixXd V = data.columns(data.v_names);
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(data.n(), fit.pop.beta0);
    mu.noalias() += X * fit.pop.beta;

    const int B = opts.B;
    std::vector<double> ks_b(B, -1.0), cm_b(B, -1.0), ad_b(B, -1.0);
    std::vector<int> size_b(B, -1);
    const int min_size = static_cast<int>(data.x_names.size()) + 3;

    parallel_for(B, opts.threads, [&](int b) {
        Rng rng = Rng::keyed(opts.seed, 0x474f46u + static_cast<unsigned>(fit.group), b);
        StudyData boot = data;
        int n_sel = 0;
        for (int i = 0; i < data.n(); ++i) {
            double y = mu[i] + fit.pop.sigma * rng.normal();
            boot.y[i] = y;
            double p = assignment_prob(y, V.row(i), fit.assign);
            bool sel = rng.uniform() < p;
            boot.t[i] = sel ? fit.group : 1 - fit.group;
            if (sel) ++n_sel;
        }
        if (n_sel < min_size || n_sel == data.n()) return;  // degenerate replicate
        size_b[b] = n_sel;
        try {
            MleOptions mo;
            mo.nodes = fit.quadrature;
            mo.weighted = fit.weighted;
            mo.compute_covariance = false;
            mo.multi_start = false;
            mo.init = fit.packed();
            SampleModelFit refit = fit_mle(boot, fit.group, mo);
            if (!refit.converged) return;
            Eigen::VectorXd u = pit_transform(boot, fit.group, refit);
            ks_b[b] = ks_stat(u);
            cm_b[b] = cm_stat(u);
            ad_b[b] = ad_stat(u);
        } catch (const Error&) {
            // replicate dropped; counted below
        }
    });

    int ok = 0, ge_ks = 0, ge_cm = 0, ge_ad = 0;
    double size_sum = 0.0, size_ss = 0.0;
    std::vector<int> sizes;
    for (int b = 0; b < B; ++b) {
        if (ks_b[b] < 0.0) continue;
        ++ok;
        if (ks_b[b] >= rep.ks) ++ge_ks;
        if (cm_b[b] >= rep.cm) ++ge_cm;
        if (ad_b[b] >= rep.ad) ++ge_ad;
        sizes.push_back(size_b[b]);
        if (replicate_stats) {
            replicate_stats->ks.push_back(ks_b[b]);
            replicate_stats->cm.push_back(cm_b[b]);
            replicate_stats->ad.push_back(ad_b[b]);
            replicate_stats->sizes.push_back(size_b[b]);
        }
    }
    rep.failures = B - ok;
    if (rep.failures > B / 10) {
        throw ConvergenceError("goodness-of-fit bootstrap: " +
                               std::to_string(rep.failures) + " of " +
                               std::to_string(B) + " replicates failed");
    }
    rep.replicates = ok;
    rep.p_ks = (1.0 + ge_ks) / (ok + 1.0);
    rep.p_cm = (1.0 + ge_cm) / (ok + 1.0);
    rep.p_ad = (1.0 + ge_ad) / (ok + 1.0);

    for (int s : sizes) size_sum += s;
    rep.rep_size_mean = size_sum / ok;
    for (int s : sizes) {
        size_ss += (s - rep.rep_size_mean) * (s - rep.rep_size_mean);
    }
    rep.rep_size_sd = ok > 1 ? std::sqrt(size_ss / (ok - 1)) : 0.0;
    return rep;
}

std::pair<GofReport, GofReport> bootstrap_pvalues(const StudyData& data,
                                                  const SampleModelFit& fit1,
                                                  const SampleModelFit& fit0,
                                                  const GofOptions& opts) {
    GofReport r1 = bootstrap_pvalues_group(data, fit1, opts);
    GofReport r0 = bootstrap_pvalues_group(data, fit0, opts);
    return {r1, r0};
}

}  // namespace ate
