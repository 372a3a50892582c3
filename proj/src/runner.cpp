#include "ate/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ate/errors.hpp"
#include "ate/gof.hpp"
#include "ate/jsonio.hpp"
#include "ate/parallel.hpp"
#include "ate/sample_model.hpp"
#include "ate/selection_estimators.hpp"
#include "ate/si_estimators.hpp"

namespace ate {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ResidualSpec parse_residual(const json& j) {
    ResidualSpec res;
    std::string kind = j.value("kind", std::string("normal"));
    if (kind == "normal") {
        res.normal = true;
    } else if (kind == "skew_t") {
        res.normal = false;
        res.skew.xi = j.at("xi").get<double>();
        res.skew.w = j.at("w").get<double>();
        res.skew.alpha = j.at("alpha").get<double>();
        if (j.contains("nu") && !j.at("nu").is_null()) {
            res.skew.nu = j.at("nu").get<double>();
        }
    } else {
        throw ConfigError("residual kind must be 'normal' or 'skew_t'");
    }
    return res;
}

GroupModel parse_group_model(const json& j, const std::vector<std::string>& x_names,
                             const std::vector<std::string>& v_names) {
    GroupModel m;
    const json& pop = j.at("pop");
    m.pop.beta0 = pop.at("const").get<double>();
    m.pop.sigma = pop.at("sigma").get<double>();
    m.pop.beta.resize(static_cast<int>(x_names.size()));
    for (int k = 0; k < m.pop.beta.size(); ++k) {
        m.pop.beta[k] = pop.at("coef").at(x_names[k]).get<double>();
    }
    const json& as = j.at("assign");
    m.assign.gamma0 = as.at("const").get<double>();
    m.assign.delta = as.at("delta").get<double>();
    m.assign.gamma.resize(static_cast<int>(v_names.size()));
    for (int k = 0; k < m.assign.gamma.size(); ++k) {
        m.assign.gamma[k] = as.at("coef").at(v_names[k]).get<double>();
    }
    return m;
}

SimulationConfig parse_simulation(const json& j, const RunConfig& cfg) {
    SimulationConfig sim;
    sim.kind = j.value("kind", std::string("recovery"));
    if (sim.kind != "recovery" && sim.kind != "power") {
        throw ConfigError("simulation.kind must be 'recovery' or 'power'");
    }
    GeneratorSpec& g = sim.generator;
    g.n_population = j.value("n", 1938);
    g.x_names = cfg.x_names;
    g.v_names = cfg.v_names;
    if (j.contains("covariates")) {
        for (const auto& cj : j.at("covariates")) {
            CovariateSpec cs;
            cs.name = cj.at("name").get<std::string>();
            cs.binary = cj.value("binary", false);
            cs.p = cj.value("p", 0.5);
            cs.mean = cj.value("mean", 0.0);
            cs.sd = cj.value("sd", 1.0);
            g.synthetic.push_back(cs);
        }
    }
    g.g1 = parse_group_model(j.at("group1"), g.x_names, g.v_names);
    g.g0 = parse_group_model(j.at("group0"), g.x_names, g.v_names);
    if (j.contains("residual")) g.residual = parse_residual(j.at("residual"));
    std::string cd = j.value("control_draw", std::string("population"));
    if (cd == "population") {
        g.control_draw = ControlDraw::Population;
    } else if (cd == "sample") {
        g.control_draw = ControlDraw::SampleLaw;
    } else {
        throw ConfigError("control_draw must be 'population' or 'sample'");
    }
    sim.replicates = j.value("replicates", 100);
    sim.gof_B = j.value("gof_B", 99);
    if (j.contains("levels")) {
        sim.levels = j.at("levels").get<std::vector<double>>();
    }
    if (j.contains("distributions")) {
        for (const auto& dj : j.at("distributions")) {
            ResidualSpec res = parse_residual(dj);
            sim.distributions.emplace_back(dj.at("name").get<std::string>(), res);
        }
    }
    return sim;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    cfg.raw = buf.str();

    json j;
    try {
        j = json::parse(cfg.raw);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }

    try {
        if (j.contains("data")) {
            const json& d = j.at("data");
            cfg.data_path = d.at("path").get<std::string>();
            const json& s = d.at("schema");
            cfg.schema.y = s.at("y").get<std::string>();
            cfg.schema.t = s.at("t").get<std::string>();
            cfg.schema.w = s.value("w", std::string());
            cfg.schema.covariates = s.at("covariates").get<std::vector<std::string>>();
        }
        cfg.x_names = j.at("x_names").get<std::vector<std::string>>();
        cfg.v_names = j.at("v_names").get<std::vector<std::string>>();
        cfg.instrument = j.value("instrument", std::string());
        cfg.auto_standardize = j.value("standardize", true);
        if (j.contains("estimators")) {
            for (const auto& name : j.at("estimators")) {
                cfg.estimators.push_back(method_from_name(name.get<std::string>()));
            }
        }
        cfg.weighted = j.value("weighted", false);
        cfg.compare_weighted = j.value("compare_weighted", false);
        cfg.matching_m = j.value("matching_m", 4);
        cfg.quadrature_nodes = j.value("quadrature_nodes", 40);
        cfg.bootstrap_B = j.value("bootstrap_B", 250);
        cfg.se_replicates = j.value("se_replicates", 200);
        cfg.gof_collect_replicates = j.value("gof_collect_replicates", false);
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.out_dir = j.value("out", std::string("out"));
        cfg.threads = j.value("threads", 0);
        if (j.contains("simulation")) {
            cfg.simulation = parse_simulation(j.at("simulation"), cfg);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    return cfg;
}

StudyData load_study(const RunConfig& config) {
    if (config.data_path.empty()) throw ConfigError("config has no data section");
    StudyData data = load_csv(config.data_path, config.schema);
    if (config.auto_standardize) data = standardize(data);
    data.set_roles(config.x_names, config.v_names);
    return data;
}

namespace {

std::uint64_t require_seed(const RunConfig& config, const char* what) {
    if (!config.seed) {
        throw ConfigError(std::string("a seed is required for ") + what);
    }
    return *config.seed;
}

}  // namespace

AteReport run_estimator(const StudyData& data, Method method, const RunConfig& config,
                        bool weighted) {
    switch (method) {
        case Method::Diff:
            return ate_difference(data, weighted);
        case Method::OLS:
            return ate_regression(data, weighted);
        case Method::Match: {
            MatchOptions mo;
            mo.m = config.matching_m;
            mo.se_replicates = config.se_replicates;
            mo.seed = config.se_replicates > 0 ? require_seed(config, "the matching se")
                                               : 0;
            return ate_matching(data, mo, weighted);
        }
        case Method::BH: {
            PropensityModel prop = fit_propensity(data, weighted);
            return ate_brewer_hajek(data, prop, weighted);
        }
        case Method::DR: {
            PropensityModel prop = fit_propensity(data, weighted);
            return ate_doubly_robust(data, prop, weighted);
        }
        case Method::LV:
            return ate_heckman_lv(data, weighted);
        case Method::IV:
            if (config.instrument.empty()) {
                throw ConfigError("the IV estimator needs an instrument");
            }
            return ate_iv(data, config.instrument, weighted);
        case Method::SampleMleS:
        case Method::SampleMleC: {
            MleOptions mo;
            mo.nodes = config.quadrature_nodes;
            mo.weighted = weighted;
            CombinedOptions co;
            co.se_replicates = config.se_replicates;
            co.seed = config.se_replicates > 0
                          ? require_seed(config, "the combined-estimator se")
                          : 0;
            co.nodes = config.quadrature_nodes;
            co.weighted = weighted;
            co.threads = config.threads;
            SampleMleResult res = run_sample_mle(data, mo, co);
            return method == Method::SampleMleS ? res.regression_form
                                                : res.combined_form;
        }
    }
    throw ConfigError("unhandled estimator");
}

std::vector<WeightedCompareRow> compare_weighted(const StudyData& data,
                                                 const RunConfig& config) {
    std::vector<WeightedCompareRow> rows;
    for (Method m : config.estimators) {
        WeightedCompareRow row;
        row.method = m;
        row.unweighted = run_estimator(data, m, config, false);
        row.weighted = run_estimator(data, m, config, true);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

JsonValue report_to_json(const AteReport& r) {
    JsonValue o = JsonValue::object();
    o.set("method", JsonValue::string(method_name(r.method)));
    o.set("mu1", JsonValue::number(r.mu1));
    o.set("mu0", JsonValue::number(r.mu0));
    o.set("tau", JsonValue::number(r.tau));
    o.set("se", JsonValue::number(r.se));
    o.set("weighted", JsonValue::boolean(r.weighted));
    JsonValue details = JsonValue::object();
    for (const auto& [k, v] : r.details) details.set(k, JsonValue::number(v));
    o.set("details", std::move(details));
    JsonValue notes = JsonValue::array();
    for (const auto& nt : r.notes) notes.push_back(JsonValue::string(nt));
    o.set("notes", std::move(notes));
    return o;
}

JsonValue gof_to_json(const GofReport& g) {
    JsonValue o = JsonValue::object();
    o.set("group", JsonValue::integer(g.group));
    o.set("ks", JsonValue::number(g.ks));
    o.set("cm", JsonValue::number(g.cm));
    o.set("ad", JsonValue::number(g.ad));
    o.set("p_ks", JsonValue::number(g.p_ks));
    o.set("p_cm", JsonValue::number(g.p_cm));
    o.set("p_ad", JsonValue::number(g.p_ad));
    o.set("replicates", JsonValue::integer(g.replicates));
    o.set("failures", JsonValue::integer(g.failures));
    o.set("replicate_size_mean", JsonValue::number(g.rep_size_mean));
    o.set("replicate_size_sd", JsonValue::number(g.rep_size_sd));
    return o;
}

void do_estimate(const RunConfig& config, const std::filesystem::path& out_dir,
                 std::vector<std::string>& written) {
    StudyData data = load_study(config);
    std::vector<Method> methods = config.estimators;
    if (methods.empty()) {
        methods = {Method::Diff, Method::OLS, Method::Match, Method::BH,
                   Method::DR,   Method::LV,  Method::IV};
    }

    if (config.compare_weighted) {
        RunConfig cw = config;
        cw.estimators = methods;
        auto rows = compare_weighted(data, cw);
        std::string csv =
            "method,mu1_unweighted,mu1_weighted,mu0_unweighted,mu0_weighted,"
            "tau_unweighted,tau_weighted\n";
        JsonValue arr = JsonValue::array();
        for (const auto& row : rows) {
            csv += std::string(method_name(row.method)) + ',' +
                   fmt17(row.unweighted.mu1) + ',' + fmt17(row.weighted.mu1) + ',' +
                   fmt17(row.unweighted.mu0) + ',' + fmt17(row.weighted.mu0) + ',' +
                   fmt17(row.unweighted.tau) + ',' + fmt17(row.weighted.tau) + '\n';
            JsonValue o = JsonValue::object();
            o.set("method", JsonValue::string(method_name(row.method)));
            o.set("unweighted", report_to_json(row.unweighted));
            o.set("weighted", report_to_json(row.weighted));
            arr.push_back(std::move(o));
        }
        write_text_file((out_dir / "weighted_compare.csv").string(), csv);
        written.push_back("weighted_compare.csv");
        JsonValue root = JsonValue::object();
        root.set("comparison", std::move(arr));
        write_text_file((out_dir / "estimates.json").string(), root.dump());
        written.push_back("estimates.json");
        return;
    }

    JsonValue arr = JsonValue::array();
    for (Method m : methods) {
        arr.push_back(report_to_json(run_estimator(data, m, config, config.weighted)));
    }
    JsonValue root = JsonValue::object();
    root.set("estimates", std::move(arr));
    write_text_file((out_dir / "estimates.json").string(), root.dump());
    written.push_back("estimates.json");
}

void do_gof(const RunConfig& config, const std::filesystem::path& out_dir,
            std::vector<std::string>& written) {
    StudyData data = load_study(config);
    std::uint64_t seed = require_seed(config, "the goodness-of-fit bootstrap");

    MleOptions mo;
    mo.nodes = config.quadrature_nodes;
    mo.weighted = config.weighted;
    SampleModelFit fit1 = fit_mle(data, 1, mo);
    SampleModelFit fit0 = fit_mle(data, 0, mo);

    GofOptions go;
    go.B = config.bootstrap_B;
    go.seed = seed;
    go.threads = config.threads;

    GofReplicateStats stats1, stats0;
    GofReport r1 = bootstrap_pvalues_group(data, fit1, go,
                                           config.gof_collect_replicates ? &stats1
                                                                         : nullptr);
    GofReport r0 = bootstrap_pvalues_group(data, fit0, go,
                                           config.gof_collect_replicates ? &stats0
                                                                         : nullptr);

    JsonValue root = JsonValue::object();
    JsonValue arr = JsonValue::array();
    arr.push_back(gof_to_json(r1));
    arr.push_back(gof_to_json(r0));
    root.set("groups", std::move(arr));
    write_text_file((out_dir / "gof.json").string(), root.dump());
    written.push_back("gof.json");

    if (config.gof_collect_replicates) {
        std::string csv = "group,replicate,ks,cm,ad,sample_size\n";
        for (const auto* pr : {&stats1, &stats0}) {
            int group = pr == &stats1 ? 1 : 0;
            for (size_t i = 0; i < pr->ks.size(); ++i) {
                csv += std::to_string(group) + ',' + std::to_string(i) + ',' +
                       fmt17(pr->ks[i]) + ',' + fmt17(pr->cm[i]) + ',' +
                       fmt17(pr->ad[i]) + ',' + std::to_string(pr->sizes[i]) + '\n';
            }
        }
        write_text_file((out_dir / "gof_replicates.csv").string(), csv);
        written.push_back("gof_replicates.csv");
    }
}

void do_simulate(const RunConfig& config, const std::filesystem::path& out_dir,
                 std::vector<std::string>& written) {
    if (!config.simulation) throw ConfigError("config has no simulation section");
    const SimulationConfig& sim = *config.simulation;
    std::uint64_t seed = require_seed(config, "simulation");

    std::vector<Method> methods = config.estimators;
    if (methods.empty()) {
        methods = {Method::Diff, Method::OLS, Method::Match, Method::BH, Method::DR};
    }

    GeneratorSpec spec = sim.generator;
    spec.seed = seed;

    struct Row {
        int replicate;
        Method method;
        double mu1, mu0, tau, tau_true;
        bool ok;
    };
    std::vector<Row> rows(sim.replicates * methods.size());
    RunConfig est_cfg = config;
    est_cfg.se_replicates = 0;  // point estimates only inside the loop

    parallel_for(sim.replicates, config.threads, [&](int r) {
        GeneratedStudy study = generate_study(spec, r);
        for (size_t mi = 0; mi < methods.size(); ++mi) {
            Row& row = rows[r * methods.size() + mi];
            row.replicate = r;
            row.method = methods[mi];
            row.tau_true = study.tau_true;
            try {
                AteReport rep =
                    run_estimator(study.data, methods[mi], est_cfg, config.weighted);
                row.mu1 = rep.mu1;
                row.mu0 = rep.mu0;
                row.tau = rep.tau;
                row.ok = true;
            } catch (const Error&) {
                row.ok = false;
            }
        }
    });

    std::string csv = "replicate,estimator,mu1,mu0,tau,tau_true\n";
    for (const Row& row : rows) {
        if (!row.ok) continue;
        csv += std::to_string(row.replicate) + ',' + method_name(row.method) + ',' +
               fmt17(row.mu1) + ',' + fmt17(row.mu0) + ',' + fmt17(row.tau) + ',' +
               fmt17(row.tau_true) + '\n';
    }
    write_text_file((out_dir / "sim_results.csv").string(), csv);
    written.push_back("sim_results.csv");

    std::string summary = "estimator,replicates,mean_tau,sd_tau,mean_tau_true\n";
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        double s = 0.0, ss = 0.0, st = 0.0;
        int k = 0;
        for (int r = 0; r < sim.replicates; ++r) {
            const Row& row = rows[r * methods.size() + mi];
            if (!row.ok) continue;
            s += row.tau;
            st += row.tau_true;
            ++k;
        }
        if (k == 0) continue;
        double mean = s / k;
        for (int r = 0; r < sim.replicates; ++r) {
            const Row& row = rows[r * methods.size() + mi];
            if (row.ok) ss += (row.tau - mean) * (row.tau - mean);
        }
        summary += std::string(method_name(methods[mi])) + ',' + std::to_string(k) +
                   ',' + fmt17(mean) + ',' + fmt17(k > 1 ? std::sqrt(ss / (k - 1)) : 0.0) +
                   ',' + fmt17(st / k) + '\n';
    }
    write_text_file((out_dir / "sim_summary.csv").string(), summary);
    written.push_back("sim_summary.csv");
}

void do_power(const RunConfig& config, const std::filesystem::path& out_dir,
              std::vector<std::string>& written) {
    if (!config.simulation) throw ConfigError("config has no simulation section");
    const SimulationConfig& sim = *config.simulation;
    if (sim.distributions.empty()) {
        throw ConfigError("power study needs simulation.distributions");
    }
    std::uint64_t seed = require_seed(config, "the power study");

    PowerConfig pc;
    pc.base = sim.generator;
    pc.base.seed = seed;
    pc.distributions = sim.distributions;
    pc.levels = sim.levels;
    pc.replicates = sim.replicates;
    pc.B = sim.gof_B;
    pc.seed = seed;
    pc.threads = config.threads;
    pc.mle_nodes = config.quadrature_nodes;

    PowerResult res = power_study(pc);

    std::string csv = "distribution,statistic,level,rejection_rate,estimator,mean,se\n";
    for (const auto& row : res.rejections) {
        csv += row.distribution + ',' + row.statistic + "_t" +
               std::to_string(row.group) + ',' + fmt17(row.level) + ',' +
               fmt17(row.rejection_rate) + ",,,\n";
    }
    for (const auto& row : res.estimates) {
        csv += row.distribution + ",,,," + row.estimator + ',' + fmt17(row.mean) + ',' +
               fmt17(row.se) + '\n';
    }
    write_text_file((out_dir / "power.csv").string(), csv);
    written.push_back("power.csv");
}

}  // namespace

int run(const RunConfig& config, const std::string& command) {
    std::filesystem::path out_dir(config.out_dir);
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    std::string error;

    try {
        if (command == "estimate") {
            do_estimate(config, out_dir, written);
        } else if (command == "gof") {
            do_gof(config, out_dir, written);
        } else if (command == "simulate") {
            do_simulate(config, out_dir, written);
        } else if (command == "power") {
            do_power(config, out_dir, written);
        } else {
            throw ConfigError("unknown command '" + command + "'");
        }
    } catch (const std::exception& e) {
        error = e.what();
    }

    // manifest: config echo + version + seed; enough to re-run the experiment
    nlohmann::ordered_json manifest;
    manifest["version"] = "0.1.0";
    manifest["command"] = command;
    manifest["seed"] = config.seed ? nlohmann::ordered_json(*config.seed)
                                   : nlohmann::ordered_json(nullptr);
    manifest["threads"] = config.threads;
    manifest["outputs"] = written;
    manifest["ok"] = error.empty();
    if (!error.empty()) manifest["error"] = error;
    try {
        manifest["config"] = nlohmann::ordered_json::parse(config.raw);
    } catch (...) {
        manifest["config"] = config.raw;
    }
    write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");

    if (!error.empty()) {
        std::fprintf(stderr, "error: %s\n", error.c_str());
        return 1;
    }
    return 0;
}

}  // namespace ate
