// Command-line front end: analyze (end-to-end weighted testing on subject
// data or prepared p-values), simulate (Monte Carlo benchmark), and weights
// (weight tables from per-test statistics).

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wabh/wabh.hpp"

namespace {

constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_numeric = 3;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

struct AnalyzeOptions {
    std::string data_path, coords_path, pvalue_path, prior_path, out_prefix = "wabh";
    std::string procedure = "wabh";
    std::string transform = "identity";
    std::string pi0 = "prior";
    std::string prior_source = "spatial";
    double alpha = 0.05;
    std::optional<double> tau;
    std::optional<double> eta;
    double inconclusive_cutoff = 0.1;
    double spatial_bandwidth = wabh::spatial_default_bandwidth;
    double spatial_tau_s = wabh::spatial_default_tau_s;
};

wabh::Pi0Spec parse_pi0(const std::string& spec) {
    if (spec == "prior") return wabh::Pi0Spec::prior_mean();
    if (spec.rfind("storey", 0) == 0) {
        double kappa = 0.5;
        auto colon = spec.find(':');
        if (colon != std::string::npos) kappa = std::stod(spec.substr(colon + 1));
        return wabh::Pi0Spec::storey(kappa);
    }
    throw CLI::ValidationError("--pi0 must be 'prior' or 'storey[:kappa]'");
}

int run_analyze(const AnalyzeOptions& opt) {
    using namespace wabh;
    AnalysisReport rep;
    rep.alpha = opt.alpha;
    rep.parameters["procedure"] = opt.procedure;
    rep.parameters["alpha"] = fmt(opt.alpha);
    rep.parameters["inconclusive_cutoff"] = fmt(opt.inconclusive_cutoff);

    // Gather per-test inputs from either raw subject data or a prepared
    // p-value file.
    std::size_t M = 0;
    std::vector<TestSummary> fits;
    PValueVector pvals_full;
    HypothesisGrid grid;
    bool have_grid = false, have_stats = false;

    if (!opt.data_path.empty()) {
        Dataset data = read_dataset(opt.data_path);
        data.covariate_transform =
            opt.transform == "logit" ? Transform::logit_transform : Transform::identity;
        M = data.M;
        fits = fit_all_tests(data);
        have_stats = true;
        pvals_full.values.resize(M);
        for (std::size_t m = 0; m < M; ++m) pvals_full.values[m] = fits[m].pvalue;
        rep.parameters["data"] = opt.data_path;
        rep.parameters["transform"] = opt.transform;
        rep.parameters["n_subjects"] = std::to_string(data.n);
    } else {
        M = keyed_file_rows(opt.pvalue_path, "p-value file");
        pvals_full = ingest_pvalues(opt.pvalue_path, M);
        fits.assign(M, TestSummary{});
        for (std::size_t m = 0; m < M; ++m) fits[m].pvalue = pvals_full.values[m];
        rep.parameters["pvalues"] = opt.pvalue_path;
    }
    if (!opt.coords_path.empty()) {
        grid = read_coords(opt.coords_path, M);
        have_grid = true;
        rep.parameters["coords"] = opt.coords_path;
    }

    // Candidate set: tests with a usable fit.
    std::vector<std::size_t> cand;
    for (std::size_t m = 0; m < M; ++m)
        if (fits[m].status == FitStatus::ok || fits[m].status == FitStatus::separated)
            cand.push_back(m);
    if (cand.empty()) throw io_error("no candidate tests after exclusions");
    rep.parameters["n_tests"] = std::to_string(M);
    rep.parameters["n_candidates"] = std::to_string(cand.size());
    rep.parameters["n_excluded"] = std::to_string(M - cand.size());

    PValueVector p;
    std::vector<double> s_m(cand.size()), xbar(cand.size());
    p.values.resize(cand.size());
    for (std::size_t j = 0; j < cand.size(); ++j) {
        p.values[j] = fits[cand[j]].pvalue;
        s_m[j] = fits[cand[j]].s_m;
        xbar[j] = fits[cand[j]].xbar;
    }

    // Prior, when the procedure needs one.
    PriorField prior;
    bool have_prior = false;
    auto load_prior = [&]() {
        if (!opt.prior_path.empty()) {
            PriorField full = ingest_prior(opt.prior_path, M);
            prior.source = full.source;
            prior.meta = full.meta;
            prior.p.resize(cand.size());
            for (std::size_t j = 0; j < cand.size(); ++j) prior.p[j] = full.p[cand[j]];
            rep.parameters["prior"] = "file:" + opt.prior_path;
        } else if (opt.prior_source == "spatial") {
            if (!have_grid)
                throw CLI::ValidationError("spatial prior requires --coords");
            HypothesisGrid g = grid;
            g.candidate_mask.assign(M, 0);
            for (std::size_t m : cand) g.candidate_mask[m] = 1;
            PriorField full = spatial_kernel_prior(pvals_full, g, opt.spatial_bandwidth,
                                                   opt.spatial_tau_s);
            prior.source = full.source;
            prior.meta = full.meta;
            prior.p.resize(cand.size());
            for (std::size_t j = 0; j < cand.size(); ++j) prior.p[j] = full.p[cand[j]];
            rep.parameters["prior"] = "spatial (" + prior.meta + ")";
        } else {
            prior = constant_prior(p);
            rep.parameters["prior"] = "constant (" + prior.meta + ")";
        }
        have_prior = true;
    };

    // Weights + decision per procedure.
    WeightScheme w = WeightScheme::unit(cand.size());
    Pi0Spec pi0 = Pi0Spec::fixed(1.0);
    if (opt.procedure == "bh") {
        // defaults
    } else if (opt.procedure == "abh") {
        pi0 = parse_pi0(opt.pi0 == "prior" ? "storey:0.5" : opt.pi0);
    } else if (opt.procedure == "ten-rule") {
        if (!have_stats) throw CLI::ValidationError("ten-rule requires --data");
        w = ten_percent_rule(xbar);
    } else if (opt.procedure == "wbh" || opt.procedure == "wabh") {
        if (!have_stats) throw CLI::ValidationError(opt.procedure + " requires --data");
        load_prior();
        if (opt.eta) {
            if (!(*opt.eta > 0.0))
                throw CLI::ValidationError("--eta must be positive (g_m must be positive)");
            w = fixed_eta_weights(s_m, prior.p, *opt.eta, opt.alpha);
            rep.parameters["eta"] = fmt(*opt.eta);
        } else {
            double tau = opt.tau.value_or(0.9);
            w = mmw_weights(s_m, prior.p, tau, opt.alpha);
            rep.parameters["tau"] = fmt(tau);
        }
        if (opt.procedure == "wabh") pi0 = parse_pi0(opt.pi0);
    } else {
        throw CLI::ValidationError("unknown --procedure " + opt.procedure);
    }
    if (pi0.mode == Pi0Spec::Mode::prior_mean && !have_prior) load_prior();

    DecisionSet d = wabh::wabh(p, w, opt.alpha, pi0, have_prior ? &prior : nullptr,
                               opt.inconclusive_cutoff);

    rep.n_rejected = d.n_rejected;
    rep.impact = d.impact;
    rep.eta = w.eta;
    rep.lambda_hat = w.lambda_hat;
    rep.pi0_hat = d.pi0_hat;
    rep.parameters["pi0_hat"] = fmt(d.pi0_hat);
    rep.parameters["threshold"] = fmt(d.threshold);
    rep.parameters["weight_source"] = to_string(w.source);

    rep.rows.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        ReportRow& r = rep.rows[m];
        r.test_id = m;
        if (have_grid) {
            r.coords = grid.coords[m];
            r.dims = grid.dims;
        }
        r.xbar = fits[m].xbar;
        r.s_m = fits[m].s_m;
        r.pvalue = fits[m].pvalue;
        r.weight = 0.0;
        r.q_value = std::numeric_limits<double>::infinity();
        r.decision = false;
        r.inconclusive = true;
        r.status = to_string(fits[m].status);
    }
    for (std::size_t j = 0; j < cand.size(); ++j) {
        ReportRow& r = rep.rows[cand[j]];
        r.weight = w.weights[j];
        r.p_nonnull = have_prior ? prior.p[j] : 0.0;
        r.q_value = d.q_values[j];
        r.decision = d.decisions[j] != 0;
        r.inconclusive = w.weights[j] < opt.inconclusive_cutoff;
    }

    write_report_rows(opt.out_prefix + "_tests.csv", rep);
    write_report_summary(opt.out_prefix + "_summary.csv", rep);
    std::cout << "rejected " << rep.n_rejected << " of " << cand.size() << " candidate tests"
              << " (threshold " << fmt(d.threshold) << ", pi0_hat " << fmt(d.pi0_hat) << ")\n";
    return 0;
}

struct SimulateOptions {
    wabh::SimConfig cfg;
    std::vector<std::string> procedures{"bh", "abh", "wabh-mmw"};
    double tau = 0.9;
    double kappa = 0.05;
    std::string out_path;
    bool full_scale = false;
};

int run_simulate(SimulateOptions& opt) {
    using namespace wabh;
    if (opt.full_scale) {
        opt.cfg.nx = opt.cfg.ny = 100;
        opt.cfg.B = 500;
    }
    for (const std::string& name : opt.procedures) {
        if (name == "bh") opt.cfg.procedures.push_back(ProcedureConfig::bh());
        else if (name == "abh") opt.cfg.procedures.push_back(ProcedureConfig::abh(opt.kappa));
        else if (name == "ten-rule") opt.cfg.procedures.push_back(ProcedureConfig::wbh_ten());
        else if (name == "wabh-mmw") opt.cfg.procedures.push_back(ProcedureConfig::wabh_mmw(opt.tau));
        else if (name == "wabh-storey")
            opt.cfg.procedures.push_back(ProcedureConfig::wabh_storey(opt.tau));
        else throw CLI::ValidationError("unknown procedure " + name);
    }
    std::vector<SimMetrics> metrics = run_experiment(opt.cfg);
    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path);
        if (!out) throw io_error("cannot open " + opt.out_path);
        out << "# seed = " << opt.cfg.seed << "\n# n = " << opt.cfg.n << "\n# grid = "
            << opt.cfg.nx << "x" << opt.cfg.ny << "\n# alpha = " << opt.cfg.alpha << "\n";
        write_sim_table(out, opt.cfg, metrics);
    }
    write_sim_table(std::cout, opt.cfg, metrics);
    return 0;
}

struct WeightsOptions {
    std::string stats_path, out_path;
    std::vector<double> etas;
    std::optional<double> tau;
    double alpha = 0.05;
    double prior_p = 0.1;
};

int run_weights(const WeightsOptions& opt) {
    using namespace wabh;
    std::size_t M = keyed_file_rows(opt.stats_path, "stats file");
    std::vector<double> s = read_keyed_column(opt.stats_path, M, "stats file");
    for (double v : s)
        if (!(v > 0.0)) throw io_error("stats file: S_m must be positive");
    std::vector<double> p(M, opt.prior_p);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!opt.out_path.empty()) {
        file.open(opt.out_path);
        if (!file) throw io_error("cannot open " + opt.out_path);
        out = &file;
    }
    *out << std::setprecision(12);
    *out << "scheme,test_id,s_m,p_m,weight\n";
    auto emit = [&](const std::string& scheme, const WeightScheme& w) {
        for (std::size_t m = 0; m < M; ++m)
            *out << scheme << ',' << m << ',' << s[m] << ',' << p[m] << ',' << w.weights[m]
                 << '\n';
    };
    if (opt.tau) {
        WeightScheme w = mmw_weights(s, p, *opt.tau, opt.alpha);
        std::cerr << "mmw: eta_tilde = " << w.eta << ", lambda_hat = " << w.lambda_hat << "\n";
        emit("mmw_tau" + fmt(*opt.tau), w);
    }
    for (double eta : opt.etas) {
        WeightScheme w = fixed_eta_weights(s, p, eta, opt.alpha);
        emit("eta" + fmt(eta), w);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted adaptive BH multiple testing toolkit"};
    app.require_subcommand(1);

    AnalyzeOptions an;
    CLI::App* analyze = app.add_subcommand("analyze", "Run a testing procedure on data");
    auto* data_opt = analyze->add_option("--data", an.data_path,
                                         "Subject data file (outcome + lesion matrix)");
    auto* pv_opt = analyze->add_option("--pvalues", an.pvalue_path,
                                       "Prepared p-value file (test_id,pvalue)");
    data_opt->excludes(pv_opt);
    analyze->add_option("--coords", an.coords_path, "Coordinates sidecar (test_id,x,y[,z])");
    analyze->add_option("--prior-file", an.prior_path, "External prior file (test_id,p_nonnull)");
    analyze->add_option("--prior", an.prior_source, "Built-in prior: spatial|constant")
        ->check(CLI::IsMember({"spatial", "constant"}));
    analyze->add_option("--procedure", an.procedure, "wabh|bh|abh|wbh|ten-rule")
        ->check(CLI::IsMember({"wabh", "bh", "abh", "wbh", "ten-rule"}));
    analyze->add_option("--alpha", an.alpha, "FDR level")->check(CLI::Range(1e-6, 0.999999));
    auto* tau_opt = analyze->add_option("--tau", an.tau, "MMW tuning level");
    auto* eta_opt = analyze->add_option("--eta", an.eta, "Fixed effect size eta");
    tau_opt->excludes(eta_opt);
    analyze->add_option("--transform", an.transform, "Covariate transform: identity|logit")
        ->check(CLI::IsMember({"identity", "logit"}));
    analyze->add_option("--pi0", an.pi0, "pi0 estimate: prior | storey[:kappa]");
    analyze->add_option("--inconclusive-cutoff", an.inconclusive_cutoff,
                        "Weight below which a test is reported inconclusive");
    analyze->add_option("--bandwidth", an.spatial_bandwidth, "Spatial prior kernel bandwidth");
    analyze->add_option("--out", an.out_prefix, "Output file prefix");

    SimulateOptions sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo benchmark");
    simulate->add_option("--grid", sim.cfg.nx, "Square grid side length");
    simulate->add_option("--K", sim.cfg.K, "Number of non-null tests");
    simulate->add_option("--C", sim.cfg.C, "Power heterogeneity scale");
    simulate->add_option("--s", sim.cfg.s, "Signal clustering scale");
    simulate->add_option("--theta", sim.cfg.theta, "Effect size scale");
    simulate->add_option("--n", sim.cfg.n, "Subjects per replicate");
    simulate->add_option("--B", sim.cfg.B, "Replicates");
    simulate->add_option("--alpha", sim.cfg.alpha, "FDR level");
    simulate->add_option("--seed", sim.cfg.seed, "RNG seed")->required();
    simulate->add_option("--procedures", sim.procedures,
                         "bh|abh|ten-rule|wabh-mmw|wabh-storey");
    simulate->add_option("--tau", sim.tau, "MMW tuning level");
    simulate->add_option("--kappa", sim.kappa, "Storey threshold for abh");
    simulate->add_option("--out", sim.out_path, "Results table path");
    simulate->add_flag("--full-scale", sim.full_scale, "100x100 grid, B=500");

    WeightsOptions wt;
    CLI::App* weights = app.add_subcommand("weights", "Emit weight tables from S_m values");
    weights->add_option("--stats", wt.stats_path, "Per-test statistics file (test_id,s_m)")
        ->required();
    weights->add_option("--eta", wt.etas, "Fixed eta values");
    weights->add_option("--tau", wt.tau, "MMW tuning level");
    weights->add_option("--alpha", wt.alpha, "FDR level");
    weights->add_option("--prior-p", wt.prior_p, "Homogeneous non-null prior probability");
    weights->add_option("--out", wt.out_path, "Output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? exit_usage : 0;
    }

    try {
        if (*analyze) {
            if (an.data_path.empty() && an.pvalue_path.empty())
                throw CLI::ValidationError("analyze requires --data or --pvalues");
            return run_analyze(an);
        }
        if (*simulate) {
            sim.cfg.ny = sim.cfg.nx;
            return run_simulate(sim);
        }
        if (*weights) {
            if (!wt.tau && wt.etas.empty())
                throw CLI::ValidationError("weights requires --tau or --eta");
            return run_weights(wt);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const wabh::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const wabh::dimension_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const wabh::value_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const wabh::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_usage;
}
