#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/sim.hpp"
#include "wabh/types.hpp"

namespace wabh {

/// One analyzed test as it appears in the per-test report.
struct ReportRow {
    std::size_t test_id = 0;
    std::array<int, 3> coords{0, 0, 0};
    int dims = 2;
    double xbar = 0.0;
    double s_m = 0.0;
    double p_nonnull = 0.0;
    double weight = 1.0;
    double pvalue = 1.0;
    double q_value = 1.0;
    bool decision = false;
    bool inconclusive = false;
    std::string status = "ok";
};

struct AnalysisReport {
    std::vector<ReportRow> rows;
    std::size_t n_rejected = 0;
    WeightImpact impact;
    double eta = 0.0;
    double lambda_hat = 0.0;
    double pi0_hat = 1.0;
    double alpha = 0.05;
    // All effective parameters, echoed into output headers so a run is
    // reproducible from its own report.
    std::map<std::string, std::string> parameters;
};

inline void write_parameter_header(std::ostream& out, const AnalysisReport& rep) {
    for (const auto& [key, value] : rep.parameters) out << "# " << key << " = " << value << '\n';
}

inline void write_report_rows(const std::string& path, const AnalysisReport& rep) {
    std::ofstream out(path);
    if (!out) throw io_error("report: cannot open " + path);
    out << std::setprecision(12);
    write_parameter_header(out, rep);
    out << "test_id,x,y";
    if (!rep.rows.empty() && rep.rows.front().dims == 3) out << ",z";
    out << ",xbar,s_m,p_nonnull,weight,pvalue,q_value,decision,inconclusive,status\n";
    for (const ReportRow& r : rep.rows) {
        out << r.test_id << ',' << r.coords[0] << ',' << r.coords[1];
        if (r.dims == 3) out << ',' << r.coords[2];
        out << ',' << r.xbar << ',' << r.s_m << ',' << r.p_nonnull << ',' << r.weight << ','
            << r.pvalue << ',' << r.q_value << ',' << (r.decision ? 1 : 0) << ','
            << (r.inconclusive ? 1 : 0) << ',' << r.status << '\n';
    }
}

inline void write_report_summary(const std::string& path, const AnalysisReport& rep) {
    std::ofstream out(path);
    if (!out) throw io_error("report: cannot open " + path);
    out << std::setprecision(12);
    write_parameter_header(out, rep);
    out << "metric,value\n";
    out << "n_rejected," << rep.n_rejected << '\n';
    out << "frac_upweighted," << rep.impact.frac_upweighted << '\n';
    out << "frac_inconclusive," << rep.impact.frac_inconclusive << '\n';
    out << "max_weight," << rep.impact.max_weight << '\n';
    out << "eta," << rep.eta << '\n';
    out << "lambda_hat," << rep.lambda_hat << '\n';
    out << "pi0_hat," << rep.pi0_hat << '\n';
    out << "alpha," << rep.alpha << '\n';
}

inline void write_sim_table(std::ostream& out, const SimConfig& cfg,
                            const std::vector<SimMetrics>& metrics) {
    out << std::setprecision(12);
    out << "procedure,C,s,K,theta,B,fdr,fdr_se,power,power_se\n";
    for (const SimMetrics& m : metrics) {
        out << m.procedure << ',' << cfg.C << ',' << cfg.s << ',' << cfg.K << ',' << cfg.theta
            << ',' << cfg.B << ',' << m.fdr << ',' << m.fdr_se << ',' << m.power << ','
            << m.power_se << '\n';
    }
}

}  // namespace wabh
