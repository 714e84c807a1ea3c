#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string tmp_path(const char* name) {
    return std::string(WABH_TEST_TMPDIR) + "/" + name;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(WABH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (std::getline(iss, tok, delim)) out.push_back(tok);
    return out;
}

// Parse one column of a headed CSV, skipping '#' comment lines.
std::vector<std::string> csv_column(const std::string& path, const std::string& col) {
    auto text = slurp(path);
    auto lines = split(text, '\n');
    std::size_t header_idx = 0;
    while (header_idx < lines.size() && (lines[header_idx].empty() || lines[header_idx][0] == '#'))
        ++header_idx;
    REQUIRE(header_idx < lines.size());
    auto header = split(lines[header_idx], ',');
    std::size_t ci = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == col) ci = i;
    REQUIRE(ci < header.size());
    std::vector<std::string> out;
    for (std::size_t r = header_idx + 1; r < lines.size(); ++r) {
        if (lines[r].empty() || lines[r][0] == '#') continue;
        auto fields = split(lines[r], ',');
        REQUIRE(fields.size() > ci);
        out.push_back(fields[ci]);
    }
    return out;
}

void write_pvalues(const std::string& path, const std::vector<double>& p) {
    std::ofstream out(path);
    out << "test_id,pvalue\n";
    out.precision(17);
    for (std::size_t m = 0; m < p.size(); ++m) out << m << ',' << p[m] << '\n';
}

}  // namespace

TEST_CASE("cli: plain step-up on a prepared p-value file matches hand results") {
    auto pv = tmp_path("cli_pvals.csv");
    write_pvalues(pv, {0.01, 0.2, 0.02, 0.5, 0.9});
    auto prefix = tmp_path("cli_bh");
    int rc = run_cli("analyze --pvalues " + pv + " --procedure bh --alpha 0.05 --out " + prefix);
    REQUIRE(rc == 0);

    // With five tests at level 0.05 the step-up cutoff lands at the second
    // ordered p-value: threshold 0.02, rejecting tests 0 and 2.
    auto decisions = csv_column(prefix + "_tests.csv", "decision");
    REQUIRE(decisions == std::vector<std::string>{"1", "0", "1", "0", "0"});
    auto summary = slurp(prefix + "_summary.csv");
    CHECK(summary.find("n_rejected,2") != std::string::npos);
    CHECK(summary.find("# threshold = 0.02") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
    auto pv = tmp_path("cli_pvals2.csv");
    write_pvalues(pv, {0.01, 0.2, 0.02});

    SECTION("missing required input is a usage error") {
        CHECK(run_cli("analyze --procedure bh") == 1);
        CHECK(run_cli("simulate --B 2") == 1);  // --seed is required
        CHECK(run_cli("weights --stats " + pv) == 1);  // needs --tau or --eta
    }
    SECTION("unknown procedure is a usage error") {
        CHECK(run_cli("analyze --pvalues " + pv + " --procedure foo") == 1);
    }
    SECTION("eta must be positive") {
        CHECK(run_cli("analyze --pvalues " + pv + " --procedure wabh --eta 0") == 1);
    }
    SECTION("unreadable and malformed data files") {
        CHECK(run_cli("analyze --pvalues " + tmp_path("nope.csv") + " --procedure bh") == 2);
        auto bad = tmp_path("cli_bad.csv");
        std::ofstream(bad) << "test_id,pvalue\n0,0.5\n0,0.6\n";  // duplicate id
        CHECK(run_cli("analyze --pvalues " + bad + " --procedure bh") == 2);
        std::ofstream(bad) << "test_id,pvalue\n0,1.5\n";  // out of range
        CHECK(run_cli("analyze --pvalues " + bad + " --procedure bh") == 2);
        std::remove(bad.c_str());
    }
    SECTION("weighted procedures need per-test statistics") {
        CHECK(run_cli("analyze --pvalues " + pv + " --procedure wabh") == 1);
        CHECK(run_cli("analyze --pvalues " + pv + " --procedure ten-rule") == 1);
    }
}

TEST_CASE("cli: simulate is reproducible for a fixed seed") {
    auto out1 = tmp_path("sim_a.csv"), out2 = tmp_path("sim_b.csv");
    std::string base = "simulate --grid 10 --K 8 --theta 0.75 --n 80 --B 4 --seed 99 "
                       "--procedures bh abh --out ";
    REQUIRE(run_cli(base + out1) == 0);
    REQUIRE(run_cli(base + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));

    auto fdr_col = csv_column(out1, "fdr");
    auto proc_col = csv_column(out1, "procedure");
    REQUIRE(proc_col == std::vector<std::string>{"bh", "abh"});
    for (const auto& v : fdr_col) {
        double x = std::stod(v);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
    std::remove(out1.c_str());
    std::remove(out2.c_str());
}

TEST_CASE("cli: weights table for homogeneous statistics is all ones") {
    auto stats = tmp_path("cli_stats.csv");
    std::ofstream(stats) << "test_id,s_m\n0,0.2\n1,0.2\n2,0.2\n3,0.2\n";
    auto out = tmp_path("cli_weights.csv");
    REQUIRE(run_cli("weights --stats " + stats + " --tau 0.9 --prior-p 0.9 --out " + out) == 0);

    SECTION("a constant prior far below tau leaves no feasible weighting") {
        CHECK(run_cli("weights --stats " + stats + " --tau 0.9 --prior-p 0.1") == 3);
    }
    auto w = csv_column(out, "weight");
    REQUIRE(w.size() == 4);
    for (const auto& v : w) CHECK_THAT(std::stod(v), Catch::Matchers::WithinAbs(1.0, 1e-9));

    SECTION("nonpositive statistics are a data error") {
        std::ofstream(stats) << "test_id,s_m\n0,0.2\n1,0\n";
        CHECK(run_cli("weights --stats " + stats + " --tau 0.9") == 2);
    }
    std::remove(stats.c_str());
    std::remove(out.c_str());
}

TEST_CASE("cli: end-to-end analysis on subject data") {
    // Small synthetic dataset: 24 subjects, 3 tests. Test 0 tracks the
    // outcome, test 1 is constant (degenerate), test 2 is noise.
    auto data = tmp_path("cli_data.csv");
    {
        std::ofstream out(data);
        out << "y,v0,v1,v2\n";
        for (int i = 0; i < 24; ++i) {
            double y = (i % 2 == 0) ? 1.0 : -1.0;
            int x0 = (i % 2 == 0) ? (i % 4 != 2) : (i % 8 == 1);
            int x2 = (i * 7 + 3) % 5 < 2;
            out << y << ',' << x0 << ",1," << x2 << '\n';
        }
    }
    auto prior = tmp_path("cli_prior.csv");
    std::ofstream(prior) << "test_id,p_nonnull\n0,0.3\n1,0.3\n2,0.3\n";
    auto prefix = tmp_path("cli_an");
    REQUIRE(run_cli("analyze --data " + data + " --procedure wabh --prior-file " + prior +
                    " --tau 0.9 --out " + prefix) == 0);
    auto status = csv_column(prefix + "_tests.csv", "status");
    REQUIRE(status.size() == 3);
    CHECK(status[0] == "ok");
    CHECK(status[1] == "degenerate");
    CHECK(status[2] == "ok");
    auto weights = csv_column(prefix + "_tests.csv", "weight");
    CHECK(std::stod(weights[1]) == 0.0);  // excluded test carries no weight

    auto summary = slurp(prefix + "_summary.csv");
    CHECK(summary.find("# n_candidates = 2") != std::string::npos);
    CHECK(summary.find("# n_excluded = 1") != std::string::npos);
    CHECK(summary.find("pi0_hat,0.7") != std::string::npos);  // mean of 1 - 0.3

    SECTION("a vanishing prior makes the weight solve infeasible") {
        // Two candidates and no p-values above kappa drive the built-in
        // constant prior to zero, which has no weight solution: numeric
        // failure, exit 3.
        CHECK(run_cli("analyze --data " + data + " --procedure wabh --prior constant "
                      "--pi0 storey:0.5 --tau 0.9 --out " + prefix) == 3);
    }
    std::remove(data.c_str());
    std::remove(prior.c_str());
}
