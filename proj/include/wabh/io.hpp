#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/types.hpp"

namespace wabh {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    const char delim = line.find(',') != std::string::npos ? ',' : '\t';
    if (delim == '\t' && line.find('\t') == std::string::npos) {
        // whitespace-delimited fallback
        std::istringstream iss(line);
        std::string tok;
        while (iss >> tok) out.push_back(tok);
        return out;
    }
    std::string field;
    std::istringstream iss(line);
    while (std::getline(iss, field, delim)) out.push_back(field);
    return out;
}

inline double parse_double(const std::string& s, const char* what, std::size_t row) {
    std::string_view sv(s);
    while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front()))) sv.remove_prefix(1);
    while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back()))) sv.remove_suffix(1);
    double v{};
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc{} || ptr != sv.data() + sv.size()) {
        std::ostringstream msg;
        msg << what << ": non-numeric value '" << s << "' at row " << row;
        throw io_error(msg.str());
    }
    return v;
}

inline std::size_t parse_index(const std::string& s, const char* what, std::size_t row) {
    double v = parse_double(s, what, row);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        std::ostringstream msg;
        msg << what << ": invalid test id '" << s << "' at row " << row;
        throw io_error(msg.str());
    }
    return static_cast<std::size_t>(v);
}

// Skip comment/parameter-echo lines and return data lines.
inline std::vector<std::string> read_lines(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw io_error(std::string(what) + ": cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw io_error(std::string(what) + ": empty file " + path);
    return lines;
}

}  // namespace detail

/// Read a keyed per-test column file with header `test_id,<value>`; test_id
/// is the linearized row-major grid index. Every id in [0, M) must appear
/// exactly once.
inline std::vector<double> read_keyed_column(const std::string& path, std::size_t M,
                                             const char* what) {
    auto lines = detail::read_lines(path, what);
    std::vector<double> values(M);
    std::vector<char> seen(M, 0);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = detail::split_fields(lines[r]);
        if (fields.size() < 2) {
            std::ostringstream msg;
            msg << what << ": expected 2 columns at row " << r;
            throw io_error(msg.str());
        }
        std::size_t id = detail::parse_index(fields[0], what, r);
        if (id >= M) {
            std::ostringstream msg;
            msg << what << ": test id " << id << " out of range (M = " << M << ") at row " << r;
            throw io_error(msg.str());
        }
        if (seen[id]) {
            std::ostringstream msg;
            msg << what << ": duplicate test id " << id << " at row " << r;
            throw io_error(msg.str());
        }
        seen[id] = 1;
        values[id] = detail::parse_double(fields[1], what, r);
    }
    for (std::size_t m = 0; m < M; ++m)
        if (!seen[m]) {
            std::ostringstream msg;
            msg << what << ": missing test id " << m;
            throw io_error(msg.str());
        }
    return values;
}

/// Prior file: header `test_id,p_nonnull`, one row per candidate test.
inline PriorField ingest_prior(const std::string& path, std::size_t M) {
    PriorField f;
    f.p = read_keyed_column(path, M, "prior file");
    for (std::size_t m = 0; m < M; ++m)
        if (f.p[m] < 0.0 || f.p[m] > 1.0) {
            std::ostringstream msg;
            msg << "prior file: p_nonnull outside [0,1] for test id " << m;
            throw io_error(msg.str());
        }
    f.source = PriorSource::external_file;
    f.meta = path;
    return f;
}

inline void export_prior(const std::string& path, const PriorField& prior) {
    std::ofstream out(path);
    if (!out) throw io_error("export_prior: cannot open " + path);
    out << "test_id,p_nonnull\n";
    out.precision(17);
    for (std::size_t m = 0; m < prior.p.size(); ++m) out << m << ',' << prior.p[m] << '\n';
}

/// P-value file: header `test_id,pvalue`.
inline PValueVector ingest_pvalues(const std::string& path, std::size_t M) {
    PValueVector p;
    p.values = read_keyed_column(path, M, "p-value file");
    for (std::size_t m = 0; m < M; ++m)
        if (p.values[m] < 0.0 || p.values[m] > 1.0) {
            std::ostringstream msg;
            msg << "p-value file: value outside [0,1] for test id " << m;
            throw io_error(msg.str());
        }
    return p;
}

/// Count data rows (minus header) of a keyed column file.
inline std::size_t keyed_file_rows(const std::string& path, const char* what) {
    return detail::read_lines(path, what).size() - 1;
}

/// Subject data: header row, then one row per subject with the outcome in
/// the first column followed by binary lesion indicators.
inline Dataset read_dataset(const std::string& path) {
    auto lines = detail::read_lines(path, "data file");
    auto header = detail::split_fields(lines[0]);
    if (header.size() < 3) throw io_error("data file: need outcome plus at least two tests");
    Dataset d;
    d.M = header.size() - 1;
    d.n = lines.size() - 1;
    if (d.n < 4) throw io_error("data file: need at least 4 subjects");
    d.Y.resize(d.n);
    d.X.assign(d.n * d.M, 0);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = detail::split_fields(lines[r]);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "data file: row " << r << " has " << fields.size() << " fields, expected "
                << header.size();
            throw io_error(msg.str());
        }
        std::size_t i = r - 1;
        d.Y[i] = detail::parse_double(fields[0], "data file outcome", r);
        if (!std::isfinite(d.Y[i])) throw io_error("data file: non-finite outcome");
        for (std::size_t m = 0; m < d.M; ++m) {
            double v = detail::parse_double(fields[m + 1], "data file lesion", r);
            if (v != 0.0 && v != 1.0) {
                std::ostringstream msg;
                msg << "data file: lesion entry must be 0 or 1 at row " << r << ", test " << m;
                throw io_error(msg.str());
            }
            d.X[m * d.n + i] = static_cast<std::uint8_t>(v);
        }
    }
    return d;
}

/// Coordinates sidecar: header `test_id,x,y[,z]`.
inline HypothesisGrid read_coords(const std::string& path, std::size_t M) {
    auto lines = detail::read_lines(path, "coords file");
    auto header = detail::split_fields(lines[0]);
    if (header.size() != 3 && header.size() != 4)
        throw io_error("coords file: expected test_id,x,y[,z]");
    HypothesisGrid g;
    g.M = M;
    g.dims = header.size() == 4 ? 3 : 2;
    g.coords.assign(M, {0, 0, 0});
    g.candidate_mask.assign(M, 1);
    std::vector<char> seen(M, 0);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = detail::split_fields(lines[r]);
        if (fields.size() != header.size()) throw io_error("coords file: ragged row");
        std::size_t id = detail::parse_index(fields[0], "coords file", r);
        if (id >= M || seen[id]) throw io_error("coords file: bad or duplicate test id");
        seen[id] = 1;
        for (int dcoord = 0; dcoord < g.dims; ++dcoord)
            g.coords[id][dcoord] =
                static_cast<int>(detail::parse_double(fields[dcoord + 1], "coords file", r));
    }
    for (std::size_t m = 0; m < M; ++m)
        if (!seen[m]) {
            std::ostringstream msg;
            msg << "coords file: missing test id " << m;
            throw io_error(msg.str());
        }
    return g;
}

}  // namespace wabh
