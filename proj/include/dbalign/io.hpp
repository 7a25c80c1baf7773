#pragma once
// On-disk formats: CSV matrices, permutations, risk tables.
//
// Matrix CSV: first line "n,d", then n lines of d values printed with 17
// significant digits, so a write/read round trip is exact.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dbalign/config.hpp"
#include "dbalign/error.hpp"
#include "dbalign/experiments.hpp"
#include "dbalign/models.hpp"
#include "dbalign/report.hpp"

namespace dbalign {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_matrix_csv(std::ostream& out, const Matrix& a) {
    out << a.rows() << ',' << a.cols() << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << format_double(a(i, j));
        }
        out << '\n';
    }
}

inline Matrix parse_matrix_csv(const std::string& text, const std::string& source = "<input>") {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw ValidationError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!detail::trim(line).empty()) return true;
        }
        return false;
    };
    if (!next_line()) {
        lineno = 1;
        fail("empty matrix file");
    }
    const auto header = detail::split(detail::trim(line), ',');
    if (header.size() != 2) fail("header must be 'n,d'");
    const auto n = detail::to_uint(header[0]), d = detail::to_uint(header[1]);
    if (!n || !d || *n < 1 || *d < 1) fail("header must hold positive integers n,d");
    Matrix a(static_cast<Eigen::Index>(*n), static_cast<Eigen::Index>(*d));
    for (std::uint64_t i = 0; i < *n; ++i) {
        if (!next_line()) fail("expected " + std::to_string(*n) + " data rows, found " + std::to_string(i));
        const auto cells = detail::split(detail::trim(line), ',');
        if (cells.size() != *d) fail("expected " + std::to_string(*d) + " values, found " + std::to_string(cells.size()));
        for (std::uint64_t j = 0; j < *d; ++j) {
            const auto v = detail::to_double(cells[j]);
            if (!v) fail("'" + cells[j] + "' is not a number");
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
        }
    }
    if (next_line()) fail("trailing data after " + std::to_string(*n) + " rows");
    return a;
}

inline Matrix load_matrix_csv(const std::string& path) { return parse_matrix_csv(read_text_file(path), path); }

inline void write_permutation(std::ostream& out, const std::vector<std::size_t>& sigma) {
    for (std::size_t i = 0; i < sigma.size(); ++i) out << (i ? "," : "") << sigma[i];
    out << '\n';
}

inline std::vector<std::size_t> parse_permutation(const std::string& text, std::size_t n) {
    std::vector<std::size_t> sigma;
    for (const auto& cell : detail::split(detail::trim(text), ',')) {
        const auto v = detail::to_uint(cell);
        if (!v) throw ValidationError("permutation entry '" + cell + "' is not a nonnegative integer");
        sigma.push_back(static_cast<std::size_t>(*v));
    }
    validate_permutation(sigma, n);
    return sigma;
}

// ---------------------------------------------------------------------------
// Risk tables

inline constexpr const char* kRiskCsvHeader = "model_kind,param,n,d,detector,threshold,fpr,fnr,risk,stderr,trials,seed";

inline void write_risk_csv_row(std::ostream& out, const RiskEstimate& r) {
    out << r.model_kind << ',' << format_double(r.param) << ',' << r.n << ',' << r.d << ',' << to_string(r.detector)
        << ',' << format_double(r.threshold) << ',' << format_double(r.fpr) << ',' << format_double(r.fnr) << ','
        << format_double(r.risk) << ',' << format_double(r.stderr_) << ',' << r.trials << ',' << r.seed << '\n';
}

inline Json risk_json(const RiskEstimate& r) {
    Json j;
    j["model_kind"] = r.model_kind;
    j["param"] = json_number(r.param);
    j["n"] = r.n;
    j["d"] = r.d;
    j["detector"] = to_string(r.detector);
    j["threshold"] = json_number(r.threshold);
    j["fpr"] = r.fpr;
    j["fnr"] = r.fnr;
    j["risk"] = r.risk;
    j["stderr"] = r.stderr_;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    return j;
}

// Failed sweep points keep the key columns and leave the numeric ones empty;
// the `error` column is appended only when some row failed.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    bool any_error = false;
    for (const auto& r : rows) any_error = any_error || !r.estimate;
    out << kRiskCsvHeader << (any_error ? ",error" : "") << '\n';
    for (const auto& r : rows) {
        if (r.estimate) {
            std::ostringstream line;
            write_risk_csv_row(line, *r.estimate);
            std::string s = line.str();
            if (any_error) s.insert(s.size() - 1, ",");
            out << s;
        } else {
            std::string msg = r.error;
            for (auto& c : msg)
                if (c == '"') c = '\'';
            out << r.model_kind << ',' << format_double(r.param) << ',' << r.n << ',' << r.d << ','
                << to_string(r.detector) << ",,,,,,,," << '"' << msg << '"' << '\n';
        }
    }
}

inline Json sweep_json(const std::vector<SweepRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        if (r.estimate) {
            arr.push_back(risk_json(*r.estimate));
        } else {
            Json j;
            j["model_kind"] = r.model_kind;
            j["param"] = json_number(r.param);
            j["n"] = r.n;
            j["d"] = r.d;
            j["detector"] = to_string(r.detector);
            j["error"] = r.error;
            j["capacity_error"] = r.capacity_error;
            arr.push_back(j);
        }
    }
    return arr;
}

}  // namespace dbalign
