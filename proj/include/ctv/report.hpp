#pragma once

// Result emitters: per-team accuracy tables with Mean/Std footers,
// cross-team matrix heatmaps as standalone SVG, and aggregated
// learning-curve CSVs. All numbers print at two decimals in percent
// terms, and every emitter is a pure function of its inputs so
// re-emission is byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctv/baseline.hpp"
#include "ctv/metrics.hpp"

namespace ctv {

struct TableRow {
    std::string team;
    double val_acc = 0.0;   // percent
    double test_acc = 0.0;  // percent
    double vtg = 0.0;       // percent points
};

enum class TableFormat { CSV, JSON };

inline TableFormat table_format_from_name(const std::string& name) {
    if (name == "csv") return TableFormat::CSV;
    if (name == "json") return TableFormat::JSON;
    throw std::invalid_argument("unknown table format: " + name);
}

// Rows from per-fold results, in focal-team order; accuracies scale to
// percent and the gap is recomputed from the scaled values.
inline std::vector<TableRow> table_rows_from_runs(
    const std::vector<RunResult>& runs) {
    std::vector<TableRow> rows;
    for (const auto& run : runs) {
        TableRow row;
        row.team = run.focal_team;
        row.val_acc = run.val_acc * 100.0;
        row.test_acc = run.pooled_test_acc * 100.0;
        row.vtg = vtg(row.val_acc, row.test_acc);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const TableRow& a, const TableRow& b) { return a.team < b.team; });
    return rows;
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

struct TableFooter {
    double mean_val = 0, mean_test = 0, mean_vtg = 0;
    double std_val = 0, std_test = 0, std_vtg = 0;
};

inline TableFooter table_footer(const std::vector<TableRow>& rows) {
    std::vector<double> vals, tests, vtgs;
    for (const auto& row : rows) {
        vals.push_back(row.val_acc);
        tests.push_back(row.test_acc);
        vtgs.push_back(row.vtg);
    }
    TableFooter f;
    std::tie(f.mean_val, f.std_val) = aggregate(vals);
    std::tie(f.mean_test, f.std_test) = aggregate(tests);
    std::tie(f.mean_vtg, f.std_vtg) = aggregate(vtgs);
    return f;
}

// Two-decimal rounding applied before JSON emission so both formats
// carry the same numbers.
inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace detail

inline void emit_results_table(const std::vector<TableRow>& rows,
                               const std::filesystem::path& path,
                               TableFormat format) {
    if (rows.empty()) throw std::invalid_argument("no rows to emit");
    const auto footer = detail::table_footer(rows);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write table: " + path.string());

    if (format == TableFormat::CSV) {
        out << "team,val_acc,test_acc,vtg\n";
        for (const auto& row : rows)
            out << detail::csv_quote(row.team) << ","
                << format_fixed(row.val_acc, 2) << ","
                << format_fixed(row.test_acc, 2) << ","
                << format_fixed(row.vtg, 2) << "\n";
        out << "Mean," << format_fixed(footer.mean_val, 2) << ","
            << format_fixed(footer.mean_test, 2) << ","
            << format_fixed(footer.mean_vtg, 2) << "\n";
        out << "Std," << format_fixed(footer.std_val, 2) << ","
            << format_fixed(footer.std_test, 2) << ","
            << format_fixed(footer.std_vtg, 2) << "\n";
    } else {
        nlohmann::ordered_json j;
        j["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : rows)
            j["rows"].push_back({{"team", row.team},
                                 {"val_acc", detail::round2(row.val_acc)},
                                 {"test_acc", detail::round2(row.test_acc)},
                                 {"vtg", detail::round2(row.vtg)}});
        j["footer"] = {{"mean",
                        {{"val_acc", detail::round2(footer.mean_val)},
                         {"test_acc", detail::round2(footer.mean_test)},
                         {"vtg", detail::round2(footer.mean_vtg)}}},
                       {"std",
                        {{"val_acc", detail::round2(footer.std_val)},
                         {"test_acc", detail::round2(footer.std_test)},
                         {"vtg", detail::round2(footer.std_vtg)}}}};
        out << j.dump(2) << "\n";
    }
    if (!out.good()) throw std::runtime_error("table write failed");
}

inline void emit_results_table(const std::vector<RunResult>& runs,
                               const std::filesystem::path& path,
                               TableFormat format) {
    if (runs.empty()) throw std::invalid_argument("no runs to emit");
    emit_results_table(table_rows_from_runs(runs), path, format);
}

// ---------------------------------------------------------------- SVG

namespace detail {

// Sequential light-to-dark ramp; endpoints are fixed and documented in
// the README. t is clamped to [0,1].
inline std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r0 = 0xf7, g0 = 0xfb, b0 = 0xff;  // light end
    const int r1 = 0x08, g1 = 0x30, b1 = 0x6b;  // dark end
    const int r = static_cast<int>(std::lround(r0 + (r1 - r0) * t));
    const int g = static_cast<int>(std::lround(g0 + (g1 - g0) * t));
    const int b = static_cast<int>(std::lround(b0 + (b1 - b0) * t));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

// Heatmap of a cross-team matrix. Values are annotated verbatim at two
// decimals; the color scale runs linearly from the matrix minimum
// (light) to its maximum (dark).
inline void emit_matrix_svg(const CrossTeamMatrix& matrix,
                            const std::filesystem::path& path) {
    const std::size_t n = matrix.teams.size();
    if (n == 0) throw std::invalid_argument("empty matrix");
    for (const auto& row : matrix.values)
        if (row.size() != n)
            throw std::invalid_argument("matrix is not square");
    if (matrix.values.size() != n)
        throw std::invalid_argument("matrix is not square");

    double lo = matrix.values[0][0], hi = matrix.values[0][0];
    for (const auto& row : matrix.values)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = hi - lo;

    const int cell = 64;
    const int left = 150;
    const int top = 150;
    const int width = left + cell * static_cast<int>(n) + 20;
    const int height = top + cell * static_cast<int>(n) + 20;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write svg: " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
        << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
        << " " << height << "\">\n";
    out << "  <style>text{font-family:sans-serif}</style>\n";

    for (std::size_t j = 0; j < n; ++j) {
        const int x = left + static_cast<int>(j) * cell + cell / 2;
        out << "  <text x=\"" << x << "\" y=\"" << (top - 10)
            << "\" font-size=\"12\" text-anchor=\"start\" transform=\"rotate(-45 "
            << x << " " << (top - 10) << ")\">"
            << detail::xml_escape(matrix.teams[j]) << "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = top + static_cast<int>(i) * cell + cell / 2 + 4;
        out << "  <text x=\"" << (left - 8) << "\" y=\"" << y
            << "\" font-size=\"12\" text-anchor=\"end\">"
            << detail::xml_escape(matrix.teams[i]) << "</text>\n";
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = matrix.values[i][j];
            const double t = (span > 0.0) ? (v - lo) / span : 0.5;
            const int x = left + static_cast<int>(j) * cell;
            const int y = top + static_cast<int>(i) * cell;
            out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << detail::ramp_color(t)
                << "\"/>\n";
            out << "  <text x=\"" << (x + cell / 2) << "\" y=\"" << (y + cell / 2 + 4)
                << "\" font-size=\"12\" text-anchor=\"middle\" fill=\""
                << (t > 0.6 ? "#ffffff" : "#1a1a1a") << "\">"
                << format_fixed(v, 2) << "</text>\n";
        }
    }
    out << "</svg>\n";
    if (!out.good()) throw std::runtime_error("svg write failed");
}

// --------------------------------------------------------------- curves

// Aggregate per-fold learning curves into a per-epoch mean/spread CSV,
// in percent. Spread is the population standard deviation.
inline void emit_curves(const std::vector<LearningCurve>& folds,
                        const std::filesystem::path& path) {
    if (folds.empty()) throw std::invalid_argument("no curves to aggregate");
    const std::size_t epochs = folds[0].epochs.size();
    for (const auto& fold : folds)
        if (fold.epochs.size() != epochs)
            throw std::invalid_argument("folds have unequal epoch counts");
    if (epochs == 0) throw std::invalid_argument("curves are empty");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write curves: " + path.string());
    out << "epoch,train_mean,train_std,val_mean,val_std,test_mean,test_std\n";
    for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<double> train, val, test;
        for (const auto& fold : folds) {
            train.push_back(fold.epochs[e].train_acc * 100.0);
            val.push_back(fold.epochs[e].val_acc * 100.0);
            test.push_back(fold.epochs[e].test_acc * 100.0);
        }
        const auto [tm, ts] = aggregate(train);
        const auto [vm, vs] = aggregate(val);
        const auto [sm, ss] = aggregate(test);
        out << (e + 1) << "," << format_fixed(tm, 2) << "," << format_fixed(ts, 2)
            << "," << format_fixed(vm, 2) << "," << format_fixed(vs, 2) << ","
            << format_fixed(sm, 2) << "," << format_fixed(ss, 2) << "\n";
    }
    if (!out.good()) throw std::runtime_error("curve write failed");
}

}  // namespace ctv
