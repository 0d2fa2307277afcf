#pragma once

// Evaluation metrics: plain accuracy, validation-test gap, pooled and
// macro test accuracy, cross-team accuracy matrices with transfer means,
// rank and linear correlation, and mean/std aggregation. Aggregate std
// is the population (n-divisor) convention; a sample (n-1) helper is
// available where that convention is needed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctv/splits.hpp"

namespace ctv {

// Fixed-decimal formatting for CSV artifacts; avoids iostream locale
// surprises and keeps emission byte-stable.
inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

struct PredItem {
    std::string image_id;
    std::string true_label;
    std::string predicted_label;
};

struct PredictionSet {
    Protocol protocol = Protocol::TOTO;
    std::string focal_team;
    std::string partition;  // "val" or "test"
    std::vector<PredItem> items;
};

struct RunResult {
    Protocol protocol = Protocol::TOTO;
    std::string focal_team;
    double val_acc = 0.0;  // fraction in [0,1]
    std::map<std::string, double> per_team_test_acc;
    double pooled_test_acc = 0.0;
    double macro_test_acc = 0.0;
};

struct CrossTeamMatrix {
    std::vector<std::string> teams;
    std::vector<std::vector<double>> values;  // [row=train team][col=test team]
    std::string diagonal_semantics = "validation accuracy";
};

// ------------------------------------------------------------- accuracy

inline double accuracy(const PredictionSet& preds) {
    if (preds.items.empty())
        throw std::invalid_argument("accuracy of an empty prediction set");
    std::size_t correct = 0;
    for (const auto& item : preds.items)
        if (item.true_label == item.predicted_label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.items.size());
}

// Validation minus test, in percentage points.
inline double vtg(double val_acc_pct, double test_acc_pct) {
    return val_acc_pct - test_acc_pct;
}

inline std::pair<double, double> pooled_and_macro_test(
    const std::map<std::string, PredictionSet>& per_team) {
    if (per_team.empty())
        throw std::invalid_argument("no test teams to aggregate");
    std::size_t total = 0, correct = 0;
    double acc_sum = 0.0;
    for (const auto& [team, preds] : per_team) {
        acc_sum += accuracy(preds);
        total += preds.items.size();
        for (const auto& item : preds.items)
            if (item.true_label == item.predicted_label) ++correct;
    }
    const double pooled = static_cast<double>(correct) / static_cast<double>(total);
    const double macro = acc_sum / static_cast<double>(per_team.size());
    return {pooled, macro};
}

// Assemble a per-fold result from raw prediction sets, grouping test
// items by the team each image came from.
inline RunResult run_result_from_predictions(const SplitManifest& manifest,
                                             const Catalog& catalog,
                                             const PredictionSet& val_preds,
                                             const PredictionSet& test_preds) {
    RunResult r;
    r.protocol = manifest.protocol;
    r.focal_team = manifest.focal_team;
    r.val_acc = accuracy(val_preds);

    std::map<std::string, PredictionSet> per_team;
    for (const auto& item : test_preds.items) {
        const ImageRecord* rec = catalog.find(item.image_id);
        if (rec == nullptr)
            throw std::runtime_error("test prediction for unknown image: " +
                                     item.image_id);
        per_team[rec->team].items.push_back(item);
    }
    auto [pooled, macro] = pooled_and_macro_test(per_team);
    for (const auto& [team, preds] : per_team)
        r.per_team_test_acc[team] = accuracy(preds);
    r.pooled_test_acc = pooled;
    r.macro_test_acc = macro;
    return r;
}

inline nlohmann::ordered_json run_result_to_json(const RunResult& r) {
    nlohmann::ordered_json j;
    j["protocol"] = protocol_name(r.protocol);
    j["focal_team"] = r.focal_team;
    j["val_acc"] = r.val_acc;
    j["per_team_test_acc"] = nlohmann::ordered_json::object();
    for (const auto& [team, acc] : r.per_team_test_acc)
        j["per_team_test_acc"][team] = acc;
    j["pooled_test_acc"] = r.pooled_test_acc;
    j["macro_test_acc"] = r.macro_test_acc;
    return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
    RunResult r;
    const auto proto = protocol_from_name(j.at("protocol").get<std::string>());
    if (!proto) throw std::runtime_error("unknown protocol in run result");
    r.protocol = *proto;
    r.focal_team = j.at("focal_team").get<std::string>();
    r.val_acc = j.at("val_acc").get<double>();
    for (const auto& [team, acc] : j.at("per_team_test_acc").items())
        r.per_team_test_acc[team] = acc.get<double>();
    r.pooled_test_acc = j.at("pooled_test_acc").get<double>();
    r.macro_test_acc = j.at("macro_test_acc").get<double>();
    return r;
}

// --------------------------------------------------------------- matrix

inline CrossTeamMatrix build_matrix(const std::vector<RunResult>& runs) {
    CrossTeamMatrix m;
    for (const auto& run : runs) m.teams.push_back(run.focal_team);
    std::sort(m.teams.begin(), m.teams.end());
    const std::size_t n = m.teams.size();
    std::map<std::string, const RunResult*> by_team;
    for (const auto& run : runs) by_team[run.focal_team] = &run;

    m.values.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const RunResult* run = by_team.at(m.teams[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                m.values[i][j] = run->val_acc;
                continue;
            }
            const auto it = run->per_team_test_acc.find(m.teams[j]);
            if (it == run->per_team_test_acc.end())
                throw std::runtime_error("matrix cell missing: trained on " +
                                         m.teams[i] + ", tested on " + m.teams[j]);
            m.values[i][j] = it->second;
        }
    }
    return m;
}

// Row/column means over off-diagonal entries only.
inline std::pair<std::vector<double>, std::vector<double>> transfer_means(
    const CrossTeamMatrix& m) {
    const std::size_t n = m.teams.size();
    if (n < 2) throw std::invalid_argument("transfer means need n >= 2");
    std::vector<double> rows(n, 0.0), cols(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            rows[i] += m.values[i][j];
            cols[j] += m.values[i][j];
        }
    }
    for (auto& v : rows) v /= static_cast<double>(n - 1);
    for (auto& v : cols) v /= static_cast<double>(n - 1);
    return {std::move(rows), std::move(cols)};
}

// ----------------------------------------------------------- statistics

inline std::pair<double, double> aggregate(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("aggregate of nothing");
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) /
        static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

// Bessel-corrected (n-1) standard deviation.
inline double sample_stddev(const std::vector<double>& values) {
    if (values.size() < 2)
        throw std::invalid_argument("sample stddev needs n >= 2");
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) /
        static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("correlation inputs differ in length");
    if (xs.size() < 2) throw std::invalid_argument("correlation needs n >= 2");
    const auto n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("correlation undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// Average ranks (1-based) with ties sharing their midpoint rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("correlation inputs differ in length");
    if (xs.size() < 2) throw std::invalid_argument("correlation needs n >= 2");
    return pearson(detail::average_ranks(xs), detail::average_ranks(ys));
}

// ------------------------------------------------------ predictions CSV

inline std::string predictions_filename(Protocol protocol,
                                        const std::string& focal_team,
                                        const std::string& partition) {
    return std::string(protocol_name(protocol)) + "_" + focal_team + "_" +
           partition + ".csv";
}

inline void save_predictions_csv(const PredictionSet& preds,
                                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write predictions: " + path.string());
    out << "image_id,true_label,predicted_label\n";
    for (const auto& item : preds.items)
        out << item.image_id << "," << item.true_label << ","
            << item.predicted_label << "\n";
    if (!out.good()) throw std::runtime_error("prediction write failed");
}

inline PredictionSet load_predictions_csv(const std::filesystem::path& path,
                                          Protocol protocol,
                                          const std::string& focal_team,
                                          const std::string& partition) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open predictions: " + path.string());
    PredictionSet preds;
    preds.protocol = protocol;
    preds.focal_team = focal_team;
    preds.partition = partition;
    std::string line;
    if (!std::getline(in, line) || line != "image_id,true_label,predicted_label")
        throw std::runtime_error("bad prediction header in " + path.string());
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("bad prediction row: " + line);
        PredItem item{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                      line.substr(c2 + 1)};
        if (!seen.insert(item.image_id).second)
            throw std::runtime_error("duplicate image_id in predictions: " +
                                     item.image_id);
        preds.items.push_back(std::move(item));
    }
    return preds;
}

}  // namespace ctv
