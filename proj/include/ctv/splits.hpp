#pragma once

// Split-manifest generation for the two evaluation protocols.
//
// TOTO (train on one team): per focal team, a 70/30 class-stratified
// partition of that team's records gives train/val; every other team's
// record lands in test.
//
// LOTO (leave one team out): per focal team, all other teams pool into
// train/val, stratified by (team, class); the focal team is the test set.
//
// All membership decisions flow from a seeded xoshiro256** stream derived
// from (seed, protocol, focal team), with Fisher-Yates over pre-sorted id
// lists, so manifests are reproducible bit-for-bit.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctv/catalog.hpp"
#include "ctv/log.hpp"
#include "ctv/rng.hpp"

namespace ctv {

enum class Protocol { TOTO, LOTO };

inline const char* protocol_name(Protocol p) {
    return p == Protocol::TOTO ? "TOTO" : "LOTO";
}

inline std::optional<Protocol> protocol_from_name(const std::string& name) {
    if (name == "TOTO") return Protocol::TOTO;
    if (name == "LOTO") return Protocol::LOTO;
    return std::nullopt;
}

struct SplitManifest {
    Protocol protocol = Protocol::TOTO;
    std::string focal_team;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double train_frac = 0.7;
};

// Splits each stratum with k = round(frac*n) into part_a, guarded to
// leave at least one id on each side when the stratum has two or more.
// Single-id strata go wholly to part_a. Strata are visited in key order.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
stratified_partition(const std::map<std::string, std::vector<std::string>>& strata,
                     double frac, Xoshiro256& rng) {
    if (strata.empty()) throw std::invalid_argument("no strata to partition");
    if (!(frac > 0.0 && frac < 1.0))
        throw std::invalid_argument("fraction must be inside (0,1)");
    std::vector<std::string> part_a, part_b;
    for (const auto& [stratum, ids] : strata) {
        std::vector<std::string> pool = ids;
        std::sort(pool.begin(), pool.end());
        fisher_yates(pool, rng);
        const auto n = pool.size();
        std::size_t k;
        if (n == 1) {
            k = 1;
        } else {
            k = static_cast<std::size_t>(std::lround(frac * static_cast<double>(n)));
            if (k < 1) k = 1;
            if (k > n - 1) k = n - 1;
        }
        part_a.insert(part_a.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        part_b.insert(part_b.end(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
    }
    return {std::move(part_a), std::move(part_b)};
}

// Split generation presumes duplicates are gone; a perceptual hash shared
// across teams would leak test content into training.
inline void check_dedup_precondition(const Catalog& catalog) {
    std::map<std::uint64_t, std::set<std::string>> hash_teams;
    for (const auto& r : catalog.records)
        if (r.readable && r.phash) hash_teams[*r.phash].insert(r.team);
    for (const auto& [hash, teams] : hash_teams) {
        if (teams.size() > 1) {
            std::string msg = "catalog has cross-team duplicate hashes (e.g., " +
                              phash_hex(hash) + " in teams";
            for (const auto& t : teams) msg += " '" + t + "'";
            msg += "); run dedup before generating splits";
            throw std::runtime_error(msg);
        }
    }
}

namespace detail {

inline void warn_missing_cells(const Catalog& catalog, const std::string& team) {
    std::set<std::string> all_classes, team_classes;
    for (const auto& r : catalog.records) {
        all_classes.insert(r.class_label);
        if (r.team == team) team_classes.insert(r.class_label);
    }
    for (const auto& cls : all_classes)
        if (!team_classes.count(cls))
            log::warn("team '" + team + "' has no images of class '" + cls +
                      "'; cell skipped");
}

inline void sort_manifest(SplitManifest& m) {
    std::sort(m.train_ids.begin(), m.train_ids.end());
    std::sort(m.val_ids.begin(), m.val_ids.end());
    std::sort(m.test_ids.begin(), m.test_ids.end());
}

}  // namespace detail

inline std::vector<std::string> sorted_teams(const Catalog& catalog) {
    std::vector<std::string> teams;
    for (const auto& [team, ids] : catalog.team_index) teams.push_back(team);
    return teams;  // team_index is a sorted map
}

inline std::vector<SplitManifest> toto_splits(const Catalog& catalog,
                                              double frac, std::uint64_t seed) {
    const auto teams = sorted_teams(catalog);
    if (teams.size() < 2)
        throw std::runtime_error("TOTO needs at least two teams");
    check_dedup_precondition(catalog);

    std::vector<SplitManifest> manifests;
    for (const auto& team : teams) {
        detail::warn_missing_cells(catalog, team);
        std::map<std::string, std::vector<std::string>> strata;
        for (const auto& [cell, ids] : catalog.cell_index)
            if (cell.first == team && !ids.empty()) strata[cell.second] = ids;
        auto rng = derive_stream(seed, {"TOTO", team});
        auto [train, val] = stratified_partition(strata, frac, rng);

        SplitManifest m;
        m.protocol = Protocol::TOTO;
        m.focal_team = team;
        m.seed = seed;
        m.train_frac = frac;
        m.train_ids = std::move(train);
        m.val_ids = std::move(val);
        for (const auto& r : catalog.records)
            if (r.team != team) m.test_ids.push_back(r.image_id);
        detail::sort_manifest(m);
        manifests.push_back(std::move(m));
    }
    return manifests;
}

inline std::vector<SplitManifest> loto_splits(const Catalog& catalog,
                                              double frac, std::uint64_t seed) {
    const auto teams = sorted_teams(catalog);
    if (teams.size() < 2)
        throw std::runtime_error("LOTO needs at least two teams");
    check_dedup_precondition(catalog);

    std::vector<SplitManifest> manifests;
    for (const auto& team : teams) {
        std::map<std::string, std::vector<std::string>> strata;
        for (const auto& [cell, ids] : catalog.cell_index)
            if (cell.first != team && !ids.empty())
                strata[cell.first + "\x1f" + cell.second] = ids;
        auto rng = derive_stream(seed, {"LOTO", team});
        auto [train, val] = stratified_partition(strata, frac, rng);

        SplitManifest m;
        m.protocol = Protocol::LOTO;
        m.focal_team = team;
        m.seed = seed;
        m.train_frac = frac;
        m.train_ids = std::move(train);
        m.val_ids = std::move(val);
        m.test_ids = catalog.team_index.at(team);
        detail::sort_manifest(m);
        manifests.push_back(std::move(m));
    }
    return manifests;
}

// Violations are data for the caller, never exceptions.
inline std::vector<std::string> validate_manifest(const SplitManifest& m,
                                                  const Catalog& catalog) {
    std::vector<std::string> violations;
    auto check_exists = [&](const std::vector<std::string>& ids, const char* part) {
        for (const auto& id : ids)
            if (!catalog.find(id))
                violations.push_back(std::string(part) + " id not in catalog: " + id);
    };
    check_exists(m.train_ids, "train");
    check_exists(m.val_ids, "val");
    check_exists(m.test_ids, "test");

    std::set<std::string> train(m.train_ids.begin(), m.train_ids.end());
    std::set<std::string> val(m.val_ids.begin(), m.val_ids.end());
    std::set<std::string> test(m.test_ids.begin(), m.test_ids.end());
    if (train.size() != m.train_ids.size())
        violations.push_back("duplicate ids inside train");
    if (val.size() != m.val_ids.size()) violations.push_back("duplicate ids inside val");
    if (test.size() != m.test_ids.size())
        violations.push_back("duplicate ids inside test");

    for (const auto& id : val)
        if (train.count(id)) violations.push_back("id in both train and val: " + id);
    for (const auto& id : test) {
        if (train.count(id)) violations.push_back("id in both train and test: " + id);
        if (val.count(id)) violations.push_back("id in both val and test: " + id);
    }

    const bool toto = m.protocol == Protocol::TOTO;
    for (const auto& r : catalog.records) {
        const bool focal = r.team == m.focal_team;
        const bool in_pool = train.count(r.image_id) || val.count(r.image_id);
        const bool in_test = test.count(r.image_id) > 0;
        if (!in_pool && !in_test)
            violations.push_back("id missing from manifest: " + r.image_id);
        if (toto) {
            if (focal && in_test)
                violations.push_back("focal-team id in TOTO test: " + r.image_id);
            if (!focal && in_pool)
                violations.push_back("foreign id in TOTO train/val: " + r.image_id);
        } else {
            if (focal && in_pool)
                violations.push_back("held-out id in LOTO train/val: " + r.image_id);
            if (!focal && in_test)
                violations.push_back("foreign id in LOTO test: " + r.image_id);
        }
    }
    return violations;
}

// -------------------------------------------------------- serialization

inline nlohmann::ordered_json manifest_to_json(const SplitManifest& m) {
    nlohmann::ordered_json j;
    j["protocol"] = protocol_name(m.protocol);
    j["focal_team"] = m.focal_team;
    j["train_ids"] = m.train_ids;
    j["val_ids"] = m.val_ids;
    j["test_ids"] = m.test_ids;
    j["seed"] = m.seed;
    j["train_frac"] = m.train_frac;
    return j;
}

inline SplitManifest manifest_from_json(const nlohmann::json& j) {
    SplitManifest m;
    const auto proto = protocol_from_name(j.at("protocol").get<std::string>());
    if (!proto) throw std::runtime_error("unknown protocol in manifest");
    m.protocol = *proto;
    m.focal_team = j.at("focal_team").get<std::string>();
    m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    m.val_ids = j.at("val_ids").get<std::vector<std::string>>();
    m.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train_frac = j.at("train_frac").get<double>();
    return m;
}

inline std::string manifest_filename(const SplitManifest& m) {
    return std::string(protocol_name(m.protocol)) + "_" + m.focal_team + ".json";
}

inline void save_manifest(const SplitManifest& m,
                          const std::filesystem::path& dir) {
    std::ofstream out(dir / manifest_filename(m), std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write manifest for " + m.focal_team);
    out << manifest_to_json(m).dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("manifest write failed");
}

inline SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
    nlohmann::json j;
    in >> j;
    return manifest_from_json(j);
}

}  // namespace ctv
