#pragma once

// Duplicate handling: group records by exact perceptual-hash equality and
// keep one representative per group, chosen by a five-level priority rule:
//   1. larger file size
//   2. larger pixel count
//   3. capture-device metadata present
//   4. lexicographically smaller team name
//   5. lexicographically smaller relative path
// Unreadable records never join groups and are dropped from the retained
// catalog outright.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctv/catalog.hpp"
#include "ctv/phash.hpp"

namespace ctv {

struct DuplicateGroup {
    std::uint64_t hash = 0;
    std::vector<std::string> member_ids;  // catalog (rel_path) order
    std::string representative_id;
};

struct DedupResult {
    Catalog retained;
    std::vector<std::string> removed_ids;
    std::vector<DuplicateGroup> groups;
    std::uint64_t bytes_recovered = 0;
};

// True when `a` wins the keep decision over `b`.
inline bool keep_over(const ImageRecord& a, const ImageRecord& b) {
    if (a.file_size_bytes != b.file_size_bytes)
        return a.file_size_bytes > b.file_size_bytes;
    const std::uint64_t pa =
        static_cast<std::uint64_t>(a.width_px) * static_cast<std::uint64_t>(a.height_px);
    const std::uint64_t pb =
        static_cast<std::uint64_t>(b.width_px) * static_cast<std::uint64_t>(b.height_px);
    if (pa != pb) return pa > pb;
    if (a.device.has_value() != b.device.has_value()) return a.device.has_value();
    if (a.team != b.team) return a.team < b.team;
    return a.rel_path < b.rel_path;
}

// Which rule level separated the kept record from a removed one (1-5).
inline int keep_reason_level(const ImageRecord& kept, const ImageRecord& removed) {
    if (kept.file_size_bytes != removed.file_size_bytes) return 1;
    const std::uint64_t pk = static_cast<std::uint64_t>(kept.width_px) *
                             static_cast<std::uint64_t>(kept.height_px);
    const std::uint64_t pr = static_cast<std::uint64_t>(removed.width_px) *
                             static_cast<std::uint64_t>(removed.height_px);
    if (pk != pr) return 2;
    if (kept.device.has_value() != removed.device.has_value()) return 3;
    if (kept.team != removed.team) return 4;
    return 5;
}

inline std::string select_representative(const std::vector<std::string>& member_ids,
                                         const Catalog& catalog) {
    if (member_ids.empty())
        throw std::invalid_argument("empty duplicate group");
    const ImageRecord* best = nullptr;
    for (const auto& id : member_ids) {
        const ImageRecord* rec = catalog.find(id);
        if (!rec) throw std::runtime_error("unknown image_id in group: " + id);
        if (!best || keep_over(*rec, *best)) best = rec;
    }
    return best->image_id;
}

inline std::vector<DuplicateGroup> group_duplicates(const Catalog& catalog) {
    std::vector<std::string> missing;
    std::map<std::uint64_t, std::vector<std::string>> by_hash;
    for (const auto& r : catalog.records) {
        if (!r.readable) continue;
        if (!r.phash) {
            missing.push_back(r.image_id);
            continue;
        }
        by_hash[*r.phash].push_back(r.image_id);
    }
    if (!missing.empty()) {
        std::string msg = "readable records missing a perceptual hash:";
        for (const auto& id : missing) msg += " " + id;
        throw std::runtime_error(msg);
    }
    std::vector<DuplicateGroup> groups;
    for (auto& [hash, ids] : by_hash) {
        if (ids.size() < 2) continue;
        DuplicateGroup g;
        g.hash = hash;
        g.member_ids = std::move(ids);
        g.representative_id = select_representative(g.member_ids, catalog);
        groups.push_back(std::move(g));
    }
    return groups;  // std::map iteration keeps them hash-ascending
}

inline DedupResult apply_dedup(const Catalog& catalog) {
    DedupResult result;
    result.groups = group_duplicates(catalog);
    std::set<std::string> drop;
    for (const auto& g : result.groups)
        for (const auto& id : g.member_ids)
            if (id != g.representative_id) drop.insert(id);

    for (const auto& g : result.groups)
        for (const auto& id : g.member_ids)
            if (id != g.representative_id) {
                result.removed_ids.push_back(id);
                result.bytes_recovered += catalog.find(id)->file_size_bytes;
            }

    for (const auto& r : catalog.records) {
        if (!r.readable) continue;
        if (drop.count(r.image_id)) continue;
        result.retained.records.push_back(r);
    }
    result.retained.rebuild_indexes();
    return result;
}

// One CSV row per removed record, grouped by ascending hash.
inline void save_removal_report_csv(const DedupResult& result,
                                    const Catalog& catalog,
                                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write removal report: " + path.string());
    out << "hash,kept_id,removed_id,reason_level\n";
    for (const auto& g : result.groups) {
        const ImageRecord* kept = catalog.find(g.representative_id);
        for (const auto& id : g.member_ids) {
            if (id == g.representative_id) continue;
            const ImageRecord* removed = catalog.find(id);
            out << phash_hex(g.hash) << "," << g.representative_id << "," << id
                << "," << keep_reason_level(*kept, *removed) << "\n";
        }
    }
    if (!out.good()) throw std::runtime_error("removal report write failed");
}

}  // namespace ctv
