#pragma once

// Dataset cataloguing: scans a <root>/<team>/<class>/<file> tree into a
// sorted, validated record list with normalized class labels, metadata
// from the files themselves, and perceptual hashes for readable images.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ctv/codec.hpp"
#include "ctv/log.hpp"
#include "ctv/parallel.hpp"
#include "ctv/phash.hpp"
#include "ctv/rng.hpp"

namespace ctv {

using LabelMap = std::map<std::string, std::string>;

struct ImageRecord {
    std::string image_id;
    std::string team;
    std::string class_label;
    std::string rel_path;
    ImageFormat format = ImageFormat::UNKNOWN;
    int width_px = 0;
    int height_px = 0;
    std::uint64_t file_size_bytes = 0;
    std::optional<std::string> device;
    std::optional<std::uint64_t> phash;
    bool readable = false;
};

struct Catalog {
    std::vector<ImageRecord> records;  // sorted by rel_path
    std::map<std::string, std::vector<std::string>> team_index;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>>
        cell_index;

    void rebuild_indexes() {
        team_index.clear();
        cell_index.clear();
        id_to_pos_.clear();
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            team_index[r.team].push_back(r.image_id);
            cell_index[{r.team, r.class_label}].push_back(r.image_id);
            id_to_pos_[r.image_id] = i;
        }
    }

    const ImageRecord* find(const std::string& image_id) const {
        const auto it = id_to_pos_.find(image_id);
        return it == id_to_pos_.end() ? nullptr : &records[it->second];
    }

private:
    std::map<std::string, std::size_t> id_to_pos_;
};

// ------------------------------------------------------------- id & fold

inline std::string make_image_id(const std::string& rel_path) {
    return phash_hex(fnv1a64(rel_path));
}

namespace detail {

// Decodes one UTF-8 sequence starting at i; falls back to Latin-1 for
// invalid bytes so mislabeled folder names still fold predictably.
inline char32_t utf8_next(const std::string& s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&s](std::size_t k) {
        return k < s.size() &&
               (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        const char32_t cp = ((b0 & 0x1F) << 6) |
                            (static_cast<unsigned char>(s[i + 1]) & 0x3F);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        const char32_t cp = ((b0 & 0x0F) << 12) |
                            ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                            (static_cast<unsigned char>(s[i + 2]) & 0x3F);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        const char32_t cp = ((b0 & 0x07) << 18) |
                            ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                            ((static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                            (static_cast<unsigned char>(s[i + 3]) & 0x3F);
        i += 4;
        return cp;
    }
    ++i;
    return b0;  // Latin-1 fallback
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Base letters for the Latin-1 Supplement / Extended-A range; empty
// string means "no mapping".
inline const char* latin_fold(char32_t cp) {
    if ((cp >= 0xC0 && cp <= 0xC5) || (cp >= 0xE0 && cp <= 0xE5)) return "a";
    if (cp == 0xC6 || cp == 0xE6) return "ae";
    if (cp == 0xC7 || cp == 0xE7) return "c";
    if ((cp >= 0xC8 && cp <= 0xCB) || (cp >= 0xE8 && cp <= 0xEB)) return "e";
    if ((cp >= 0xCC && cp <= 0xCF) || (cp >= 0xEC && cp <= 0xEF)) return "i";
    if (cp == 0xD0 || cp == 0xF0) return "d";
    if (cp == 0xD1 || cp == 0xF1) return "n";
    if ((cp >= 0xD2 && cp <= 0xD6) || (cp >= 0xF2 && cp <= 0xF6) ||
        cp == 0xD8 || cp == 0xF8)
        return "o";
    if ((cp >= 0xD9 && cp <= 0xDC) || (cp >= 0xF9 && cp <= 0xFC)) return "u";
    if (cp == 0xDD || cp == 0xFD || cp == 0xFF || cp == 0x178) return "y";
    if (cp == 0xDE || cp == 0xFE) return "th";
    if (cp == 0xDF) return "ss";
    if (cp == 0x152 || cp == 0x153) return "oe";
    if (cp == 0x160 || cp == 0x161) return "s";
    if (cp == 0x17D || cp == 0x17E) return "z";
    // Single-accent Extended-A letters collapse to their ASCII base.
    if (cp >= 0x100 && cp <= 0x105) return "a";
    if (cp >= 0x106 && cp <= 0x10D) return "c";
    if (cp >= 0x10E && cp <= 0x111) return "d";
    if (cp >= 0x112 && cp <= 0x11B) return "e";
    if (cp >= 0x11C && cp <= 0x123) return "g";
    if (cp >= 0x128 && cp <= 0x131) return "i";
    if (cp >= 0x139 && cp <= 0x142) return "l";
    if (cp >= 0x143 && cp <= 0x14B) return "n";
    if (cp >= 0x14C && cp <= 0x151) return "o";
    if (cp >= 0x154 && cp <= 0x159) return "r";
    if (cp >= 0x15A && cp <= 0x15F) return "s";
    if (cp >= 0x162 && cp <= 0x167) return "t";
    if (cp >= 0x168 && cp <= 0x173) return "u";
    return nullptr;
}

}  // namespace detail

// Diacritic folding: accented Latin letters collapse to their base
// letters, combining marks are dropped, ASCII is lowercased.
inline std::string fold_label(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        const char32_t cp = detail::utf8_next(raw, i);
        if (cp >= 0x300 && cp <= 0x36F) continue;  // combining marks
        if (cp < 0x80) {
            out.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(cp))));
            continue;
        }
        if (const char* base = detail::latin_fold(cp)) {
            out += base;
            continue;
        }
        detail::append_utf8(out, cp);
    }
    return out;
}

// ----------------------------------------------------------- label map

inline LabelMap load_label_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label map: " + path.string());
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) throw std::runtime_error("label map must be a JSON object");
    LabelMap map;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string())
            throw std::runtime_error("label map values must be strings");
        map[k] = v.get<std::string>();
    }
    return map;
}

inline void save_label_map(const LabelMap& map,
                           const std::filesystem::path& path) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : map) j[k] = v;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write label map: " + path.string());
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("label map write failed");
}

// Fold, then follow map entries to a fixed point, so chained entries
// (plural -> singular -> canonical) resolve in one call.
inline std::string normalize_class_label(const std::string& raw,
                                         const LabelMap& map) {
    std::string key = fold_label(raw);
    const auto first = map.find(key);
    if (first == map.end())
        throw std::runtime_error("class folder '" + raw +
                                 "' has no label-map entry (folded: '" + key +
                                 "')");
    std::string value = first->second;
    for (int hop = 0; hop < 16 && value != key; ++hop) {
        key = value;
        const auto it = map.find(key);
        if (it == map.end()) break;
        value = it->second;
    }
    return value;
}

// The closed vocabulary for a run: every terminal value of the map.
inline std::set<std::string> canonical_vocabulary(const LabelMap& map) {
    std::set<std::string> vocab;
    for (const auto& [raw, canon] : map) vocab.insert(normalize_class_label(raw, map));
    return vocab;
}

// ------------------------------------------------------------- metadata

struct FileMetadata {
    ImageFormat format = ImageFormat::UNKNOWN;
    int width_px = 0;
    int height_px = 0;
    std::uint64_t file_size_bytes = 0;
    std::optional<std::string> device;
    bool readable = false;
};

// Metadata plus (when readable) the decoded pixels, so callers needing
// both can decode once.
inline FileMetadata probe_file(const std::filesystem::path& path, Image* pixels) {
    FileMetadata meta;
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    meta.file_size_bytes = ec ? 0 : static_cast<std::uint64_t>(size);
    const auto bytes = read_file(path);
    if (!bytes) {
        meta.format = format_from_extension(path);
        return meta;
    }
    meta.format = sniff_format(*bytes);
    if (meta.format == ImageFormat::UNKNOWN)
        meta.format = format_from_extension(path);
    auto decoded = decode_image(*bytes, meta.format);
    meta.device = decoded.device;
    if (decoded.ok) {
        meta.readable = true;
        meta.width_px = decoded.image.width;
        meta.height_px = decoded.image.height;
        if (pixels) *pixels = std::move(decoded.image);
    }
    return meta;
}

inline FileMetadata extract_metadata(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("no such file: " + path.string());
    return probe_file(path, nullptr);
}

// ----------------------------------------------------------------- scan

inline Catalog scan_dataset(const std::filesystem::path& root,
                            const LabelMap& label_map, int threads = 1) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw std::runtime_error("dataset root does not exist: " + root.string());

    struct PendingFile {
        std::string rel_path;
        std::string team;
        std::string class_label;
        fs::path abs_path;
    };
    std::vector<PendingFile> pending;

    std::vector<fs::path> team_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) team_dirs.push_back(entry.path());
    std::sort(team_dirs.begin(), team_dirs.end());

    for (const auto& team_dir : team_dirs) {
        const std::string team = team_dir.filename().string();
        std::vector<fs::path> class_dirs;
        for (const auto& entry : fs::directory_iterator(team_dir))
            if (entry.is_directory()) class_dirs.push_back(entry.path());
        std::sort(class_dirs.begin(), class_dirs.end());
        for (const auto& class_dir : class_dirs) {
            const std::string raw_class = class_dir.filename().string();
            const std::string canon = normalize_class_label(raw_class, label_map);
            for (const auto& entry : fs::directory_iterator(class_dir)) {
                if (!entry.is_regular_file()) continue;
                if (!has_image_extension(entry.path())) continue;
                PendingFile pf;
                pf.team = team;
                pf.class_label = canon;
                pf.abs_path = entry.path();
                pf.rel_path = team + "/" + raw_class + "/" +
                              entry.path().filename().string();
                pending.push_back(std::move(pf));
            }
        }
    }
    std::sort(pending.begin(), pending.end(),
              [](const PendingFile& a, const PendingFile& b) {
                  return a.rel_path < b.rel_path;
              });

    Catalog catalog;
    catalog.records.resize(pending.size());
    parallel_for(pending.size(), threads, [&](std::size_t i) {
        const auto& pf = pending[i];
        ImageRecord rec;
        rec.rel_path = pf.rel_path;
        rec.image_id = make_image_id(pf.rel_path);
        rec.team = pf.team;
        rec.class_label = pf.class_label;
        Image pixels;
        const FileMetadata meta = probe_file(pf.abs_path, &pixels);
        rec.format = meta.format;
        rec.width_px = meta.width_px;
        rec.height_px = meta.height_px;
        rec.file_size_bytes = meta.file_size_bytes;
        rec.device = meta.device;
        rec.readable = meta.readable;
        if (meta.readable)
            rec.phash = phash64(pixels);
        else
            log::warn("unreadable image: " + pf.rel_path);
        catalog.records[i] = std::move(rec);
    });

    std::set<std::string> seen_ids;
    for (const auto& r : catalog.records)
        if (!seen_ids.insert(r.image_id).second)
            throw std::runtime_error("image_id collision on " + r.rel_path);

    catalog.rebuild_indexes();
    return catalog;
}

// -------------------------------------------------------- serialization

inline nlohmann::ordered_json record_to_json(const ImageRecord& r) {
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["team"] = r.team;
    j["class"] = r.class_label;
    j["rel_path"] = r.rel_path;
    j["format"] = format_name(r.format);
    j["width_px"] = r.width_px;
    j["height_px"] = r.height_px;
    j["file_size_bytes"] = r.file_size_bytes;
    if (r.device) j["device"] = *r.device;
    if (r.phash) j["phash"] = phash_hex(*r.phash);
    j["readable"] = r.readable;
    return j;
}

inline ImageRecord record_from_json(const nlohmann::json& j) {
    ImageRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.team = j.at("team").get<std::string>();
    r.class_label = j.at("class").get<std::string>();
    r.rel_path = j.at("rel_path").get<std::string>();
    const auto fmt = format_from_name(j.at("format").get<std::string>());
    if (!fmt) throw std::runtime_error("unknown format in catalog record");
    r.format = *fmt;
    r.width_px = j.at("width_px").get<int>();
    r.height_px = j.at("height_px").get<int>();
    r.file_size_bytes = j.at("file_size_bytes").get<std::uint64_t>();
    if (j.contains("device")) r.device = j.at("device").get<std::string>();
    if (j.contains("phash")) {
        std::uint64_t h = 0;
        if (!parse_phash_hex(j.at("phash").get<std::string>(), h))
            throw std::runtime_error("bad phash hex in catalog record");
        r.phash = h;
    }
    r.readable = j.at("readable").get<bool>();
    return r;
}

inline void save_catalog_jsonl(const Catalog& catalog,
                               const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write catalog: " + path.string());
    for (const auto& r : catalog.records) out << record_to_json(r).dump() << "\n";
    if (!out.good()) throw std::runtime_error("catalog write failed");
}

inline Catalog load_catalog_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open catalog: " + path.string());
    Catalog catalog;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        catalog.records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    catalog.rebuild_indexes();
    return catalog;
}

// --------------------------------------------------------- distribution

struct DistributionTable {
    std::vector<std::string> teams;    // sorted
    std::vector<std::string> classes;  // sorted
    std::vector<std::vector<std::uint64_t>> cells;  // [team][class]
    std::vector<std::uint64_t> team_totals;
    std::vector<std::uint64_t> class_totals;
    std::uint64_t grand_total = 0;
};

inline DistributionTable distribution_from_counts(
    const std::vector<std::tuple<std::string, std::string, std::uint64_t>>&
        counts) {
    DistributionTable table;
    std::set<std::string> teams, classes;
    for (const auto& [team, cls, n] : counts) {
        teams.insert(team);
        classes.insert(cls);
    }
    table.teams.assign(teams.begin(), teams.end());
    table.classes.assign(classes.begin(), classes.end());
    std::map<std::string, std::size_t> ti, ci;
    for (std::size_t i = 0; i < table.teams.size(); ++i) ti[table.teams[i]] = i;
    for (std::size_t i = 0; i < table.classes.size(); ++i) ci[table.classes[i]] = i;
    table.cells.assign(table.teams.size(),
                       std::vector<std::uint64_t>(table.classes.size(), 0));
    for (const auto& [team, cls, n] : counts)
        table.cells[ti[team]][ci[cls]] += n;
    table.team_totals.assign(table.teams.size(), 0);
    table.class_totals.assign(table.classes.size(), 0);
    for (std::size_t t = 0; t < table.teams.size(); ++t)
        for (std::size_t c = 0; c < table.classes.size(); ++c) {
            table.team_totals[t] += table.cells[t][c];
            table.class_totals[c] += table.cells[t][c];
            table.grand_total += table.cells[t][c];
        }
    return table;
}

inline DistributionTable distribution_table(const Catalog& catalog) {
    std::vector<std::tuple<std::string, std::string, std::uint64_t>> counts;
    counts.reserve(catalog.records.size());
    for (const auto& r : catalog.records)
        counts.emplace_back(r.team, r.class_label, 1);
    return distribution_from_counts(counts);
}

}  // namespace ctv
