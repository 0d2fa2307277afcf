#pragma once

// Synthetic multi-team dataset generator. Each sample is a lobed,
// leaf-like silhouette over a textured background; class identity
// controls lobe count, hue, and texture frequency, while per-team
// domain parameters shift hue, brightness, noise, blur, and encode
// quality. Rendering is a pure function of (spec, team, class, index),
// so output trees are reproducible file for file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctv/catalog.hpp"
#include "ctv/codec.hpp"
#include "ctv/image.hpp"
#include "ctv/parallel.hpp"
#include "ctv/resample.hpp"
#include "ctv/rng.hpp"

namespace ctv {

struct ClassParams {
    int lobe_count = 1;
    double base_hue = 0.0;  // degrees, [0, 360)
    double texture_freq = 2.0;
};

struct DomainParams {
    double hue_shift = 0.0;  // degrees
    double brightness_gain = 1.0;
    double noise_sigma = 0.0;  // gray levels
    int blur_radius = 0;       // box blur, pixels
    int encode_quality = 95;   // JPEG quality, [50, 100]
};

struct TeamSpec {
    std::string team;
    DomainParams domain;
    std::map<std::string, int> counts;  // class label -> image count
    bool outlier = false;
};

struct SynthSpec {
    std::vector<std::pair<std::string, ClassParams>> classes;
    std::vector<TeamSpec> teams;
    int image_size = 96;
    std::uint64_t seed = 42;
    std::vector<int> planted_duplicate_groups;  // group sizes, each >= 2
};

struct RenderedSample {
    Image image{1, 1, 3};
    std::vector<std::uint8_t> jpeg_bytes;
    int foreground_pixels = 0;
};

struct PlantedGroup {
    std::vector<std::string> rel_paths;  // sorted
};

struct GroundTruth {
    std::size_t files_written = 0;
    std::vector<PlantedGroup> duplicate_groups;
};

// ------------------------------------------------------------ validation

inline void validate_spec(const SynthSpec& spec) {
    if (spec.teams.size() < 2) throw std::invalid_argument("need >= 2 teams");
    if (spec.classes.size() < 2) throw std::invalid_argument("need >= 2 classes");
    if (spec.image_size < 16) throw std::invalid_argument("image_size too small");

    std::set<std::string> team_names, class_names;
    for (const auto& [label, params] : spec.classes) {
        if (!class_names.insert(label).second)
            throw std::invalid_argument("duplicate class label: " + label);
        if (params.lobe_count < 1)
            throw std::invalid_argument("lobe_count must be >= 1");
        if (!(params.texture_freq > 0.0))
            throw std::invalid_argument("texture_freq must be positive");
        if (params.base_hue < 0.0 || params.base_hue >= 360.0)
            throw std::invalid_argument("base_hue outside [0,360)");
    }
    for (const auto& team : spec.teams) {
        if (!team_names.insert(team.team).second)
            throw std::invalid_argument("duplicate team name: " + team.team);
        const auto& d = team.domain;
        if (!(d.brightness_gain > 0.0))
            throw std::invalid_argument("brightness_gain must be positive");
        if (d.noise_sigma < 0.0)
            throw std::invalid_argument("noise_sigma must be >= 0");
        if (d.blur_radius < 0)
            throw std::invalid_argument("blur_radius must be >= 0");
        if (d.encode_quality < 50 || d.encode_quality > 100)
            throw std::invalid_argument("encode_quality outside [50,100]");
        for (const auto& [label, count] : team.counts) {
            if (class_names.count(label) == 0)
                throw std::invalid_argument("count for unknown class: " + label);
            if (count < 0) throw std::invalid_argument("negative image count");
        }
    }
    for (int size : spec.planted_duplicate_groups) {
        if (size < 2)
            throw std::invalid_argument("duplicate group size must be >= 2");
        if (static_cast<std::size_t>(size) > spec.teams.size())
            throw std::invalid_argument(
                "duplicate group larger than the team count");
    }
}

// -------------------------------------------------------------- renderer

namespace detail {

struct Rgb {
    double r = 0, g = 0, b = 0;
};

inline Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
    double h = std::fmod(hue_deg, 360.0);
    if (h < 0) h += 360.0;
    const double c = val * sat;
    const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
    const double m = val - c;
    Rgb out;
    switch (static_cast<int>(h / 60.0)) {
        case 0: out = {c, x, 0}; break;
        case 1: out = {x, c, 0}; break;
        case 2: out = {0, c, x}; break;
        case 3: out = {0, x, c}; break;
        case 4: out = {x, 0, c}; break;
        default: out = {c, 0, x}; break;
    }
    out.r += m;
    out.g += m;
    out.b += m;
    return out;
}

inline void box_blur_channel(std::vector<double>& plane, int w, int h, int radius) {
    std::vector<double> tmp(plane.size());
    const double inv = 1.0 / (2 * radius + 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k)
                s += plane[y * w + std::clamp(x + k, 0, w - 1)];
            tmp[y * w + x] = s * inv;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k)
                s += tmp[std::clamp(y + k, 0, h - 1) * w + x];
            plane[y * w + x] = s * inv;
        }
}

}  // namespace detail

inline RenderedSample render_sample(const ClassParams& cls,
                                    const DomainParams& domain, Xoshiro256& rng,
                                    int image_size) {
    const int n = image_size;
    const double nd = static_cast<double>(n);
    constexpr double kTau = 6.283185307179586;

    // Per-sample layout draws, in a fixed order.
    const double cx = nd * (0.5 + rng.uniform(-0.08, 0.08));
    const double cy = nd * (0.5 + rng.uniform(-0.08, 0.08));
    const double disc_r = nd * 0.20 * (1.0 + rng.uniform(-0.15, 0.15));
    const double rot = rng.uniform(0.0, kTau);
    const double bg_phase_x = rng.uniform(0.0, kTau);
    const double bg_phase_y = rng.uniform(0.0, kTau);
    const double fg_phase = rng.uniform(0.0, kTau);
    std::vector<double> lobe_scale(static_cast<std::size_t>(cls.lobe_count));
    for (auto& s : lobe_scale) s = rng.uniform(0.9, 1.1);

    struct Lobe {
        double lx, ly, cos_t, sin_t, a, b;
    };
    std::vector<Lobe> lobes;
    for (int j = 0; j < cls.lobe_count; ++j) {
        const double theta = rot + kTau * j / cls.lobe_count;
        const double scale = lobe_scale[static_cast<std::size_t>(j)];
        Lobe lobe;
        lobe.cos_t = std::cos(theta);
        lobe.sin_t = std::sin(theta);
        lobe.lx = cx + nd * 0.17 * scale * lobe.cos_t;
        lobe.ly = cy + nd * 0.17 * scale * lobe.sin_t;
        lobe.a = nd * 0.15 * scale;
        lobe.b = nd * 0.095 * scale;
        lobes.push_back(lobe);
    }

    const double hue = cls.base_hue + domain.hue_shift;
    RenderedSample out;
    std::vector<double> planes[3];
    for (auto& p : planes) p.assign(static_cast<std::size_t>(n) * n, 0.0);

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - cx, dy = y - cy;
            bool inside = dx * dx + dy * dy <= disc_r * disc_r;
            for (const auto& lobe : lobes) {
                if (inside) break;
                const double px = x - lobe.lx, py = y - lobe.ly;
                const double u = px * lobe.cos_t + py * lobe.sin_t;
                const double w = -px * lobe.sin_t + py * lobe.cos_t;
                inside = (u * u) / (lobe.a * lobe.a) + (w * w) / (lobe.b * lobe.b) <= 1.0;
            }

            detail::Rgb rgb;
            if (inside) {
                ++out.foreground_pixels;
                const double v =
                    0.50 + 0.18 * std::sin(kTau * cls.texture_freq * 1.7 *
                                               (x + y) / nd + fg_phase);
                rgb = detail::hsv_to_rgb(hue, 0.72, v);
            } else {
                const double v =
                    0.55 + 0.20 * std::sin(kTau * cls.texture_freq * x / nd +
                                           bg_phase_x) *
                               std::sin(kTau * cls.texture_freq * y / nd +
                                        bg_phase_y);
                rgb = detail::hsv_to_rgb(hue + 25.0, 0.30, v);
            }
            const std::size_t idx = static_cast<std::size_t>(y) * n + x;
            planes[0][idx] = std::min(1.0, rgb.r * domain.brightness_gain) * 255.0;
            planes[1][idx] = std::min(1.0, rgb.g * domain.brightness_gain) * 255.0;
            planes[2][idx] = std::min(1.0, rgb.b * domain.brightness_gain) * 255.0;
        }
    }

    if (domain.noise_sigma > 0.0) {
        for (std::size_t idx = 0; idx < planes[0].size(); ++idx)
            for (auto& plane : planes)
                plane[idx] += rng.normal(0.0, domain.noise_sigma);
    }
    if (domain.blur_radius > 0)
        for (auto& plane : planes)
            detail::box_blur_channel(plane, n, n, domain.blur_radius);

    Image img(n, n, 3);
    for (std::size_t idx = 0; idx < planes[0].size(); ++idx)
        for (int c = 0; c < 3; ++c)
            img.pixels[idx * 3 + static_cast<std::size_t>(c)] =
                clamp_u8(planes[c][idx]);

    out.jpeg_bytes = encode_jpeg(img, domain.encode_quality);
    auto decoded = decode_image(out.jpeg_bytes, ImageFormat::JPEG);
    if (!decoded.ok)
        throw std::runtime_error("render re-encode produced an undecodable image");
    out.image = std::move(decoded.image);
    return out;
}

// ------------------------------------------------------------- generate

namespace detail {

inline std::string sample_filename(const std::string& class_label, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", index);
    return class_label + "_" + buf + ".jpg";
}

}  // namespace detail

inline GroundTruth generate(const SynthSpec& spec,
                            const std::filesystem::path& root, int threads = 1) {
    validate_spec(spec);

    struct Job {
        std::string team;
        std::string class_label;
        int index = 0;
        const ClassParams* cls = nullptr;
        const DomainParams* domain = nullptr;
        std::string rel_path;
    };
    std::vector<Job> jobs;
    std::map<std::pair<std::string, std::string>, int> cell_count;
    for (const auto& team : spec.teams) {
        for (const auto& [label, params] : spec.classes) {
            const auto it = team.counts.find(label);
            const int count = (it == team.counts.end()) ? 0 : it->second;
            cell_count[{team.team, label}] = count;
            for (int i = 0; i < count; ++i) {
                Job job;
                job.team = team.team;
                job.class_label = label;
                job.index = i;
                job.cls = &params;
                job.domain = &team.domain;
                job.rel_path = team.team + "/" + label + "/" +
                               detail::sample_filename(label, i);
                jobs.push_back(std::move(job));
            }
        }
    }

    // Plan planted duplicates: group g copies the first sample of one
    // cell onto the tail slots of the same class in the following teams.
    GroundTruth truth;
    std::map<std::string, std::string> copy_of;  // target rel -> source rel
    std::map<std::pair<std::string, std::string>, int> tail_used;
    const auto T = spec.teams.size();
    const auto C = spec.classes.size();
    for (std::size_t g = 0; g < spec.planted_duplicate_groups.size(); ++g) {
        const int size = spec.planted_duplicate_groups[g];
        const std::string& label = spec.classes[g % C].first;
        const std::string& src_team = spec.teams[g % T].team;
        if (cell_count.at({src_team, label}) < 1)
            throw std::invalid_argument("duplicate source cell is empty: " +
                                        src_team + "/" + label);
        const std::string src_rel =
            src_team + "/" + label + "/" + detail::sample_filename(label, 0);

        PlantedGroup group;
        group.rel_paths.push_back(src_rel);
        for (int m = 1; m < size; ++m) {
            const std::string& dst_team =
                spec.teams[(g + static_cast<std::size_t>(m)) % T].team;
            int& used = tail_used[{dst_team, label}];
            const int slot = cell_count.at({dst_team, label}) - 1 - used;
            if (slot < 1)
                throw std::invalid_argument("not enough slots for duplicates in " +
                                            dst_team + "/" + label);
            ++used;
            const std::string dst_rel = dst_team + "/" + label + "/" +
                                        detail::sample_filename(label, slot);
            copy_of[dst_rel] = src_rel;
            group.rel_paths.push_back(dst_rel);
        }
        std::sort(group.rel_paths.begin(), group.rel_paths.end());
        truth.duplicate_groups.push_back(std::move(group));
    }

    std::error_code ec;
    for (const auto& team : spec.teams)
        for (const auto& [label, params] : spec.classes) {
            std::filesystem::create_directories(root / team.team / label, ec);
            if (ec)
                throw std::runtime_error("cannot create output directory: " +
                                         (root / team.team / label).string());
        }

    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        const Job& job = jobs[i];
        if (copy_of.count(job.rel_path)) return;  // written in the copy pass
        Xoshiro256 rng = derive_stream(
            spec.seed,
            {"synth", job.team, job.class_label, std::to_string(job.index)});
        const auto sample = render_sample(*job.cls, *job.domain, rng,
                                          spec.image_size);
        if (!write_file(root / job.rel_path, sample.jpeg_bytes))
            throw std::runtime_error("cannot write " +
                                     (root / job.rel_path).string());
    });

    for (const auto& [dst_rel, src_rel] : copy_of) {
        const auto bytes = read_file(root / src_rel);
        if (!bytes)
            throw std::runtime_error("duplicate source missing: " + src_rel);
        if (!write_file(root / dst_rel, *bytes))
            throw std::runtime_error("cannot write " + (root / dst_rel).string());
    }

    truth.files_written = jobs.size();
    return truth;
}

// Label map that keeps the generator's class folders as-is.
inline LabelMap identity_label_map(const SynthSpec& spec) {
    LabelMap map;
    for (const auto& [label, params] : spec.classes) map[label] = label;
    return map;
}

// ----------------------------------------------------------- default spec

inline SynthSpec default_spec() {
    SynthSpec spec;
    spec.image_size = 96;
    spec.seed = 42;

    const char* labels[6] = {"ash", "carob", "oak", "pepper", "pistachio", "tipu"};
    for (int c = 0; c < 6; ++c) {
        ClassParams params;
        params.lobe_count = c + 1;
        params.base_hue = 55.0 * c;
        params.texture_freq = 2.0 + 0.8 * c;
        spec.classes.emplace_back(labels[c], params);
    }

    for (int t = 0; t < 12; ++t) {
        TeamSpec team;
        char name[16];
        std::snprintf(name, sizeof(name), "team%02d", t + 1);
        team.team = name;
        if (t == 11) {
            // A deliberate outlier: strong hue swing, heavy noise, dim
            // blurred captures at a low encode quality.
            team.domain.hue_shift = 120.0;
            team.domain.brightness_gain = 1.30;
            team.domain.noise_sigma = 10.0;
            team.domain.blur_radius = 2;
            team.domain.encode_quality = 60;
            team.outlier = true;
        } else {
            team.domain.hue_shift = 4.0 * t;
            team.domain.brightness_gain = 0.92 + 0.015 * t;
            team.domain.noise_sigma = 2.0 + 0.4 * t;
            team.domain.blur_radius = (t % 3 == 2) ? 1 : 0;
            team.domain.encode_quality = 95 - t;
        }
        for (const auto& [label, params] : spec.classes) team.counts[label] = 40;
        spec.teams.push_back(std::move(team));
    }
    return spec;
}

// ---------------------------------------------------------- spec JSON IO

inline nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::ordered_json j;
    j["seed"] = spec.seed;
    j["image_size"] = spec.image_size;
    j["classes"] = nlohmann::ordered_json::array();
    for (const auto& [label, params] : spec.classes)
        j["classes"].push_back({{"label", label},
                                {"lobe_count", params.lobe_count},
                                {"base_hue", params.base_hue},
                                {"texture_freq", params.texture_freq}});
    j["teams"] = nlohmann::ordered_json::array();
    for (const auto& team : spec.teams) {
        nlohmann::ordered_json t;
        t["team"] = team.team;
        t["outlier"] = team.outlier;
        t["domain"] = {{"hue_shift", team.domain.hue_shift},
                       {"brightness_gain", team.domain.brightness_gain},
                       {"noise_sigma", team.domain.noise_sigma},
                       {"blur_radius", team.domain.blur_radius},
                       {"encode_quality", team.domain.encode_quality}};
        t["counts"] = nlohmann::ordered_json::object();
        for (const auto& [label, count] : team.counts) t["counts"][label] = count;
        j["teams"].push_back(std::move(t));
    }
    j["planted_duplicate_groups"] = spec.planted_duplicate_groups;
    return j;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.image_size = j.at("image_size").get<int>();
    for (const auto& c : j.at("classes")) {
        ClassParams params;
        params.lobe_count = c.at("lobe_count").get<int>();
        params.base_hue = c.at("base_hue").get<double>();
        params.texture_freq = c.at("texture_freq").get<double>();
        spec.classes.emplace_back(c.at("label").get<std::string>(), params);
    }
    for (const auto& t : j.at("teams")) {
        TeamSpec team;
        team.team = t.at("team").get<std::string>();
        team.outlier = t.value("outlier", false);
        const auto& d = t.at("domain");
        team.domain.hue_shift = d.at("hue_shift").get<double>();
        team.domain.brightness_gain = d.at("brightness_gain").get<double>();
        team.domain.noise_sigma = d.at("noise_sigma").get<double>();
        team.domain.blur_radius = d.at("blur_radius").get<int>();
        team.domain.encode_quality = d.at("encode_quality").get<int>();
        for (const auto& [label, count] : t.at("counts").items())
            team.counts[label] = count.get<int>();
        spec.teams.push_back(std::move(team));
    }
    if (j.contains("planted_duplicate_groups"))
        spec.planted_duplicate_groups =
            j.at("planted_duplicate_groups").get<std::vector<int>>();
    validate_spec(spec);
    return spec;
}

inline void save_synth_spec(const SynthSpec& spec,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write spec: " + path.string());
    out << synth_spec_to_json(spec).dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("spec write failed");
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open spec: " + path.string());
    nlohmann::json j;
    in >> j;
    return synth_spec_from_json(j);
}

inline void save_ground_truth(const GroundTruth& truth,
                              const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["files_written"] = truth.files_written;
    j["duplicate_groups"] = nlohmann::ordered_json::array();
    for (const auto& group : truth.duplicate_groups)
        j["duplicate_groups"].push_back(group.rel_paths);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write ground truth: " + path.string());
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("ground truth write failed");
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open ground truth: " + path.string());
    nlohmann::json j;
    in >> j;
    GroundTruth truth;
    truth.files_written = j.at("files_written").get<std::size_t>();
    for (const auto& group : j.at("duplicate_groups")) {
        PlantedGroup pg;
        pg.rel_paths = group.get<std::vector<std::string>>();
        truth.duplicate_groups.push_back(std::move(pg));
    }
    return truth;
}

}  // namespace ctv
