#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ctv/dedup.hpp"
#include "ctv/synthgen.hpp"
#include "test_util.hpp"

using namespace ctv;

namespace {

// Oracle: hue recovered from RGB the textbook way; returns a negative
// value when the pixel is achromatic and hue is undefined.
double pixel_hue(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double delta = mx - mn;
    if (delta < 1e-9) return -1.0;
    double h;
    if (mx == r)
        h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
        h = 60.0 * ((b - r) / delta + 2.0);
    else
        h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0) h += 360.0;
    return h;
}

double circular_diff(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 360.0 - d);
}

SynthSpec small_spec() {
    SynthSpec spec;
    spec.image_size = 64;
    spec.seed = 7;
    ClassParams ash;
    ash.lobe_count = 2;
    ash.base_hue = 10.0;
    ash.texture_freq = 2.5;
    ClassParams oak;
    oak.lobe_count = 5;
    oak.base_hue = 130.0;
    oak.texture_freq = 4.0;
    spec.classes = {{"ash", ash}, {"oak", oak}};

    const char* names[3] = {"east", "north", "west"};
    for (int t = 0; t < 3; ++t) {
        TeamSpec team;
        team.team = names[t];
        team.domain.hue_shift = 35.0 * t;
        team.domain.noise_sigma = 1.5 * t;
        team.domain.encode_quality = 95 - 5 * t;
        team.counts = {{"ash", 5}, {"oak", 5}};
        spec.teams.push_back(std::move(team));
    }
    return spec;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    const auto bytes = read_file(p);
    REQUIRE(bytes.has_value());
    return *bytes;
}

}  // namespace

TEST_CASE("rendering is a pure function of the rng state") {
    ClassParams cls;
    cls.lobe_count = 3;
    cls.base_hue = 90.0;
    cls.texture_freq = 3.0;

    SECTION("clean domain") {
        DomainParams clean;
        Xoshiro256 a(1234), b(1234);
        const auto s1 = render_sample(cls, clean, a, 64);
        const auto s2 = render_sample(cls, clean, b, 64);
        REQUIRE(s1.jpeg_bytes == s2.jpeg_bytes);
        REQUIRE(s1.image.pixels == s2.image.pixels);
        REQUIRE(s1.foreground_pixels == s2.foreground_pixels);
    }

    SECTION("noisy, blurred, dim domain") {
        DomainParams rough;
        rough.hue_shift = 40.0;
        rough.brightness_gain = 0.8;
        rough.noise_sigma = 6.0;
        rough.blur_radius = 1;
        rough.encode_quality = 70;
        Xoshiro256 a(99), b(99);
        REQUIRE(render_sample(cls, rough, a, 64).jpeg_bytes ==
                render_sample(cls, rough, b, 64).jpeg_bytes);
    }
}

TEST_CASE("hue shift separates teams by a wide pixel-hue margin") {
    ClassParams cls;
    cls.lobe_count = 4;
    cls.base_hue = 80.0;
    cls.texture_freq = 3.0;
    DomainParams plain, shifted;
    shifted.hue_shift = 60.0;

    double total = 0.0;
    int counted = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Xoshiro256 a(500 + static_cast<std::uint64_t>(trial));
        Xoshiro256 b(500 + static_cast<std::uint64_t>(trial));
        const auto s1 = render_sample(cls, plain, a, 64);
        const auto s2 = render_sample(cls, shifted, b, 64);
        for (std::size_t i = 0; i + 2 < s1.image.pixels.size(); i += 3) {
            const double h1 = pixel_hue(s1.image.pixels[i], s1.image.pixels[i + 1],
                                        s1.image.pixels[i + 2]);
            const double h2 = pixel_hue(s2.image.pixels[i], s2.image.pixels[i + 1],
                                        s2.image.pixels[i + 2]);
            if (h1 < 0 || h2 < 0) continue;
            total += circular_diff(h1, h2);
            ++counted;
        }
    }
    REQUIRE(counted > 1000);
    REQUIRE(total / counted > 30.0);
}

TEST_CASE("lobe count changes the silhouette area measurably") {
    DomainParams clean;
    ClassParams two, six;
    two.lobe_count = 2;
    two.base_hue = 100.0;
    two.texture_freq = 3.0;
    six = two;
    six.lobe_count = 6;

    double area2 = 0.0, area6 = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Xoshiro256 a(900 + static_cast<std::uint64_t>(trial));
        Xoshiro256 b(900 + static_cast<std::uint64_t>(trial));
        area2 += render_sample(two, clean, a, 96).foreground_pixels;
        area6 += render_sample(six, clean, b, 96).foreground_pixels;
    }
    REQUIRE(area6 > area2 * 1.08);
}

TEST_CASE("default spec mirrors the twelve-team six-class shape") {
    const auto spec = default_spec();
    REQUIRE(spec.teams.size() == 12);
    REQUIRE(spec.classes.size() == 6);
    REQUIRE(spec.seed == 42);
    REQUIRE(spec.image_size == 96);

    int outliers = 0;
    std::size_t total = 0;
    for (const auto& team : spec.teams) {
        if (team.outlier) ++outliers;
        for (const auto& [label, count] : team.counts) {
            REQUIRE(count == 40);
            total += static_cast<std::size_t>(count);
        }
    }
    REQUIRE(outliers == 1);
    REQUIRE(total == 2880);

    // Class params must be pairwise distinct.
    std::set<int> lobes;
    std::set<double> hues, freqs;
    for (const auto& [label, params] : spec.classes) {
        lobes.insert(params.lobe_count);
        hues.insert(params.base_hue);
        freqs.insert(params.texture_freq);
    }
    REQUIRE(lobes.size() == 6);
    REQUIRE(hues.size() == 6);
    REQUIRE(freqs.size() == 6);
    REQUIRE_NOTHROW(validate_spec(spec));
}

TEST_CASE("spec validation rejects malformed inputs") {
    auto spec = small_spec();
    spec.teams.resize(1);
    REQUIRE_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = small_spec();
    spec.classes.push_back(spec.classes[0]);  // duplicate label
    REQUIRE_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = small_spec();
    spec.planted_duplicate_groups = {4};  // larger than team count
    REQUIRE_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = small_spec();
    spec.teams[0].domain.encode_quality = 30;
    REQUIRE_THROWS_AS(validate_spec(spec), std::invalid_argument);

    spec = small_spec();
    spec.classes[0].second.lobe_count = 0;
    REQUIRE_THROWS_AS(validate_spec(spec), std::invalid_argument);
}

TEST_CASE("generated trees scan back to the exact per-cell counts") {
    testutil::TempDir tmp("synth");
    const auto spec = small_spec();
    const auto truth = generate(spec, tmp.path(), 2);
    REQUIRE(truth.files_written == 30);
    REQUIRE(truth.duplicate_groups.empty());

    const auto catalog = scan_dataset(tmp.path(), identity_label_map(spec), 2);
    REQUIRE(catalog.records.size() == 30);
    for (const auto& rec : catalog.records) {
        REQUIRE(rec.readable);
        REQUIRE(rec.format == ImageFormat::JPEG);
        REQUIRE(rec.width_px == 64);
        REQUIRE(rec.height_px == 64);
        REQUIRE(rec.phash.has_value());
    }
    const auto table = distribution_table(catalog);
    REQUIRE(table.teams == std::vector<std::string>{"east", "north", "west"});
    REQUIRE(table.classes == std::vector<std::string>{"ash", "oak"});
    for (std::size_t t = 0; t < table.teams.size(); ++t)
        for (std::size_t c = 0; c < table.classes.size(); ++c)
            REQUIRE(table.cells[t][c] == 5);
}

TEST_CASE("generation is reproducible file for file across runs and threads") {
    testutil::TempDir a("synth_a"), b("synth_b");
    const auto spec = small_spec();
    generate(spec, a.path(), 1);
    generate(spec, b.path(), 4);

    const auto catalog_a = scan_dataset(a.path(), identity_label_map(spec), 1);
    const auto catalog_b = scan_dataset(b.path(), identity_label_map(spec), 1);
    const auto jsonl_a = a.path() / "catalog.jsonl";
    const auto jsonl_b = b.path() / "catalog.jsonl";
    save_catalog_jsonl(catalog_a, jsonl_a);
    save_catalog_jsonl(catalog_b, jsonl_b);
    REQUIRE(slurp(jsonl_a) == slurp(jsonl_b));

    // Spot-check raw bytes of one file from each cell.
    for (const auto& rec : catalog_a.records)
        if (rec.rel_path.ends_with("_0000.jpg"))
            REQUIRE(slurp(a.path() / rec.rel_path) == slurp(b.path() / rec.rel_path));
}

TEST_CASE("planted duplicates are recovered exactly by dedup") {
    testutil::TempDir tmp("synthdup");
    SynthSpec spec;
    spec.image_size = 64;
    spec.seed = 11;
    ClassParams c0, c1;
    c0.lobe_count = 2;
    c0.base_hue = 20.0;
    c0.texture_freq = 2.0;
    c1.lobe_count = 5;
    c1.base_hue = 200.0;
    c1.texture_freq = 5.0;
    spec.classes = {{"pepper", c0}, {"tipu", c1}};
    const char* names[4] = {"t_a", "t_b", "t_c", "t_d"};
    for (int t = 0; t < 4; ++t) {
        TeamSpec team;
        team.team = names[t];
        team.domain.hue_shift = 20.0 * t;
        team.counts = {{"pepper", 6}, {"tipu", 6}};
        spec.teams.push_back(std::move(team));
    }
    spec.planted_duplicate_groups = {3, 2};

    const auto truth = generate(spec, tmp.path(), 2);
    REQUIRE(truth.files_written == 48);
    REQUIRE(truth.duplicate_groups.size() == 2);

    const auto catalog = scan_dataset(tmp.path(), identity_label_map(spec), 2);
    const auto groups = group_duplicates(catalog);

    std::set<std::set<std::string>> expected;
    for (const auto& group : truth.duplicate_groups) {
        std::set<std::string> ids;
        for (const auto& rel : group.rel_paths) ids.insert(make_image_id(rel));
        expected.insert(std::move(ids));
    }
    std::set<std::set<std::string>> found;
    for (const auto& group : groups)
        found.insert(std::set<std::string>(group.member_ids.begin(),
                                           group.member_ids.end()));
    REQUIRE(found == expected);

    SECTION("copies really are byte-identical files") {
        const auto& g = truth.duplicate_groups[0];
        REQUIRE(g.rel_paths.size() == 3);
        const auto first = slurp(tmp.path() / g.rel_paths[0]);
        for (std::size_t i = 1; i < g.rel_paths.size(); ++i)
            REQUIRE(slurp(tmp.path() / g.rel_paths[i]) == first);
    }

    SECTION("dedup removes exactly the extra copies") {
        const auto result = apply_dedup(catalog);
        REQUIRE(result.removed_ids.size() == 3);  // (3-1) + (2-1)
        REQUIRE(result.retained.records.size() == 45);
    }

    SECTION("ground truth JSON round-trips") {
        const auto path = tmp.path() / "truth.json";
        save_ground_truth(truth, path);
        const auto loaded = load_ground_truth(path);
        REQUIRE(loaded.files_written == truth.files_written);
        REQUIRE(loaded.duplicate_groups.size() == truth.duplicate_groups.size());
        for (std::size_t i = 0; i < loaded.duplicate_groups.size(); ++i)
            REQUIRE(loaded.duplicate_groups[i].rel_paths ==
                    truth.duplicate_groups[i].rel_paths);
    }
}

TEST_CASE("spec JSON round-trips through file and memory") {
    testutil::TempDir tmp("specjson");
    auto spec = default_spec();
    spec.planted_duplicate_groups = {2, 3};

    const auto j = synth_spec_to_json(spec);
    const auto back = synth_spec_from_json(j);
    REQUIRE(synth_spec_to_json(back) == j);
    REQUIRE(back.teams.size() == spec.teams.size());
    REQUIRE(back.classes.size() == spec.classes.size());
    REQUIRE(back.seed == spec.seed);
    REQUIRE(back.planted_duplicate_groups == spec.planted_duplicate_groups);
    REQUIRE(back.teams[11].outlier);
    REQUIRE(back.teams[11].domain.hue_shift == spec.teams[11].domain.hue_shift);

    const auto path = tmp.path() / "spec.json";
    save_synth_spec(spec, path);
    const auto loaded = load_synth_spec(path);
    REQUIRE(synth_spec_to_json(loaded) == j);
}
