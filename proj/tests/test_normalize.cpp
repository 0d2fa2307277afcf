#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctv/catalog.hpp"
#include "ctv/normalize.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ctv::LabelMap map6() {
    return ctv::load_label_map(testutil::repo_path("data/label_map.json"));
}

}  // namespace

TEST_CASE("scale step pins the shorter side and rounds the longer") {
    CHECK(ctv::scaled_dims(3000, 4000, 336) == std::pair{336, 448});
    CHECK(ctv::scaled_dims(4000, 3000, 336) == std::pair{448, 336});
    CHECK(ctv::scaled_dims(500, 500, 336) == std::pair{336, 336});
    CHECK(ctv::scaled_dims(200, 300, 336) == std::pair{336, 504});
    CHECK(ctv::scaled_dims(336, 672, 336) == std::pair{336, 672});
    // Rounding can never drop the longer side below the crop window.
    CHECK(ctv::scaled_dims(1000, 1001, 336) == std::pair{336, 336});
}

TEST_CASE("pre-crop aspect ratio is preserved within a pixel") {
    for (const auto [w, h] : {std::pair{3000, 4000}, {1234, 777}, {200, 300},
                              {641, 480}, {1001, 1000}}) {
        const auto [sw, sh] = ctv::scaled_dims(w, h, 336);
        const int shorter = w < h ? sw : sh;
        const int longer = w < h ? sh : sw;
        const double ideal =
            static_cast<double>(std::max(w, h)) * 336 / std::min(w, h);
        CHECK(shorter == 336);
        CHECK(std::abs(longer - ideal) <= 1.0);
    }
}

TEST_CASE("square inputs go straight to the target size") {
    const auto img = testutil::gradient_image(500, 500, 21);
    const auto out = ctv::resize_center_crop(img, 336);
    CHECK(out.width == 336);
    CHECK(out.height == 336);
}

TEST_CASE("small inputs upscale before cropping") {
    const auto img = testutil::gradient_image(200, 300, 22);
    const auto out = ctv::resize_center_crop(img, 336);
    CHECK(out.width == 336);
    CHECK(out.height == 336);
}

TEST_CASE("center crop takes the middle of the scaled image") {
    // 336x672 input: the scale step is the identity, so the crop must
    // reproduce source rows 168..503 exactly.
    ctv::Image img(336, 672, 1);
    for (int y = 0; y < 672; ++y)
        for (int x = 0; x < 336; ++x)
            img.at(x, y, 0) = static_cast<std::uint8_t>((y + x) % 251);
    const auto out = ctv::resize_center_crop(img, 336);
    REQUIRE(out.width == 336);
    REQUIRE(out.height == 336);
    for (int y = 0; y < 336; ++y)
        for (int x = 0; x < 336; x += 7)
            REQUIRE(out.at(x, y, 0) == img.at(x, y + 168, 0));
}

TEST_CASE("odd crop remainders favor the top-left by one") {
    ctv::Image img(10, 13, 1);
    for (int y = 0; y < 13; ++y)
        for (int x = 0; x < 10; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(y);
    const auto cropped = ctv::crop_center(img, 10);
    // offset = floor((13-10)/2) = 1 -> rows 1..10
    CHECK(cropped.at(0, 0, 0) == 1);
    CHECK(cropped.at(0, 9, 0) == 10);
}

TEST_CASE("dataset pass emits only target-size JPEGs with id names") {
    TempDir tmp("norm_run");
    const auto root = tmp.path() / "raw";
    const int sizes[][2] = {{500, 500}, {640, 480}, {200, 300},
                            {336, 672}, {1000, 750}, {333, 333}};
    int idx = 0;
    for (const auto& wh : sizes) {
        const auto img = testutil::gradient_image(wh[0], wh[1],
                                                  static_cast<std::uint64_t>(idx));
        testutil::write_bytes(root / "alpha" / "oak" /
                                  ("img" + std::to_string(idx) + ".png"),
                              ctv::encode_png(img));
        ++idx;
    }
    const auto catalog = ctv::scan_dataset(root, map6());
    const auto out_dir = tmp.path() / "norm";
    const auto report = ctv::process_dataset(catalog, root, out_dir, 336, 95);
    CHECK(report.images_processed == 6);
    CHECK(report.failures.empty());
    CHECK(report.input_bytes > 0);
    CHECK(report.output_bytes > 0);

    int found = 0;
    for (const auto& rec : catalog.records) {
        const auto path = out_dir / rec.team / rec.class_label /
                          (rec.image_id + ".jpg");
        REQUIRE(fs::exists(path));
        const auto decoded = ctv::decode_jpeg(*ctv::read_file(path));
        REQUIRE(decoded.ok);
        CHECK(decoded.image.width == 336);
        CHECK(decoded.image.height == 336);
        ++found;
    }
    CHECK(found == 6);
}

TEST_CASE("reprocessing writes byte-identical outputs") {
    TempDir tmp("norm_idem");
    const auto root = tmp.path() / "raw";
    for (int i = 0; i < 4; ++i) {
        const auto img = testutil::gradient_image(400 + 40 * i, 300, 50 + i);
        testutil::write_bytes(root / "alpha" / "oak" /
                                  ("p" + std::to_string(i) + ".png"),
                              ctv::encode_png(img));
    }
    const auto catalog = ctv::scan_dataset(root, map6());
    const auto out1 = tmp.path() / "n1";
    const auto out2 = tmp.path() / "n2";
    ctv::process_dataset(catalog, root, out1, 336, 95, 1);
    ctv::process_dataset(catalog, root, out2, 336, 95, 4);
    for (const auto& rec : catalog.records) {
        const auto rel = fs::path(rec.team) / rec.class_label / (rec.image_id + ".jpg");
        CHECK(slurp(out1 / rel) == slurp(out2 / rel));
    }
}

TEST_CASE("unreadable inputs become failure entries and the run continues") {
    TempDir tmp("norm_fail");
    const auto root = tmp.path() / "raw";
    testutil::write_bytes(root / "alpha" / "oak" / "good.png",
                          ctv::encode_png(testutil::gradient_image(400, 300, 3)));
    auto broken = ctv::encode_jpeg(testutil::gradient_image(300, 300, 4), 90);
    broken.resize(broken.size() / 2);
    testutil::write_bytes(root / "alpha" / "oak" / "bad.jpg", broken);

    const auto catalog = ctv::scan_dataset(root, map6());
    const auto report =
        ctv::process_dataset(catalog, root, tmp.path() / "out", 336, 95);
    CHECK(report.images_processed == 1);
    REQUIRE(report.failures.size() == 1);
    CHECK(report.failures[0].second == "unreadable");
    CHECK(report.images_processed + report.failures.size() ==
          catalog.records.size());
}

TEST_CASE("empty catalog produces an all-zero report") {
    TempDir tmp("norm_empty");
    ctv::Catalog empty;
    const auto report =
        ctv::process_dataset(empty, tmp.path(), tmp.path() / "out");
    CHECK(report.images_processed == 0);
    CHECK(report.input_bytes == 0);
    CHECK(report.output_bytes == 0);
    CHECK(report.failures.empty());
}

TEST_CASE("high-resolution inputs shrink on disk") {
    TempDir tmp("norm_shrink");
    const auto root = tmp.path() / "raw";
    for (int i = 0; i < 3; ++i) {
        const auto img = testutil::gradient_image(2000, 1500, 60 + i);
        testutil::write_bytes(root / "alpha" / "oak" /
                                  ("big" + std::to_string(i) + ".png"),
                              ctv::encode_png(img));
    }
    const auto catalog = ctv::scan_dataset(root, map6());
    const auto report =
        ctv::process_dataset(catalog, root, tmp.path() / "out", 336, 95);
    CHECK(report.output_bytes < report.input_bytes);
}

TEST_CASE("normalize report serializes to JSON") {
    TempDir tmp("norm_json");
    ctv::NormalizeReport report;
    report.images_processed = 5;
    report.input_bytes = 1000;
    report.output_bytes = 300;
    report.failures = {{"abc", "unreadable"}};
    const auto path = tmp.path() / "report.json";
    ctv::save_normalize_report(report, path);
    const auto j = nlohmann::json::parse(slurp(path));
    CHECK(j["images_processed"] == 5);
    CHECK(j["input_bytes"] == 1000);
    CHECK(j["output_bytes"] == 300);
    REQUIRE(j["failures"].size() == 1);
    CHECK(j["failures"][0]["image_id"] == "abc");
    CHECK(j["failures"][0]["reason"] == "unreadable");
}
