#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctv/catalog.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

ctv::LabelMap test_label_map() {
    return ctv::load_label_map(testutil::repo_path("data/label_map.json"));
}

// root/<team>/<class>/<file> tree with `files` images per class folder.
void build_tree(const fs::path& root, const std::vector<std::string>& teams,
                const std::vector<std::string>& classes, int files) {
    std::uint64_t seed = 1;
    for (const auto& team : teams)
        for (const auto& cls : classes)
            for (int i = 0; i < files; ++i) {
                const auto img = testutil::gradient_image(48, 36, seed++);
                testutil::write_bytes(root / team / cls /
                                          ("img_" + std::to_string(i) + ".png"),
                                      ctv::encode_png(img));
            }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::tuple<std::string, std::string, std::uint64_t>>
load_count_fixture(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::tuple<std::string, std::string, std::uint64_t>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        rows.emplace_back(line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                          std::stoull(line.substr(c2 + 1)));
    }
    return rows;
}

}  // namespace

TEST_CASE("label folding strips accents and case") {
    CHECK(ctv::fold_label("Chêne") == "chene");
    CHECK(ctv::fold_label("chêne") == "chene");
    CHECK(ctv::fold_label("Frêne") == "frene");
    CHECK(ctv::fold_label("PISTACHIER") == "pistachier");
    CHECK(ctv::fold_label("cœur") == "coeur");
    CHECK(ctv::fold_label("plain") == "plain");
    // Combining-mark form (e + U+0301) folds the same as precomposed.
    CHECK(ctv::fold_label("e\xcc\x81te\xcc\x81") == "ete");
}

TEST_CASE("class labels resolve through chained map entries") {
    const auto map = test_label_map();
    CHECK(ctv::normalize_class_label("chenes", map) == "oak");
    CHECK(ctv::normalize_class_label("chene", map) == "oak");
    CHECK(ctv::normalize_class_label("Chêne", map) == "oak");
    CHECK(ctv::normalize_class_label("oak", map) == "oak");
    CHECK(ctv::normalize_class_label("caroubiers", map) == "carob");
    CHECK(ctv::normalize_class_label("Frênes", map) == "ash");
    CHECK(ctv::normalize_class_label("pistachiers", map) == "pistachio");
    CHECK(ctv::normalize_class_label("tipuana", map) == "tipu");
    CHECK_THROWS_WITH(ctv::normalize_class_label("banana", map),
                      Catch::Matchers::ContainsSubstring("banana"));
}

TEST_CASE("default map covers the six canonical classes") {
    const auto vocab = ctv::canonical_vocabulary(test_label_map());
    CHECK(vocab == std::set<std::string>{"ash", "carob", "oak", "pepper",
                                         "pistachio", "tipu"});
}

TEST_CASE("scan counts one record per accepted file") {
    TempDir tmp("scan_count");
    build_tree(tmp.path(), {"alpha", "beta"}, {"oak", "carob"}, 3);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    REQUIRE(catalog.records.size() == 12);
    for (const auto& r : catalog.records) {
        CHECK(r.readable);
        CHECK(r.width_px == 48);
        CHECK(r.height_px == 36);
        CHECK(r.format == ctv::ImageFormat::PNG);
        CHECK(r.phash.has_value());
        CHECK(r.file_size_bytes > 0);
    }
}

TEST_CASE("scan sorts records by relative path and indexes them") {
    TempDir tmp("scan_sort");
    build_tree(tmp.path(), {"zeta", "alpha"}, {"oak"}, 2);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    REQUIRE(catalog.records.size() == 4);
    for (std::size_t i = 1; i < catalog.records.size(); ++i)
        CHECK(catalog.records[i - 1].rel_path < catalog.records[i].rel_path);
    CHECK(catalog.team_index.at("alpha").size() == 2);
    CHECK(catalog.team_index.at("zeta").size() == 2);
    CHECK(catalog.cell_index.at({"alpha", "oak"}).size() == 2);
    const auto* rec = catalog.find(catalog.records[0].image_id);
    REQUIRE(rec != nullptr);
    CHECK(rec->rel_path == catalog.records[0].rel_path);
}

TEST_CASE("truncated image is retained as unreadable") {
    TempDir tmp("scan_trunc");
    build_tree(tmp.path(), {"alpha"}, {"oak"}, 1);
    auto jpeg = ctv::encode_jpeg(testutil::gradient_image(64, 64, 9), 90);
    jpeg.resize(jpeg.size() / 3);
    testutil::write_bytes(tmp.path() / "alpha" / "oak" / "broken.jpg", jpeg);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    REQUIRE(catalog.records.size() == 2);
    const auto& bad = catalog.records[0].rel_path.find("broken") != std::string::npos
                          ? catalog.records[0]
                          : catalog.records[1];
    CHECK_FALSE(bad.readable);
    CHECK(bad.width_px == 0);
    CHECK(bad.height_px == 0);
    CHECK_FALSE(bad.phash.has_value());
    CHECK(bad.format == ctv::ImageFormat::JPEG);
    CHECK(bad.file_size_bytes > 0);
}

TEST_CASE("unmapped class folder aborts the scan with its name") {
    TempDir tmp("scan_bad_label");
    build_tree(tmp.path(), {"alpha"}, {"oak"}, 1);
    const auto img = testutil::gradient_image(32, 32, 5);
    testutil::write_bytes(tmp.path() / "alpha" / "banana" / "x.png",
                          ctv::encode_png(img));
    CHECK_THROWS_WITH(ctv::scan_dataset(tmp.path(), test_label_map()),
                      Catch::Matchers::ContainsSubstring("banana"));
}

TEST_CASE("missing root is fatal") {
    CHECK_THROWS(ctv::scan_dataset("/nonexistent/ctv/root", test_label_map()));
}

TEST_CASE("scan skips files without image extensions") {
    TempDir tmp("scan_skip");
    build_tree(tmp.path(), {"alpha"}, {"oak"}, 2);
    testutil::write_bytes(tmp.path() / "alpha" / "oak" / "notes.txt",
                          {'h', 'i'});
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    CHECK(catalog.records.size() == 2);
}

TEST_CASE("metadata extraction reads the capture device from JPEG") {
    TempDir tmp("meta_jpeg");
    const auto img = testutil::gradient_image(64, 48, 3);
    const auto path = tmp.path() / "shot.jpg";
    testutil::write_bytes(path, ctv::encode_jpeg(img, 90, std::string("iPhone 11")));
    const auto meta = ctv::extract_metadata(path);
    CHECK(meta.format == ctv::ImageFormat::JPEG);
    CHECK(meta.readable);
    CHECK(meta.width_px == 64);
    CHECK(meta.height_px == 48);
    REQUIRE(meta.device.has_value());
    CHECK(*meta.device == "iPhone 11");
}

TEST_CASE("metadata extraction leaves device absent for plain PNG") {
    TempDir tmp("meta_png");
    const auto path = tmp.path() / "shot.png";
    testutil::write_bytes(path, ctv::encode_png(testutil::gradient_image(20, 20, 4)));
    const auto meta = ctv::extract_metadata(path);
    CHECK(meta.format == ctv::ImageFormat::PNG);
    CHECK(meta.readable);
    CHECK_FALSE(meta.device.has_value());
}

TEST_CASE("metadata extraction handles TIFF dimensions and device") {
    TempDir tmp("meta_tiff");
    const auto img = testutil::gradient_image(640, 480, 6);
    const auto path = tmp.path() / "scan.tif";
    testutil::write_bytes(path, ctv::encode_tiff(img, std::string("Canon EOS R5")));
    const auto meta = ctv::extract_metadata(path);
    CHECK(meta.format == ctv::ImageFormat::TIFF);
    CHECK(meta.readable);
    CHECK(meta.width_px == 640);
    CHECK(meta.height_px == 480);
    REQUIRE(meta.device.has_value());
    CHECK(*meta.device == "Canon EOS R5");
}

TEST_CASE("codec round-trips preserve pixels where lossless") {
    const auto img = testutil::noise_image(31, 22, 3, 77);
    SECTION("png") {
        const auto decoded = ctv::decode_png(ctv::encode_png(img));
        REQUIRE(decoded.ok);
        CHECK(decoded.image.pixels == img.pixels);
    }
    SECTION("bmp") {
        const auto decoded = ctv::decode_bmp(ctv::encode_bmp(img));
        REQUIRE(decoded.ok);
        CHECK(decoded.image.pixels == img.pixels);
    }
    SECTION("tiff") {
        const auto decoded = ctv::decode_tiff(ctv::encode_tiff(img));
        REQUIRE(decoded.ok);
        CHECK(decoded.image.pixels == img.pixels);
        CHECK_FALSE(decoded.device.has_value());
    }
    SECTION("jpeg stays close") {
        const auto decoded = ctv::decode_jpeg(ctv::encode_jpeg(img, 95));
        REQUIRE(decoded.ok);
        CHECK(decoded.image.width == img.width);
        CHECK(decoded.image.height == img.height);
    }
}

TEST_CASE("tiff short device strings fit inline") {
    const auto img = testutil::gradient_image(8, 8, 2);
    const auto decoded = ctv::decode_tiff(ctv::encode_tiff(img, std::string("X1")));
    REQUIRE(decoded.ok);
    REQUIRE(decoded.device.has_value());
    CHECK(*decoded.device == "X1");
}

TEST_CASE("format sniffing recognizes magic bytes over extensions") {
    const auto img = testutil::gradient_image(10, 10, 8);
    CHECK(ctv::sniff_format(ctv::encode_jpeg(img, 90)) == ctv::ImageFormat::JPEG);
    CHECK(ctv::sniff_format(ctv::encode_png(img)) == ctv::ImageFormat::PNG);
    CHECK(ctv::sniff_format(ctv::encode_bmp(img)) == ctv::ImageFormat::BMP);
    CHECK(ctv::sniff_format(ctv::encode_tiff(img)) == ctv::ImageFormat::TIFF);
    CHECK(ctv::sniff_format({0x00, 0x01}) == ctv::ImageFormat::UNKNOWN);

    std::vector<std::uint8_t> heic = {0, 0, 0, 0x18, 'f', 't', 'y', 'p',
                                      'h', 'e', 'i', 'c', 0, 0, 0, 0};
    CHECK(ctv::sniff_format(heic) == ctv::ImageFormat::HEIC);
}

TEST_CASE("HEIC files are catalogued but unreadable") {
    TempDir tmp("scan_heic");
    build_tree(tmp.path(), {"alpha"}, {"oak"}, 1);
    std::vector<std::uint8_t> heic = {0, 0, 0, 0x18, 'f', 't', 'y', 'p',
                                      'm', 'i', 'f', '1', 0, 0, 0, 0};
    for (int i = 0; i < 64; ++i) heic.push_back(0);
    testutil::write_bytes(tmp.path() / "alpha" / "oak" / "pic.heic", heic);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    REQUIRE(catalog.records.size() == 2);
    const auto& rec = catalog.records[0].format == ctv::ImageFormat::HEIC
                          ? catalog.records[0]
                          : catalog.records[1];
    CHECK(rec.format == ctv::ImageFormat::HEIC);
    CHECK_FALSE(rec.readable);
    CHECK(rec.width_px == 0);
    CHECK(rec.height_px == 0);
}

TEST_CASE("scanning the same tree twice is byte-identical") {
    TempDir tmp("scan_idem");
    build_tree(tmp.path(), {"alpha", "beta", "gamma"}, {"oak", "tipu"}, 2);
    const auto first = ctv::scan_dataset(tmp.path(), test_label_map(), 1);
    const auto second = ctv::scan_dataset(tmp.path(), test_label_map(), 4);
    const auto f1 = tmp.path() / "cat1.jsonl";
    const auto f2 = tmp.path() / "cat2.jsonl";
    ctv::save_catalog_jsonl(first, f1);
    ctv::save_catalog_jsonl(second, f2);
    CHECK(slurp(f1) == slurp(f2));
}

TEST_CASE("catalog JSONL round-trips") {
    TempDir tmp("cat_roundtrip");
    build_tree(tmp.path(), {"alpha"}, {"oak", "carob"}, 2);
    auto jpeg = ctv::encode_jpeg(testutil::gradient_image(30, 30, 10), 90,
                                 std::string("Pixel 7"));
    testutil::write_bytes(tmp.path() / "alpha" / "oak" / "device.jpg", jpeg);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    const auto file = tmp.path() / "cat.jsonl";
    ctv::save_catalog_jsonl(catalog, file);
    const auto loaded = ctv::load_catalog_jsonl(file);
    REQUIRE(loaded.records.size() == catalog.records.size());
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        const auto& a = catalog.records[i];
        const auto& b = loaded.records[i];
        CHECK(a.image_id == b.image_id);
        CHECK(a.team == b.team);
        CHECK(a.class_label == b.class_label);
        CHECK(a.rel_path == b.rel_path);
        CHECK(a.format == b.format);
        CHECK(a.width_px == b.width_px);
        CHECK(a.height_px == b.height_px);
        CHECK(a.file_size_bytes == b.file_size_bytes);
        CHECK(a.device == b.device);
        CHECK(a.phash == b.phash);
        CHECK(a.readable == b.readable);
    }
}

TEST_CASE("image ids are deterministic functions of the relative path") {
    CHECK(ctv::make_image_id("a/b/c.png") == ctv::make_image_id("a/b/c.png"));
    CHECK(ctv::make_image_id("a/b/c.png") != ctv::make_image_id("a/b/d.png"));
    CHECK(ctv::make_image_id("t/c/f.jpg").size() == 16);
}

TEST_CASE("distribution table reproduces the shipped fixture totals") {
    const auto rows =
        load_count_fixture(testutil::repo_path("data/reference_distribution.csv"));
    REQUIRE(rows.size() == 72);  // 12 teams x 6 classes
    const auto table = ctv::distribution_from_counts(rows);
    REQUIRE(table.teams.size() == 12);
    REQUIRE(table.classes.size() == 6);
    const auto team_pos =
        std::find(table.teams.begin(), table.teams.end(), "AI-4o");
    REQUIRE(team_pos != table.teams.end());
    const auto ti = static_cast<std::size_t>(team_pos - table.teams.begin());
    CHECK(table.team_totals[ti] == 7344);
    CHECK(table.grand_total == 50673);

    // Row/column sums must agree with the grand total.
    std::uint64_t from_teams = 0, from_classes = 0;
    for (auto v : table.team_totals) from_teams += v;
    for (auto v : table.class_totals) from_classes += v;
    CHECK(from_teams == table.grand_total);
    CHECK(from_classes == table.grand_total);
}

TEST_CASE("distribution of an empty catalog is all zero") {
    ctv::Catalog empty;
    const auto table = ctv::distribution_table(empty);
    CHECK(table.teams.empty());
    CHECK(table.grand_total == 0);
}

TEST_CASE("distribution of a single record is a single cell") {
    ctv::Catalog catalog;
    ctv::ImageRecord r;
    r.image_id = "x";
    r.team = "alpha";
    r.class_label = "oak";
    r.rel_path = "alpha/oak/x.png";
    catalog.records.push_back(r);
    catalog.rebuild_indexes();
    const auto table = ctv::distribution_table(catalog);
    REQUIRE(table.teams.size() == 1);
    REQUIRE(table.classes.size() == 1);
    CHECK(table.cells[0][0] == 1);
    CHECK(table.grand_total == 1);
}

TEST_CASE("scan catalogues teams and classes from folder names") {
    TempDir tmp("scan_names");
    build_tree(tmp.path(), {"TeamX"}, {"chenes"}, 1);
    const auto catalog = ctv::scan_dataset(tmp.path(), test_label_map());
    REQUIRE(catalog.records.size() == 1);
    CHECK(catalog.records[0].team == "TeamX");
    CHECK(catalog.records[0].class_label == "oak");
    CHECK(catalog.records[0].rel_path == "TeamX/chenes/img_0.png");
}
