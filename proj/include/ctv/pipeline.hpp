#pragma once

// Stage orchestration. Every stage reads and writes file artifacts under a
// working directory, so any stage can be re-run in isolation or swapped for
// an external tool (e.g. a GPU trainer dropping prediction CSVs in place of
// the train stage). Stage outputs are pure functions of their input
// artifacts plus the config: no clocks, no hostnames, no environment values
// ever reach an artifact.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctv/baseline.hpp"
#include "ctv/catalog.hpp"
#include "ctv/dedup.hpp"
#include "ctv/log.hpp"
#include "ctv/metrics.hpp"
#include "ctv/normalize.hpp"
#include "ctv/report.hpp"
#include "ctv/splits.hpp"
#include "ctv/synthgen.hpp"

namespace ctv {

// --------------------------------------------------------------- config

struct PipelineConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path workdir;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> label_map_path;
    std::optional<std::filesystem::path> synth_spec_path;
    int normalize_target = 336;
    int normalize_quality = 95;
    double train_frac = 0.7;
    std::uint64_t seed = 42;
    TrainConfig train;
};

inline void validate_pipeline_config(const PipelineConfig& cfg) {
    if (cfg.dataset_root.empty()) throw std::invalid_argument("dataset_root is empty");
    if (cfg.workdir.empty()) throw std::invalid_argument("workdir is empty");
    if (cfg.output_dir.empty()) throw std::invalid_argument("output_dir is empty");
    if (cfg.normalize_target <= 0)
        throw std::invalid_argument("normalize_target must be positive");
    if (cfg.normalize_quality < 1 || cfg.normalize_quality > 100)
        throw std::invalid_argument("normalize_quality must be in [1,100]");
    if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0))
        throw std::invalid_argument("train_frac must be in (0,1)");
    validate_config(cfg.train);
}

namespace detail {

inline std::filesystem::path resolve_against(const std::filesystem::path& base,
                                             const std::filesystem::path& p) {
    if (p.is_absolute()) return p.lexically_normal();
    return (base / p).lexically_normal();
}

}  // namespace detail

// Relative paths in the config file are resolved against the directory the
// config file lives in, so a config travels with its data.
inline PipelineConfig pipeline_config_from_json(
    const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
    PipelineConfig cfg;
    const auto need_path = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string())
            throw std::runtime_error(std::string("config is missing \"") + key +
                                     "\" (string path)");
        return detail::resolve_against(base_dir,
                                       j.at(key).get<std::string>());
    };
    cfg.dataset_root = need_path("dataset_root");
    cfg.workdir = need_path("workdir");
    cfg.output_dir = need_path("output_dir");
    if (j.contains("label_map"))
        cfg.label_map_path =
            detail::resolve_against(base_dir, j.at("label_map").get<std::string>());
    if (j.contains("synth_spec"))
        cfg.synth_spec_path =
            detail::resolve_against(base_dir, j.at("synth_spec").get<std::string>());
    cfg.normalize_target = j.value("normalize_target", cfg.normalize_target);
    cfg.normalize_quality = j.value("normalize_quality", cfg.normalize_quality);
    cfg.train_frac = j.value("train_frac", cfg.train_frac);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.train.seed = cfg.seed;
    if (j.contains("train")) {
        const auto& t = j.at("train");
        if (!t.is_object()) throw std::runtime_error("config \"train\" must be an object");
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.lr0 = t.value("lr0", cfg.train.lr0);
        cfg.train.lr_min = t.value("lr_min", cfg.train.lr_min);
        cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
        cfg.train.dropout = t.value("dropout", cfg.train.dropout);
        cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    validate_pipeline_config(cfg);
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error in " + path.string() + ": " +
                                 e.what());
    }
    return pipeline_config_from_json(j, path.parent_path());
}

// A single seed governs the run end to end: synthesis, splitting, training.
inline void override_seed(PipelineConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.train.seed = seed;
}

// ------------------------------------------------------------- artifacts

struct StagePaths {
    std::filesystem::path raw_catalog;
    std::filesystem::path dedup_catalog;
    std::filesystem::path removal_report;
    std::filesystem::path normalized_dir;
    std::filesystem::path normalize_report;
    std::filesystem::path splits_dir;
    std::filesystem::path models_dir;
    std::filesystem::path curves_dir;
    std::filesystem::path predictions_dir;
    std::filesystem::path synth_spec_used;
    std::filesystem::path synth_truth;
    std::filesystem::path synth_labels;
    std::filesystem::path workdir;

    std::filesystem::path runs(Protocol p) const {
        return workdir / (std::string("runs_") + protocol_name(p) + ".json");
    }
};

inline StagePaths stage_paths(const PipelineConfig& cfg) {
    StagePaths p;
    p.workdir = cfg.workdir;
    p.raw_catalog = cfg.workdir / "catalog.jsonl";
    p.dedup_catalog = cfg.workdir / "catalog_dedup.jsonl";
    p.removal_report = cfg.workdir / "removals.csv";
    p.normalized_dir = cfg.workdir / "normalized";
    p.normalize_report = cfg.workdir / "normalize_report.json";
    p.splits_dir = cfg.workdir / "splits";
    p.models_dir = cfg.workdir / "models";
    p.curves_dir = cfg.workdir / "curves";
    p.predictions_dir = cfg.workdir / "predictions";
    p.synth_spec_used = cfg.workdir / "synth_spec_used.json";
    p.synth_truth = cfg.workdir / "synth_ground_truth.json";
    p.synth_labels = cfg.workdir / "synth_label_map.json";
    return p;
}

struct OutputPaths {
    std::filesystem::path dir;
    std::filesystem::path results_csv(Protocol p) const {
        return dir / (std::string("results_") + protocol_name(p) + ".csv");
    }
    std::filesystem::path results_json(Protocol p) const {
        return dir / (std::string("results_") + protocol_name(p) + ".json");
    }
    std::filesystem::path curves_csv(Protocol p) const {
        return dir / (std::string("curves_") + protocol_name(p) + ".csv");
    }
    std::filesystem::path matrix_svg() const { return dir / "matrix_TOTO.svg"; }
};

inline OutputPaths output_paths(const PipelineConfig& cfg) {
    return OutputPaths{cfg.output_dir};
}

inline std::vector<Protocol> protocols_from_flag(const std::string& flag) {
    if (flag == "toto") return {Protocol::TOTO};
    if (flag == "loto") return {Protocol::LOTO};
    if (flag == "both") return {Protocol::TOTO, Protocol::LOTO};
    throw std::invalid_argument("unknown protocol '" + flag +
                                "' (expected toto, loto, or both)");
}

// --------------------------------------------------------------- loading

// Stages downstream of dedup prefer the deduplicated catalog but fall back
// to the raw one, so running `split` straight after `catalog` is possible;
// the split generator's own precondition then rejects catalogs that still
// carry cross-team duplicates.
inline Catalog load_current_catalog(const PipelineConfig& cfg) {
    const auto paths = stage_paths(cfg);
    if (std::filesystem::exists(paths.dedup_catalog))
        return load_catalog_jsonl(paths.dedup_catalog);
    if (std::filesystem::exists(paths.raw_catalog))
        return load_catalog_jsonl(paths.raw_catalog);
    throw std::runtime_error("no catalog artifact in " + cfg.workdir.string() +
                             "; run the catalog stage first");
}

inline std::vector<SplitManifest> load_stage_manifests(
    const std::filesystem::path& splits_dir, Protocol protocol) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(splits_dir))
        throw std::runtime_error("splits directory missing: " +
                                 splits_dir.string() +
                                 "; run the split stage first");
    const std::string prefix = std::string(protocol_name(protocol)) + "_";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(splits_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error(std::string("no ") + protocol_name(protocol) +
                                 " manifests in " + splits_dir.string() +
                                 "; run the split stage first");
    std::vector<SplitManifest> manifests;
    manifests.reserve(files.size());
    for (const auto& f : files) manifests.push_back(load_manifest(f));
    return manifests;
}

inline void save_runs(const std::vector<RunResult>& runs, Protocol protocol,
                      const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["protocol"] = protocol_name(protocol);
    j["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : runs) j["runs"].push_back(run_result_to_json(r));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write runs: " + path.string());
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("runs write failed");
}

inline std::vector<RunResult> load_runs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open runs file " + path.string() +
                                 "; run the eval stage first");
    nlohmann::json j;
    in >> j;
    if (!j.contains("runs") || !j.at("runs").is_array())
        throw std::runtime_error("runs file has no \"runs\" array: " +
                                 path.string());
    std::vector<RunResult> runs;
    for (const auto& rj : j.at("runs")) runs.push_back(run_result_from_json(rj));
    return runs;
}

// ---------------------------------------------------------------- stages

// Renders the synthetic corpus into dataset_root and records the spec that
// was actually used (seed included) plus duplicate ground truth and the
// label map, so the catalog stage needs no extra configuration.
inline void run_synth(const PipelineConfig& cfg, int threads) {
    namespace fs = std::filesystem;
    SynthSpec spec = cfg.synth_spec_path ? load_synth_spec(*cfg.synth_spec_path)
                                         : default_spec();
    spec.seed = cfg.seed;
    validate_spec(spec);
    if (fs::exists(cfg.dataset_root) && !fs::is_empty(cfg.dataset_root))
        log::warn("dataset root " + cfg.dataset_root.string() +
                  " is not empty; existing files with matching names will be"
                  " overwritten");
    fs::create_directories(cfg.workdir);
    const GroundTruth truth = generate(spec, cfg.dataset_root, threads);
    const auto paths = stage_paths(cfg);
    save_synth_spec(spec, paths.synth_spec_used);
    save_ground_truth(truth, paths.synth_truth);
    save_label_map(identity_label_map(spec), paths.synth_labels);
    log::info("synth: wrote " + std::to_string(truth.files_written) +
              " images to " + cfg.dataset_root.string());
}

// Label sources, in order: explicit map from the config, the map the synth
// stage wrote, and finally an identity map built from the class folder
// names found on disk.
inline LabelMap resolve_label_map(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.label_map_path) return load_label_map(*cfg.label_map_path);
    const auto paths = stage_paths(cfg);
    if (fs::exists(paths.synth_labels)) return load_label_map(paths.synth_labels);
    LabelMap map;
    if (!fs::is_directory(cfg.dataset_root))
        throw std::runtime_error("dataset root does not exist: " +
                                 cfg.dataset_root.string());
    for (const auto& team : fs::directory_iterator(cfg.dataset_root)) {
        if (!team.is_directory()) continue;
        for (const auto& cls : fs::directory_iterator(team.path())) {
            if (!cls.is_directory()) continue;
            const std::string folded = fold_label(cls.path().filename().string());
            map[folded] = folded;
        }
    }
    if (map.empty())
        throw std::runtime_error("no class folders under " +
                                 cfg.dataset_root.string() +
                                 " and no label map configured");
    return map;
}

inline void run_catalog(const PipelineConfig& cfg, int threads) {
    std::filesystem::create_directories(cfg.workdir);
    const LabelMap labels = resolve_label_map(cfg);
    const Catalog catalog = scan_dataset(cfg.dataset_root, labels, threads);
    const auto paths = stage_paths(cfg);
    save_catalog_jsonl(catalog, paths.raw_catalog);
    log::info("catalog: " + std::to_string(catalog.records.size()) + " records");
}

inline void run_dedup(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    const auto paths = stage_paths(cfg);
    if (!fs::exists(paths.raw_catalog))
        throw std::runtime_error("missing " + paths.raw_catalog.string() +
                                 "; run the catalog stage first");
    const Catalog catalog = load_catalog_jsonl(paths.raw_catalog);
    const DedupResult result = apply_dedup(catalog);
    save_catalog_jsonl(result.retained, paths.dedup_catalog);
    save_removal_report_csv(result, catalog, paths.removal_report);
    log::info("dedup: removed " + std::to_string(result.removed_ids.size()) +
              " of " + std::to_string(catalog.records.size()) + " records in " +
              std::to_string(result.groups.size()) + " duplicate groups");
}

inline void run_normalize(const PipelineConfig& cfg, int threads) {
    const Catalog catalog = load_current_catalog(cfg);
    const auto paths = stage_paths(cfg);
    const NormalizeReport report =
        process_dataset(catalog, cfg.dataset_root, paths.normalized_dir,
                        cfg.normalize_target, cfg.normalize_quality, threads);
    save_normalize_report(report, paths.normalize_report);
    if (!report.failures.empty())
        throw std::runtime_error(
            "normalize: " + std::to_string(report.failures.size()) +
            " images failed, first: " + report.failures.front().first + " (" +
            report.failures.front().second + ")");
    log::info("normalize: " + std::to_string(report.images_processed) +
              " images");
}

inline void run_split(const PipelineConfig& cfg,
                      const std::vector<Protocol>& protocols) {
    const Catalog catalog = load_current_catalog(cfg);
    const auto paths = stage_paths(cfg);
    std::filesystem::create_directories(paths.splits_dir);
    for (const Protocol protocol : protocols) {
        const auto manifests =
            protocol == Protocol::TOTO
                ? toto_splits(catalog, cfg.train_frac, cfg.seed)
                : loto_splits(catalog, cfg.train_frac, cfg.seed);
        for (const auto& m : manifests) {
            const auto violations = validate_manifest(m, catalog);
            if (!violations.empty())
                throw std::runtime_error("generated manifest for " +
                                         m.focal_team +
                                         " failed validation: " +
                                         violations.front());
            save_manifest(m, paths.splits_dir);
        }
        log::info(std::string("split: ") + protocol_name(protocol) + " x" +
                  std::to_string(manifests.size()));
    }
}

inline void run_train(const PipelineConfig& cfg,
                      const std::vector<Protocol>& protocols, int threads) {
    namespace fs = std::filesystem;
    const Catalog catalog = load_current_catalog(cfg);
    const auto paths = stage_paths(cfg);
    const PathResolver resolve = fs::is_directory(paths.normalized_dir)
                                     ? normalized_layout(paths.normalized_dir)
                                     : original_layout(cfg.dataset_root);
    LabelLookup labels;
    for (const auto& r : catalog.records) labels[r.image_id] = r.class_label;
    fs::create_directories(paths.models_dir);
    fs::create_directories(paths.curves_dir);
    fs::create_directories(paths.predictions_dir);
    for (const Protocol protocol : protocols) {
        const auto manifests = load_stage_manifests(paths.splits_dir, protocol);
        // Folds of one protocol share image features; extract them once.
        std::set<std::string> id_set;
        for (const auto& m : manifests) {
            id_set.insert(m.train_ids.begin(), m.train_ids.end());
            id_set.insert(m.val_ids.begin(), m.val_ids.end());
            id_set.insert(m.test_ids.begin(), m.test_ids.end());
        }
        const std::vector<std::string> ids(id_set.begin(), id_set.end());
        const FeatureMap features =
            extract_features_for_ids(catalog, ids, resolve, threads);
        for (const auto& m : manifests) {
            const TrainOutput out =
                train_on_features(m, features, labels, cfg.train);
            const std::string stem =
                std::string(protocol_name(protocol)) + "_" + m.focal_team;
            save_model(out.model, cfg.train, paths.models_dir / (stem + ".json"));
            save_curve_csv(out.curve, paths.curves_dir / (stem + ".csv"));
            save_predictions_csv(
                out.val_preds,
                paths.predictions_dir /
                    predictions_filename(protocol, m.focal_team, "val"));
            save_predictions_csv(
                out.test_preds,
                paths.predictions_dir /
                    predictions_filename(protocol, m.focal_team, "test"));
            log::info("train: " + stem + " final val acc " +
                      format_fixed(out.curve.epochs.empty()
                                       ? 0.0
                                       : out.curve.epochs.back().val_acc * 100.0,
                                   2));
        }
    }
}

namespace detail {

inline void require_id_match(const PredictionSet& preds,
                             const std::vector<std::string>& expected,
                             const std::string& what) {
    std::set<std::string> got;
    for (const auto& item : preds.items) got.insert(item.image_id);
    const std::set<std::string> want(expected.begin(), expected.end());
    if (got == want) return;
    std::string detail = "sizes " + std::to_string(got.size()) + " vs " +
                         std::to_string(want.size());
    for (const auto& id : want)
        if (!got.count(id)) {
            detail = "missing " + id;
            break;
        }
    if (detail.rfind("sizes", 0) == 0)
        for (const auto& id : got)
            if (!want.count(id)) {
                detail = "unexpected " + id;
                break;
            }
    throw std::runtime_error(what + ": prediction ids do not match the manifest (" +
                             detail + ")");
}

}  // namespace detail

// Scores prediction CSVs against the split manifests. By default it reads
// the train stage's output; `predictions_dir` points it at CSVs produced by
// an external trainer instead.
inline void run_eval(
    const PipelineConfig& cfg, const std::vector<Protocol>& protocols,
    const std::optional<std::filesystem::path>& predictions_dir) {
    const Catalog catalog = load_current_catalog(cfg);
    const auto paths = stage_paths(cfg);
    const std::filesystem::path preds_root =
        predictions_dir.value_or(paths.predictions_dir);
    for (const Protocol protocol : protocols) {
        const auto manifests = load_stage_manifests(paths.splits_dir, protocol);
        std::vector<RunResult> runs;
        runs.reserve(manifests.size());
        for (const auto& m : manifests) {
            const auto val_path =
                preds_root / predictions_filename(protocol, m.focal_team, "val");
            const auto test_path =
                preds_root / predictions_filename(protocol, m.focal_team, "test");
            const PredictionSet val =
                load_predictions_csv(val_path, protocol, m.focal_team, "val");
            const PredictionSet test =
                load_predictions_csv(test_path, protocol, m.focal_team, "test");
            detail::require_id_match(val, m.val_ids, val_path.string());
            detail::require_id_match(test, m.test_ids, test_path.string());
            runs.push_back(run_result_from_predictions(m, catalog, val, test));
        }
        save_runs(runs, protocol, paths.runs(protocol));
        log::info(std::string("eval: ") + protocol_name(protocol) + " x" +
                  std::to_string(runs.size()));
    }
}

// Emits the results table (CSV and JSON), the cross-team accuracy matrix
// (TOTO only; LOTO runs carry no off-diagonal cells), and aggregate
// learning curves when every fold has a curve file (external predictions
// come without curves, so that part is skipped for them).
inline void run_report(const PipelineConfig& cfg,
                       const std::vector<Protocol>& protocols) {
    namespace fs = std::filesystem;
    const auto paths = stage_paths(cfg);
    const auto out = output_paths(cfg);
    fs::create_directories(out.dir);
    for (const Protocol protocol : protocols) {
        const std::vector<RunResult> runs = load_runs(paths.runs(protocol));
        emit_results_table(runs, out.results_csv(protocol), TableFormat::CSV);
        emit_results_table(runs, out.results_json(protocol), TableFormat::JSON);
        if (protocol == Protocol::TOTO) {
            const CrossTeamMatrix matrix = build_matrix(runs);
            emit_matrix_svg(matrix, out.matrix_svg());
        }
        std::vector<LearningCurve> folds;
        bool all_curves = true;
        for (const auto& r : runs) {
            const auto curve_path =
                paths.curves_dir /
                (std::string(protocol_name(protocol)) + "_" + r.focal_team + ".csv");
            if (!fs::exists(curve_path)) {
                all_curves = false;
                break;
            }
            folds.push_back(load_curve_csv(curve_path));
        }
        if (all_curves && !folds.empty())
            emit_curves(folds, out.curves_csv(protocol));
        else
            log::info(std::string("report: no curve files for ") +
                      protocol_name(protocol) + ", skipping curve aggregation");
    }
}

// Chains every stage. Synthesis runs when the config names a synth spec or
// when the dataset root does not exist yet; an existing dataset is used
// as-is.
inline void run_pipeline(const PipelineConfig& cfg,
                         const std::vector<Protocol>& protocols, int threads) {
    if (cfg.synth_spec_path || !std::filesystem::is_directory(cfg.dataset_root))
        run_synth(cfg, threads);
    run_catalog(cfg, threads);
    run_dedup(cfg);
    run_normalize(cfg, threads);
    run_split(cfg, protocols);
    run_train(cfg, protocols, threads);
    run_eval(cfg, protocols, std::nullopt);
    run_report(cfg, protocols);
}

}  // namespace ctv
