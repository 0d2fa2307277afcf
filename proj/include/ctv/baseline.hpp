#pragma once

// Reference classifier: color-histogram plus gradient-orientation
// features fed to a linear softmax trained with mini-batch gradient
// descent under a cosine learning-rate schedule. Deliberately shallow;
// it exists to drive cross-team experiments deterministically, not to
// chase deep-network accuracy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctv/catalog.hpp"
#include "ctv/codec.hpp"
#include "ctv/image.hpp"
#include "ctv/metrics.hpp"
#include "ctv/parallel.hpp"
#include "ctv/resample.hpp"
#include "ctv/rng.hpp"
#include "ctv/splits.hpp"

namespace ctv {

constexpr int kColorBins = 16;
constexpr int kOrientBins = 8;
constexpr int kFeatureDim = kColorBins * 3 + kOrientBins;  // 56
constexpr int kFeatureInputSize = 224;
inline constexpr const char* kFeatureSpec = "color16x3-orient8-224/1";

struct FeatureVector {
    std::vector<double> values;
};

struct LinearSoftmaxModel {
    std::vector<std::string> classes;  // sorted; row order of W and b
    int feature_dim = 0;
    std::vector<double> W;  // classes.size() x feature_dim, row-major
    std::vector<double> b;  // classes.size()
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double lr0 = 1e-2;
    double lr_min = 1e-6;
    double weight_decay = 1e-4;
    double dropout = 0.3;
    std::uint64_t seed = 42;
};

inline void validate_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(cfg.lr0 > cfg.lr_min) || !(cfg.lr_min > 0.0))
        throw std::invalid_argument("require lr0 > lr_min > 0");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
        throw std::invalid_argument("dropout must lie in [0,1)");
}

struct EpochStats {
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct LearningCurve {
    std::vector<EpochStats> epochs;
};

// ------------------------------------------------------------- features

namespace detail {

// Map an integer gradient to one of eight 45-degree sectors with exact
// arithmetic; sector k covers [k*45, (k+1)*45) degrees measured from
// the +x axis. Boundary rays belong to the sector they open.
inline int gradient_octant(int gx, int gy) {
    if (gx > 0 && gy >= 0 && gy < gx) return 0;
    if (gy > 0 && gx > 0 && gx <= gy) return 1;
    if (gy > 0 && gx <= 0 && -gx < gy) return 2;
    if (gx < 0 && gy > 0 && gy <= -gx) return 3;
    if (gx < 0 && gy <= 0 && -gy < -gx) return 4;
    if (gy < 0 && gx < 0 && gx >= gy) return 5;
    if (gy < 0 && gx >= 0 && gx < -gy) return 6;
    if (gx > 0 && gy < 0 && -gy <= gx) return 7;
    throw std::invalid_argument("octant of zero gradient");
}

}  // namespace detail

inline FeatureVector extract_features(const Image& input) {
    const Image img = (input.width == kFeatureInputSize &&
                       input.height == kFeatureInputSize)
                          ? input
                          : resample_bicubic(input, kFeatureInputSize,
                                             kFeatureInputSize);
    FeatureVector fv;
    fv.values.assign(kFeatureDim, 0.0);

    const int n_px = img.width * img.height;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int ch = (img.channels == 3) ? c : 0;
                const int bin = img.at(x, y, ch) >> 4;
                fv.values[c * kColorBins + bin] += 1.0;
            }
        }
    }
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kColorBins; ++k)
            fv.values[c * kColorBins + k] /= static_cast<double>(n_px);

    // Orientation histogram of central-difference luma gradients at
    // interior pixels; integer arithmetic keeps sector assignment exact.
    const std::vector<std::uint8_t> luma = luma_plane(img);
    std::array<std::int64_t, kOrientBins> counts{};
    std::int64_t total = 0;
    for (int y = 1; y + 1 < img.height; ++y) {
        for (int x = 1; x + 1 < img.width; ++x) {
            const int gx = static_cast<int>(luma[y * img.width + x + 1]) -
                           static_cast<int>(luma[y * img.width + x - 1]);
            const int gy = static_cast<int>(luma[(y + 1) * img.width + x]) -
                           static_cast<int>(luma[(y - 1) * img.width + x]);
            if (gx == 0 && gy == 0) continue;
            ++counts[static_cast<std::size_t>(detail::gradient_octant(gx, gy))];
            ++total;
        }
    }
    const int base = kColorBins * 3;
    if (total == 0) {
        // No luma variation anywhere: fall back to a uniform block so the
        // L1 convention still holds.
        for (int k = 0; k < kOrientBins; ++k)
            fv.values[base + k] = 1.0 / kOrientBins;
    } else {
        for (int k = 0; k < kOrientBins; ++k)
            fv.values[base + k] =
                static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                static_cast<double>(total);
    }
    return fv;
}

// Resolves an image record to the file holding its pixels. The original
// layout follows rel_path; the normalized layout uses the id-named JPEG
// tree produced by the normalization stage.
using PathResolver = std::function<std::filesystem::path(const ImageRecord&)>;

inline PathResolver original_layout(std::filesystem::path root) {
    return [root = std::move(root)](const ImageRecord& rec) {
        return root / rec.rel_path;
    };
}

inline PathResolver normalized_layout(std::filesystem::path root) {
    return [root = std::move(root)](const ImageRecord& rec) {
        return root / rec.team / rec.class_label / (rec.image_id + ".jpg");
    };
}

using FeatureMap = std::map<std::string, FeatureVector>;

inline FeatureMap extract_features_for_ids(const Catalog& catalog,
                                           const std::vector<std::string>& ids,
                                           const PathResolver& resolve,
                                           int threads = 1) {
    std::vector<std::string> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    sorted_ids.erase(std::unique(sorted_ids.begin(), sorted_ids.end()),
                     sorted_ids.end());

    std::vector<FeatureVector> slots(sorted_ids.size());
    parallel_for(sorted_ids.size(), threads, [&](std::size_t i) {
        const ImageRecord* rec = catalog.find(sorted_ids[i]);
        if (rec == nullptr)
            throw std::runtime_error("unknown image id: " + sorted_ids[i]);
        if (!rec->readable)
            throw std::runtime_error("cannot featurize unreadable image: " +
                                     sorted_ids[i]);
        const auto path = resolve(*rec);
        const auto bytes = read_file(path);
        if (!bytes || bytes->empty())
            throw std::runtime_error("missing image file: " + path.string());
        auto decoded = decode_image(*bytes, sniff_format(*bytes));
        if (!decoded.ok)
            throw std::runtime_error("failed to decode: " + path.string());
        slots[i] = extract_features(decoded.image);
    });

    FeatureMap out;
    for (std::size_t i = 0; i < sorted_ids.size(); ++i)
        out[sorted_ids[i]] = std::move(slots[i]);
    return out;
}

// ------------------------------------------------------------ optimizer

inline double cosine_lr(int epoch, int total_epochs, double lr0, double lr_min) {
    if (epoch < 0 || epoch > total_epochs)
        throw std::invalid_argument("epoch outside schedule");
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(t * 3.14159265358979323846));
}

struct Batch {
    std::vector<const FeatureVector*> features;
    std::vector<int> labels;  // indices into model.classes
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> gW;
    std::vector<double> gb;
};

inline std::vector<double> class_scores(const LinearSoftmaxModel& model,
                                        const FeatureVector& f) {
    const auto C = model.classes.size();
    const auto D = static_cast<std::size_t>(model.feature_dim);
    if (f.values.size() != D)
        throw std::invalid_argument("feature length does not match model");
    std::vector<double> scores(C);
    for (std::size_t c = 0; c < C; ++c) {
        double s = model.b[c];
        const double* row = model.W.data() + c * D;
        for (std::size_t d = 0; d < D; ++d) s += row[d] * f.values[d];
        scores[c] = s;
    }
    return scores;
}

inline std::vector<double> softmax(std::vector<double> scores) {
    const double peak = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (auto& s : scores) {
        s = std::exp(s - peak);
        sum += s;
    }
    for (auto& s : scores) s /= sum;
    return scores;
}

inline LossGrad loss_and_grad(const LinearSoftmaxModel& model, const Batch& batch) {
    if (batch.features.empty())
        throw std::invalid_argument("empty batch");
    if (batch.features.size() != batch.labels.size())
        throw std::invalid_argument("batch features/labels length mismatch");
    const auto C = model.classes.size();
    const auto D = static_cast<std::size_t>(model.feature_dim);
    for (double v : model.W)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
    for (double v : model.b)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias");

    LossGrad out;
    out.gW.assign(C * D, 0.0);
    out.gb.assign(C, 0.0);

    const double inv_n = 1.0 / static_cast<double>(batch.features.size());
    for (std::size_t i = 0; i < batch.features.size(); ++i) {
        const FeatureVector& f = *batch.features[i];
        for (double v : f.values)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature");
        const int label = batch.labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= C)
            throw std::invalid_argument("label index out of range");

        const auto probs = softmax(class_scores(model, f));
        out.loss -= std::log(std::max(probs[static_cast<std::size_t>(label)],
                                      1e-300)) * inv_n;
        for (std::size_t c = 0; c < C; ++c) {
            const double delta =
                (probs[c] - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) *
                inv_n;
            out.gb[c] += delta;
            double* row = out.gW.data() + c * D;
            for (std::size_t d = 0; d < D; ++d) row[d] += delta * f.values[d];
        }
    }
    return out;
}

// Gradient step with decoupled weight decay: the shrink multiplies the
// parameters directly instead of entering the loss gradient. Biases are
// not decayed.
inline void apply_update(LinearSoftmaxModel& model, const LossGrad& grad,
                         double lr, double weight_decay) {
    for (std::size_t i = 0; i < model.W.size(); ++i)
        model.W[i] -= lr * (grad.gW[i] + weight_decay * model.W[i]);
    for (std::size_t i = 0; i < model.b.size(); ++i)
        model.b[i] -= lr * grad.gb[i];
}

inline int argmax_class(const std::vector<double>& scores) {
    int best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[static_cast<std::size_t>(best)])
            best = static_cast<int>(c);
    return best;
}

// ------------------------------------------------------------- training

using LabelLookup = std::map<std::string, std::string>;

struct TrainOutput {
    LinearSoftmaxModel model;
    LearningCurve curve;
    PredictionSet val_preds;
    PredictionSet test_preds;
};

inline PredictionSet predict(const LinearSoftmaxModel& model,
                             const std::vector<std::string>& ids,
                             const FeatureMap& features,
                             const LabelLookup& labels) {
    PredictionSet out;
    for (const auto& id : ids) {
        const auto fit = features.find(id);
        if (fit == features.end())
            throw std::runtime_error("no features for id: " + id);
        const auto lit = labels.find(id);
        if (lit == labels.end())
            throw std::runtime_error("no label for id: " + id);
        const int cls = argmax_class(class_scores(model, fit->second));
        out.items.push_back(
            {id, lit->second, model.classes[static_cast<std::size_t>(cls)]});
    }
    return out;
}

namespace detail {

inline double quick_accuracy(const LinearSoftmaxModel& model,
                             const std::vector<std::string>& ids,
                             const FeatureMap& features,
                             const LabelLookup& labels) {
    std::size_t hits = 0;
    for (const auto& id : ids) {
        const int cls = argmax_class(class_scores(model, features.at(id)));
        if (model.classes[static_cast<std::size_t>(cls)] == labels.at(id)) ++hits;
    }
    return ids.empty() ? 0.0
                       : static_cast<double>(hits) / static_cast<double>(ids.size());
}

}  // namespace detail

inline TrainOutput train_on_features(const SplitManifest& manifest,
                                     const FeatureMap& features,
                                     const LabelLookup& labels,
                                     const TrainConfig& cfg) {
    validate_config(cfg);
    if (manifest.train_ids.empty())
        throw std::invalid_argument("empty train partition");

    std::set<std::string> class_set;
    std::size_t dim = 0;
    auto require = [&](const std::vector<std::string>& ids) {
        for (const auto& id : ids) {
            const auto fit = features.find(id);
            if (fit == features.end())
                throw std::runtime_error("no features for id: " + id);
            if (dim == 0) dim = fit->second.values.size();
            if (fit->second.values.size() != dim)
                throw std::runtime_error("inconsistent feature lengths");
            const auto lit = labels.find(id);
            if (lit == labels.end())
                throw std::runtime_error("no label for id: " + id);
            class_set.insert(lit->second);
        }
    };
    require(manifest.train_ids);
    require(manifest.val_ids);
    require(manifest.test_ids);

    TrainOutput out;
    LinearSoftmaxModel& model = out.model;
    model.classes.assign(class_set.begin(), class_set.end());
    model.feature_dim = static_cast<int>(dim);
    model.W.assign(model.classes.size() * dim, 0.0);
    model.b.assign(model.classes.size(), 0.0);

    std::map<std::string, int> class_index;
    for (std::size_t c = 0; c < model.classes.size(); ++c)
        class_index[model.classes[c]] = static_cast<int>(c);

    std::vector<std::string> train_ids = manifest.train_ids;
    std::sort(train_ids.begin(), train_ids.end());
    std::vector<int> train_labels;
    train_labels.reserve(train_ids.size());
    for (const auto& id : train_ids)
        train_labels.push_back(class_index.at(labels.at(id)));

    Xoshiro256 rng = derive_stream(
        cfg.seed, {"baseline-train", protocol_name(manifest.protocol),
                   manifest.focal_team});

    std::vector<std::size_t> order(train_ids.size());
    std::iota(order.begin(), order.end(), 0);
    const double keep = 1.0 - cfg.dropout;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        fisher_yates(order, rng);
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr0, cfg.lr_min);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));

            std::vector<FeatureVector> masked(stop - start);
            Batch batch;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                FeatureVector& mf = masked[k - start];
                mf = features.at(train_ids[idx]);
                if (cfg.dropout > 0.0) {
                    for (auto& v : mf.values) {
                        if (rng.next_double() < cfg.dropout)
                            v = 0.0;
                        else
                            v /= keep;
                    }
                }
                batch.features.push_back(&mf);
                batch.labels.push_back(train_labels[idx]);
            }
            const LossGrad grad = loss_and_grad(model, batch);
            apply_update(model, grad, lr, cfg.weight_decay);
        }

        EpochStats stats;
        stats.train_acc = detail::quick_accuracy(model, train_ids, features, labels);
        stats.val_acc =
            detail::quick_accuracy(model, manifest.val_ids, features, labels);
        stats.test_acc =
            detail::quick_accuracy(model, manifest.test_ids, features, labels);
        out.curve.epochs.push_back(stats);
    }

    out.val_preds = predict(model, manifest.val_ids, features, labels);
    out.val_preds.protocol = manifest.protocol;
    out.val_preds.focal_team = manifest.focal_team;
    out.val_preds.partition = "val";
    out.test_preds = predict(model, manifest.test_ids, features, labels);
    out.test_preds.protocol = manifest.protocol;
    out.test_preds.focal_team = manifest.focal_team;
    out.test_preds.partition = "test";
    return out;
}

inline TrainOutput train(const SplitManifest& manifest, const Catalog& catalog,
                         const PathResolver& resolve, const TrainConfig& cfg,
                         int threads = 1) {
    std::vector<std::string> all_ids;
    all_ids.insert(all_ids.end(), manifest.train_ids.begin(), manifest.train_ids.end());
    all_ids.insert(all_ids.end(), manifest.val_ids.begin(), manifest.val_ids.end());
    all_ids.insert(all_ids.end(), manifest.test_ids.begin(), manifest.test_ids.end());
    const FeatureMap features =
        extract_features_for_ids(catalog, all_ids, resolve, threads);

    LabelLookup labels;
    for (const auto& id : all_ids) {
        const ImageRecord* rec = catalog.find(id);
        if (rec == nullptr)
            throw std::runtime_error("unknown image id: " + id);
        labels[id] = rec->class_label;
    }
    return train_on_features(manifest, features, labels, cfg);
}

// -------------------------------------------------------- serialization

inline nlohmann::ordered_json model_to_json(const LinearSoftmaxModel& model,
                                            const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema"] = "linear-softmax/1";
    j["feature_spec"] = kFeatureSpec;
    j["classes"] = model.classes;
    j["feature_dim"] = model.feature_dim;
    j["config"] = {{"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"lr0", cfg.lr0},
                   {"lr_min", cfg.lr_min},
                   {"weight_decay", cfg.weight_decay},
                   {"dropout", cfg.dropout},
                   {"seed", cfg.seed}};
    j["W"] = model.W;
    j["b"] = model.b;
    return j;
}

inline std::pair<LinearSoftmaxModel, TrainConfig> model_from_json(
    const nlohmann::json& j) {
    if (j.at("schema").get<std::string>() != "linear-softmax/1")
        throw std::runtime_error("unsupported model schema");
    LinearSoftmaxModel model;
    model.classes = j.at("classes").get<std::vector<std::string>>();
    model.feature_dim = j.at("feature_dim").get<int>();
    model.W = j.at("W").get<std::vector<double>>();
    model.b = j.at("b").get<std::vector<double>>();
    if (model.W.size() !=
        model.classes.size() * static_cast<std::size_t>(model.feature_dim))
        throw std::runtime_error("model weight shape mismatch");
    if (model.b.size() != model.classes.size())
        throw std::runtime_error("model bias shape mismatch");

    TrainConfig cfg;
    const auto& c = j.at("config");
    cfg.epochs = c.at("epochs").get<int>();
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.lr0 = c.at("lr0").get<double>();
    cfg.lr_min = c.at("lr_min").get<double>();
    cfg.weight_decay = c.at("weight_decay").get<double>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    return {std::move(model), cfg};
}

inline void save_model(const LinearSoftmaxModel& model, const TrainConfig& cfg,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write model: " + path.string());
    out << model_to_json(model, cfg).dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("model write failed");
}

inline std::pair<LinearSoftmaxModel, TrainConfig> load_model(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model: " + path.string());
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

inline void save_curve_csv(const LearningCurve& curve,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write curve: " + path.string());
    out << "epoch,train_acc,val_acc,test_acc\n";
    for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
        const auto& e = curve.epochs[i];
        out << (i + 1) << "," << format_fixed(e.train_acc, 6) << ","
            << format_fixed(e.val_acc, 6) << "," << format_fixed(e.test_acc, 6)
            << "\n";
    }
    if (!out.good()) throw std::runtime_error("curve write failed");
}

inline LearningCurve load_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open curve: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_acc,val_acc,test_acc")
        throw std::runtime_error("bad curve header in " + path.string());
    LearningCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cells.size() != 4)
            throw std::runtime_error("bad curve row: " + line);
        curve.epochs.push_back(
            {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
    }
    return curve;
}

}  // namespace ctv
