#include "phaseseg/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "phaseseg/adam.hpp"
#include "phaseseg/rng.hpp"

namespace phaseseg {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kShuffleStream = 0x73686866ULL;

std::vector<int> predict_video(const Model& model, const TensorPtr& features) {
    ForwardResult fwd = model.forward(features);
    return argmax_rows(*fwd.stage_logits.back());
}

void copy_params_quantized(const Model& src, Model& dst) {
    const auto& a = src.parameters();
    const auto& b = dst.parameters();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a[i]->data.size(); ++k)
            b[i]->data[k] = static_cast<double>(static_cast<float>(a[i]->data[k]));
}

}  // namespace

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ParameterError("learning_rate must be positive");
    if (epochs < 1) throw ParameterError("epochs must be at least 1");
    if (lambda < 0.0) throw ParameterError("lambda must be non-negative");
    if (patience < 0) throw ParameterError("patience must be non-negative");
}

std::vector<LoadedVideo> load_split(const Manifest& manifest, const std::string& split,
                                    int expected_dim) {
    std::vector<LoadedVideo> out;
    for (const auto& entry : manifest.split(split)) {
        FeatureSequence feats = load_features(manifest.resolve(entry.features));
        if (feats.dim != expected_dim)
            throw ConfigError("video " + entry.id + " has feature dim " + std::to_string(feats.dim) +
                              " but the model expects " + std::to_string(expected_dim));
        LoadedVideo v;
        v.id = entry.id;
        v.features = feats.to_tensor();
        v.labels = load_labels(manifest.resolve(entry.labels), manifest.num_classes);
        if (static_cast<int>(v.labels.size()) != feats.num_frames)
            throw DataError("video " + entry.id + " has " + std::to_string(feats.num_frames) +
                            " feature frames but " + std::to_string(v.labels.size()) + " labels");
        out.push_back(std::move(v));
    }
    return out;
}

TrainResult train(const TrainConfig& cfg, const Manifest& manifest, const ModelConfig& model_cfg) {
    cfg.validate();
    model_cfg.validate();
    if (manifest.num_classes != model_cfg.num_classes)
        throw ConfigError("manifest has " + std::to_string(manifest.num_classes) +
                          " classes but the model is configured for " +
                          std::to_string(model_cfg.num_classes));

    auto train_videos = load_split(manifest, "train", model_cfg.input_dim);
    if (train_videos.empty()) throw DataError("no train videos in manifest");
    auto val_videos = load_split(manifest, "val", model_cfg.input_dim);
    const bool self_validation = val_videos.empty();

    Model model(model_cfg);
    Rng init_rng(mix_seed(cfg.seed, kInitStream));
    model.init_params(init_rng);
    Adam adam(model.parameters(), AdamConfig{.learning_rate = cfg.learning_rate});

    Model eval_model(model_cfg);
    eval_model.freeze();
    const auto& eval_videos = self_validation ? train_videos : val_videos;

    LossConfig loss_cfg;
    loss_cfg.lambda = cfg.lambda;

    Rng shuffle_rng(mix_seed(cfg.seed, kShuffleStream));
    std::vector<std::size_t> order(train_videos.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_acc = -1.0, best_edit = -1.0;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const LoadedVideo& video = train_videos[idx];
            ForwardResult fwd = model.forward(video.features);
            TensorPtr loss = total_loss(fwd.stage_logits, video.labels, loss_cfg);
            const double value = loss->data[0];
            if (!std::isfinite(value))
                throw DataError("non-finite training loss at epoch " + std::to_string(epoch) +
                                " on video " + video.id);
            for (const auto& p : model.parameters()) p->zero_grad();
            loss->backward();
            adam.step();
            loss_sum += value;
        }

        copy_params_quantized(model, eval_model);
        double acc_sum = 0.0, edit_sum = 0.0;
        for (const auto& video : eval_videos) {
            const std::vector<int> pred = predict_video(eval_model, video.features);
            acc_sum += accuracy(pred, video.labels);
            edit_sum += edit_score(segments_from_frames(pred), segments_from_frames(video.labels));
        }
        const double n_eval = static_cast<double>(eval_videos.size());

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_videos.size());
        rec.val_accuracy = acc_sum / n_eval;
        rec.val_edit = edit_sum / n_eval;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.records.push_back(rec);

        if (rec.val_accuracy > best_acc ||
            (rec.val_accuracy == best_acc && rec.val_edit > best_edit)) {
            best_acc = rec.val_accuracy;
            best_edit = rec.val_edit;
            result.history.best_epoch = epoch;
            nlohmann::json meta = {
                {"epoch", epoch},
                {"epochs", cfg.epochs},
                {"learning_rate", cfg.learning_rate},
                {"lambda", cfg.lambda},
                {"seed", cfg.seed},
                {"val_accuracy", rec.val_accuracy},
                {"val_edit", rec.val_edit},
                {"validation_split", self_validation ? "train" : "val"},
                {"optimizer", "adam"},
            };
            result.best = snapshot_model(eval_model, std::move(meta));
        }

        if (cfg.patience > 0 && epoch - result.history.best_epoch >= cfg.patience) break;
    }
    return result;
}

EvalResult evaluate(const Model& model, const std::vector<LoadedVideo>& videos, int num_classes) {
    if (videos.empty()) throw DataError("no videos to evaluate");
    EvalResult result;
    for (const auto& video : videos) {
        std::vector<int> pred = predict_video(model, video.features);
        result.videos.push_back(evaluate_video(video.id, pred, video.labels, num_classes));
        result.predictions.push_back(std::move(pred));
    }
    result.aggregate = aggregate(result.videos);
    return result;
}

EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const Manifest& manifest,
                               const std::string& split) {
    if (manifest.num_classes != ckpt.model_config.num_classes)
        throw ConfigError("manifest has " + std::to_string(manifest.num_classes) +
                          " classes but the checkpoint was trained with " +
                          std::to_string(ckpt.model_config.num_classes));
    Model model = model_from_checkpoint(ckpt);
    model.freeze();
    auto videos = load_split(manifest, split, ckpt.model_config.input_dim);
    if (videos.empty()) throw DataError("split '" + split + "' has no videos");
    return evaluate(model, videos, manifest.num_classes);
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::ostringstream out;
    out << "epoch,train_loss,val_accuracy,val_edit\n";
    char buf[128];
    for (const auto& r : history.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                      r.val_accuracy, r.val_edit);
        out << buf;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << out.str();
}

TrainHistory load_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    TrainHistory history;
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,val_accuracy,val_edit")
        throw FormatError(path + ": unexpected history header");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        EpochRecord r;
        if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &r.epoch, &r.train_loss, &r.val_accuracy,
                        &r.val_edit) != 4)
            throw FormatError(path + ": line " + std::to_string(line_no) + ": bad record");
        history.records.push_back(r);
    }
    return history;
}

}  // namespace phaseseg
