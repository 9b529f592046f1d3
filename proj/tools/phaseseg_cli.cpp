// Command line front end: generate synthetic datasets, train, evaluate,
// stream-infer, and render reports. Exit codes: 0 success, 1 runtime error
// (bad data/file contents), 2 usage or configuration error.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseseg/checkpoint.hpp"
#include "phaseseg/errors.hpp"
#include "phaseseg/io.hpp"
#include "phaseseg/model.hpp"
#include "phaseseg/report.hpp"
#include "phaseseg/synthdata.hpp"
#include "phaseseg/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phaseseg;

namespace {

// Seed resolution: explicit flag/config wins, then PHASESEG_SEED, then the
// built-in default.
std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("PHASESEG_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (errno != 0 || end == raw || *end != '\0')
        throw ConfigError(std::string("PHASESEG_SEED must be an unsigned integer, got \"") + raw + "\"");
    return static_cast<std::uint64_t>(v);
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    return j;
}

// Applies one dotted override like "train.epochs=5"; the value is parsed as
// JSON when possible and kept as a string otherwise.
void apply_override(json& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override \"" + spec + "\" must look like section.key=value");
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ConfigError("override \"" + spec + "\" has an empty key segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (!node->is_object() && !node->is_null())
            throw ConfigError("override \"" + spec + "\" descends into a non-object value");
        start = dot + 1;
    }
}

double as_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key " + key + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config key " + key + " must be an integer");
    return v.get<int>();
}

void apply_train_section(const json& sec, TrainConfig& cfg) {
    for (const auto& [key, value] : sec.items()) {
        if (key == "learning_rate") cfg.learning_rate = as_number(value, "train.learning_rate");
        else if (key == "epochs") cfg.epochs = as_int(value, "train.epochs");
        else if (key == "lambda") cfg.lambda = as_number(value, "train.lambda");
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_number(value, "train.seed"));
        else if (key == "patience") cfg.patience = as_int(value, "train.patience");
        else throw ConfigError("unknown config key train." + key);
    }
}

void apply_model_section(const json& sec, ModelConfig& cfg) {
    for (const auto& [key, value] : sec.items()) {
        if (key == "input_dim") cfg.input_dim = as_int(value, "model.input_dim");
        else if (key == "hidden_dim") cfg.hidden_dim = as_int(value, "model.hidden_dim");
        else if (key == "num_classes") cfg.num_classes = as_int(value, "model.num_classes");
        else if (key == "num_blocks") cfg.num_blocks = as_int(value, "model.num_blocks");
        else if (key == "num_decoders") cfg.num_decoders = as_int(value, "model.num_decoders");
        else if (key == "kernel_size") cfg.kernel_size = as_int(value, "model.kernel_size");
        else throw ConfigError("unknown config key model." + key);
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::vector<ReportEntry> make_entries(const std::vector<VideoMetrics>& metrics,
                                      const std::vector<std::vector<int>>& preds,
                                      const std::vector<std::vector<int>>& gts) {
    std::vector<ReportEntry> entries(metrics.size());
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        entries[i].metrics = metrics[i];
        entries[i].pred_segments = static_cast<int>(segments_from_frames(preds[i]).size());
        entries[i].gt_segments = static_cast<int>(segments_from_frames(gts[i]).size());
    }
    return entries;
}

// ---- gen ----------------------------------------------------------------

struct GenArgs {
    DatasetSpec spec;
    std::string out;
    bool seed_given = false;
};

int run_gen(GenArgs& a) {
    if (!a.seed_given) {
        if (auto s = env_seed()) a.spec.seed = *s;
    }
    ensure_dir(a.out);
    const Manifest man = make_dataset(a.spec, a.out);
    std::printf("preset %s, %d videos, seed %llu -> %s\n", man.preset.c_str(),
                static_cast<int>(man.videos.size()),
                static_cast<unsigned long long>(man.seed), a.out.c_str());
    for (const char* split : {"train", "val", "test"})
        std::printf("%s: %d\n", split, static_cast<int>(man.split(split).size()));
    return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<double> lr, lambda;
    std::optional<int> epochs, patience;
    std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
    const Manifest man = load_manifest(a.manifest);

    json cfg = json::object();
    if (!a.config_file.empty()) cfg = load_config_file(a.config_file);
    for (const auto& ov : a.overrides) apply_override(cfg, ov);

    TrainConfig tc;
    if (auto s = env_seed()) tc.seed = *s;
    ModelConfig mc;
    mc.input_dim = man.feature_dim;
    mc.num_classes = man.num_classes;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "train") apply_train_section(value, tc);
        else if (key == "model") apply_model_section(value, mc);
        else throw ConfigError("unknown config section " + key);
    }
    if (a.lr) tc.learning_rate = *a.lr;
    if (a.lambda) tc.lambda = *a.lambda;
    if (a.epochs) tc.epochs = *a.epochs;
    if (a.patience) tc.patience = *a.patience;
    if (a.seed) tc.seed = *a.seed;
    tc.validate();
    mc.validate();

    ensure_dir(a.out);
    const TrainResult res = train(tc, man, mc);
    const auto ckpt_path = (fs::path(a.out) / "checkpoint.pseg").string();
    save_checkpoint(res.best, ckpt_path);
    save_history_csv(res.history, (fs::path(a.out) / "history.csv").string());

    const auto& best = res.history.records[static_cast<std::size_t>(res.history.best_epoch - 1)];
    std::printf("trained %d epochs, best epoch %d: val accuracy %.4f, val edit %.4f\n",
                static_cast<int>(res.history.records.size()), res.history.best_epoch,
                best.val_accuracy, best.val_edit);
    std::printf("checkpoint: %s\n", ckpt_path.c_str());
    return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    std::string out;
};

int run_eval(const EvalArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Manifest man = load_manifest(a.manifest);
    const EvalResult ev = evaluate_checkpoint(ckpt, man, a.split);

    const auto videos = load_split(man, a.split, ckpt.model_config.input_dim);
    std::vector<std::vector<int>> gts;
    gts.reserve(videos.size());
    for (const auto& v : videos) gts.push_back(v.labels);
    const auto entries = make_entries(ev.videos, ev.predictions, gts);

    ensure_dir(a.out);
    write_report_json(entries, ev.aggregate, (fs::path(a.out) / "report.json").string());
    write_report_csv(entries, ev.aggregate, (fs::path(a.out) / "report.csv").string());
    const auto pred_dir = fs::path(a.out) / "predictions";
    ensure_dir(pred_dir.string());
    for (std::size_t i = 0; i < videos.size(); ++i)
        save_labels(ev.predictions[i], (pred_dir / (videos[i].id + ".labels.txt")).string());

    std::printf("%s split, %d videos\n", a.split.c_str(), ev.aggregate.num_videos);
    std::printf("accuracy %.4f +- %.4f\n", ev.aggregate.mean.accuracy, ev.aggregate.stddev.accuracy);
    std::printf("edit %.4f, F1@25/50/75 %.4f/%.4f/%.4f\n", ev.aggregate.mean.edit,
                ev.aggregate.mean.f1_25, ev.aggregate.mean.f1_50, ev.aggregate.mean.f1_75);
    return 0;
}

// ---- infer ---------------------------------------------------------------

struct InferArgs {
    std::string checkpoint;
    std::string input = "-";
    std::string output = "-";
};

std::vector<double> parse_frame(const std::string& line, int expected_dim, int frame_index) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(expected_dim));
    std::size_t pos = 0;
    while (pos <= line.size()) {
        auto comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string field = line.substr(pos, comma - pos);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(field.c_str(), &end);
        if (errno != 0 || end == field.c_str() || *end != '\0')
            throw FormatError("frame " + std::to_string(frame_index) + ": cannot parse value \"" +
                              field + "\"");
        row.push_back(v);
        pos = comma + 1;
        if (comma == line.size()) break;
    }
    if (static_cast<int>(row.size()) != expected_dim)
        throw DataError("frame " + std::to_string(frame_index) + " has " +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(expected_dim));
    return row;
}

int run_infer(const InferArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Model model = model_from_checkpoint(ckpt);
    StreamingSession session(model);
    const int dim = model.config().input_dim;

    std::ofstream out_file;
    std::ostream* out = &std::cout;
    if (a.output != "-") {
        out_file.open(a.output, std::ios::trunc);
        if (!out_file) throw IoError("cannot open output file " + a.output);
        out = &out_file;
    }

    auto emit = [&](const std::vector<double>& frame) {
        const auto logits = session.push_frame(frame);
        const auto& last = logits.back();
        (*out) << argmax_row(last.data(), static_cast<int>(last.size())) << '\n';
        out->flush();  // labels written so far stay a valid prefix
    };

    if (a.input != "-" && fs::path(a.input).extension() == ".phsf") {
        const FeatureSequence seq = load_features(a.input);
        if (seq.dim != dim)
            throw ConfigError("feature dim " + std::to_string(seq.dim) +
                              " does not match checkpoint input dim " + std::to_string(dim));
        std::vector<double> frame(static_cast<std::size_t>(dim));
        for (int t = 0; t < seq.num_frames; ++t) {
            for (int j = 0; j < dim; ++j)
                frame[static_cast<std::size_t>(j)] =
                    seq.values[static_cast<std::size_t>(t) * dim + static_cast<std::size_t>(j)];
            emit(frame);
        }
        return 0;
    }

    std::ifstream in_file;
    std::istream* in = &std::cin;
    if (a.input != "-") {
        in_file.open(a.input);
        if (!in_file) throw IoError("cannot open input file " + a.input);
        in = &in_file;
    }
    std::string line;
    int frame_index = 0;
    while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        emit(parse_frame(line, dim, frame_index));
        ++frame_index;
    }
    return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
    std::string pred_dir;
    std::string gt_dir;
    std::string out;
    int num_classes = 0;  // 0 = infer from the label files
};

int run_report(const ReportArgs& a) {
    if (!fs::is_directory(a.pred_dir)) throw IoError("prediction directory not found: " + a.pred_dir);
    if (!fs::is_directory(a.gt_dir)) throw IoError("ground-truth directory not found: " + a.gt_dir);

    const std::string suffix = ".labels.txt";
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(a.pred_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.ends_with(suffix))
            ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("no *" + suffix + " files in " + a.pred_dir);

    struct Pair {
        std::string id;
        std::vector<int> pred, gt;
    };
    std::vector<Pair> pairs;
    int skipped = 0;
    for (const auto& id : ids) {
        const auto gt_path = fs::path(a.gt_dir) / (id + suffix);
        if (!fs::exists(gt_path)) {
            std::fprintf(stderr, "skipping %s: no ground-truth file\n", id.c_str());
            ++skipped;
            continue;
        }
        Pair p;
        p.id = id;
        p.pred = load_labels((fs::path(a.pred_dir) / (id + suffix)).string());
        p.gt = load_labels(gt_path.string());
        if (p.pred.size() != p.gt.size()) {
            std::fprintf(stderr, "skipping %s: %zu predicted frames vs %zu ground-truth frames\n",
                         id.c_str(), p.pred.size(), p.gt.size());
            ++skipped;
            continue;
        }
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw DataError("no aligned prediction/ground-truth pairs");

    int num_classes = a.num_classes;
    if (num_classes == 0) {
        for (const auto& p : pairs) {
            for (int v : p.pred) num_classes = std::max(num_classes, v + 1);
            for (int v : p.gt) num_classes = std::max(num_classes, v + 1);
        }
    }

    ensure_dir(a.out);
    std::vector<VideoMetrics> metrics;
    std::vector<std::vector<int>> preds, gts;
    for (const auto& p : pairs) {
        metrics.push_back(evaluate_video(p.id, p.pred, p.gt, num_classes));
        preds.push_back(p.pred);
        gts.push_back(p.gt);
        write_ribbon_svg(p.gt, p.pred, p.id, (fs::path(a.out) / (p.id + ".svg")).string());
    }
    const AggregateMetrics agg = aggregate(metrics);
    const auto entries = make_entries(metrics, preds, gts);
    write_report_json(entries, agg, (fs::path(a.out) / "report.json").string());
    write_report_csv(entries, agg, (fs::path(a.out) / "report.csv").string());

    for (const auto& e : entries)
        std::printf("%s: accuracy %.4f, edit %.4f, segments %d predicted / %d actual\n",
                    e.metrics.video_id.c_str(), e.metrics.accuracy, e.metrics.edit,
                    e.pred_segments, e.gt_segments);
    std::printf("mean accuracy %.4f, mean edit %.4f over %d videos\n", agg.mean.accuracy,
                agg.mean.edit, agg.num_videos);
    if (skipped > 0) {
        std::fprintf(stderr, "%d video(s) skipped\n", skipped);
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal hierarchical-attention surgical phase segmentation"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic workflow dataset");
    cmd_gen->add_option("--preset", gen.spec.preset, "workflow preset: ramie, autolaparo or sequential")
        ->capture_default_str();
    cmd_gen->add_option("--videos", gen.spec.num_videos, "number of videos")->capture_default_str();
    cmd_gen->add_option("--classes", gen.spec.num_classes, "class count (sequential preset only)");
    cmd_gen->add_option("--feature-dim", gen.spec.feature_dim, "feature width")->capture_default_str();
    cmd_gen->add_option("--min-length", gen.spec.min_length, "minimum frames per video")
        ->capture_default_str();
    cmd_gen->add_option("--max-length", gen.spec.max_length, "maximum frames per video")
        ->capture_default_str();
    cmd_gen->add_option("--noise", gen.spec.noise_scale, "feature noise scale")->capture_default_str();
    cmd_gen->add_option("--ambiguity", gen.spec.ambiguity_width,
                        "boundary ambiguity half-width in frames (-1 = preset default)");
    cmd_gen->add_option("--split-train", gen.spec.split_train, "train share")->capture_default_str();
    cmd_gen->add_option("--split-val", gen.spec.split_val, "val share")->capture_default_str();
    cmd_gen->add_option("--split-test", gen.spec.split_test, "test share")->capture_default_str();
    auto* gen_seed = cmd_gen->add_option("--seed", gen.spec.seed, "generator seed");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();

    TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "train a model on a generated dataset");
    cmd_train->add_option("--manifest", tr.manifest, "path to manifest.json")->required();
    cmd_train->add_option("--out", tr.out, "output directory for checkpoint and history")->required();
    cmd_train->add_option("--config", tr.config_file, "JSON config file with train/model sections");
    cmd_train->add_option("--set", tr.overrides, "dotted override, e.g. train.epochs=5")
        ->take_all();
    cmd_train->add_option("--lr", tr.lr, "learning rate");
    cmd_train->add_option("--epochs", tr.epochs, "training epochs");
    cmd_train->add_option("--lambda", tr.lambda, "smoothing loss weight");
    cmd_train->add_option("--patience", tr.patience, "early-stop patience (0 = off)");
    cmd_train->add_option("--seed", tr.seed, "training seed");

    EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("eval", "score a checkpoint on one split");
    cmd_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
    cmd_eval->add_option("--manifest", ev.manifest, "path to manifest.json")->required();
    cmd_eval->add_option("--split", ev.split, "split to score")->capture_default_str();
    cmd_eval->add_option("--out", ev.out, "output directory for report and predictions")->required();

    InferArgs inf;
    auto* cmd_infer = app.add_subcommand("infer", "stream labels frame by frame");
    cmd_infer->add_option("--checkpoint", inf.checkpoint, "checkpoint file")->required();
    cmd_infer->add_option("--input", inf.input,
                          "feature source: .phsf file, CSV file, or - for stdin CSV")
        ->capture_default_str();
    cmd_infer->add_option("--out", inf.output, "label sink: file or - for stdout")
        ->capture_default_str();

    ReportArgs rep;
    auto* cmd_report = app.add_subcommand("report", "score prediction files against ground truth");
    cmd_report->add_option("--pred", rep.pred_dir, "directory of predicted *.labels.txt")->required();
    cmd_report->add_option("--gt", rep.gt_dir, "directory of ground-truth *.labels.txt")->required();
    cmd_report->add_option("--out", rep.out, "output directory for report and ribbons")->required();
    cmd_report->add_option("--classes", rep.num_classes, "class count (0 = infer from labels)");

    try {
        app.parse(argc, argv);
        gen.seed_given = gen_seed->count() > 0;
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_train->parsed()) return run_train(tr);
        if (cmd_eval->parsed()) return run_eval(ev);
        if (cmd_infer->parsed()) return run_infer(inf);
        if (cmd_report->parsed()) return run_report(rep);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "parameter error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
