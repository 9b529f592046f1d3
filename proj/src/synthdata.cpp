#include "phaseseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "phaseseg/metrics.hpp"
#include "phaseseg/rng.hpp"

namespace phaseseg {

namespace {

constexpr std::uint64_t kAnchorStream = 0x616e63686f72ULL;
constexpr std::uint64_t kFeatureStream = 0x66656174ULL;
constexpr std::uint64_t kLengthStream = 0x6c656eULL;

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

void WorkflowModel::validate() const {
    if (num_classes < 2) throw ParameterError("workflow needs at least 2 classes");
    const std::size_t c = static_cast<std::size_t>(num_classes);
    if (transition.size() != c * c) throw ParameterError("transition matrix must be C x C");
    if (durations.size() != c) throw ParameterError("one duration law per class required");
    if (initial.size() != c) throw ParameterError("initial distribution must have C entries");
    for (int i = 0; i < num_classes; ++i) {
        double row = 0.0;
        for (int j = 0; j < num_classes; ++j) row += p(i, j);
        if (std::fabs(row - 1.0) > 1e-9)
            throw ParameterError("transition row " + std::to_string(i) + " sums to " + std::to_string(row));
        if (p(i, i) != 0.0)
            throw ParameterError("transition diagonal must be zero (row " + std::to_string(i) + ")");
    }
    for (std::size_t i = 0; i < c; ++i) {
        if (durations[i].min_frames < 1)
            throw ParameterError("duration minimum must be at least 1 frame (class " + std::to_string(i) + ")");
        if (durations[i].mean < 0.0)
            throw ParameterError("duration mean must be non-negative (class " + std::to_string(i) + ")");
        if (durations[i].dispersion <= 0.0)
            throw ParameterError("duration dispersion must be positive (class " + std::to_string(i) + ")");
    }
    const double isum = std::accumulate(initial.begin(), initial.end(), 0.0);
    if (std::fabs(isum - 1.0) > 1e-9) throw ParameterError("initial distribution must sum to 1");
    for (int r : resume_classes)
        if (r < 0 || r >= num_classes) throw ParameterError("resume class out of range");
    if (terminal_class >= num_classes) throw ParameterError("terminal class out of range");
}

WorkflowModel ramie_preset(double skip, double ret, double detour) {
    if (skip < 0 || ret < 0 || detour < 0 || skip + ret + detour >= 1.0)
        throw ParameterError("ramie preset probabilities must be non-negative and sum below 1");
    WorkflowModel m;
    m.num_classes = 13;  // 11 ordered phases + non-standard action + camera out of body
    const int last = 10, act = 11, cam = 12;
    m.transition.assign(13 * 13, 0.0);
    auto set = [&](int i, int j, double v) { m.transition[static_cast<std::size_t>(i) * 13 + j] = v; };
    for (int i = 0; i <= last; ++i) {
        double remaining = 1.0;
        if (detour > 0) {
            set(i, act, detour / 2);
            set(i, cam, detour / 2);
            remaining -= detour;
        }
        if (i > 0 && ret > 0) {
            set(i, i - 1, ret);
            remaining -= ret;
        }
        if (i < last) {
            if (i + 2 <= last && skip > 0) {
                set(i, i + 2, skip);
                remaining -= skip;
            }
            set(i, i + 1, remaining);
        } else if (remaining > 0) {
            // final phase: leftover mass alternates into the detour classes
            set(i, act, m.p(i, act) + remaining / 2);
            set(i, cam, m.p(i, cam) + remaining / 2);
        }
    }
    // detour rows are only consulted when a video starts inside one; resume
    // handling covers every other visit
    for (int d : {act, cam}) {
        const double share = 1.0 / (last + 1);
        for (int j = 0; j <= last; ++j) set(d, j, share);
    }
    m.durations = {
        {40, 3, 5}, {90, 3, 8}, {25, 3, 5}, {120, 3, 10}, {60, 3, 6}, {150, 3, 12},
        {35, 3, 5}, {100, 3, 8}, {45, 3, 6}, {80, 3, 8}, {70, 3, 6},
        {20, 2, 3},  // non-standard action
        {12, 2, 3},  // camera out of body
    };
    m.initial.assign(13, 0.0);
    m.initial[0] = 1.0;
    m.resume_classes = {act, cam};
    m.terminal_class = -1;
    m.ambiguity_width = 10;
    m.validate();
    return m;
}

WorkflowModel autolaparo_preset(double swap) {
    if (swap < 0.0 || swap > 1.0) throw ParameterError("swap probability must be in [0, 1]");
    WorkflowModel m;
    m.num_classes = 7;
    m.transition.assign(7 * 7, 0.0);
    auto set = [&](int i, int j, double v) { m.transition[static_cast<std::size_t>(i) * 7 + j] = v; };
    // phases 1 and 2 (zero-based) may occur in either order
    set(0, 1, 1.0 - swap);
    set(0, 2, swap);
    set(1, 2, 1.0 - swap);
    set(1, 3, swap);
    set(2, 3, 1.0 - swap);
    set(2, 1, swap);
    for (int i = 3; i < 6; ++i) set(i, i + 1, 1.0);
    set(6, 0, 1.0);  // never consulted: terminal
    m.durations = {{50, 4, 5}, {80, 4, 5}, {70, 4, 5}, {200, 4, 10}, {90, 4, 5}, {60, 4, 5}, {40, 4, 5}};
    m.initial.assign(7, 0.0);
    m.initial[0] = 1.0;
    m.terminal_class = 6;
    m.ambiguity_width = 10;
    m.validate();
    return m;
}

WorkflowModel sequential_preset(int num_classes) {
    if (num_classes < 2) throw ParameterError("sequential preset needs at least 2 classes");
    WorkflowModel m;
    m.num_classes = num_classes;
    const std::size_t c = static_cast<std::size_t>(num_classes);
    m.transition.assign(c * c, 0.0);
    for (int i = 0; i + 1 < num_classes; ++i)
        m.transition[static_cast<std::size_t>(i) * c + i + 1] = 1.0;
    m.transition[(c - 1) * c] = 1.0;  // never consulted: terminal
    m.durations.assign(c, DurationLaw{60, 5, 5});
    m.initial.assign(c, 0.0);
    m.initial[0] = 1.0;
    m.terminal_class = num_classes - 1;
    m.ambiguity_width = 10;
    m.validate();
    return m;
}

namespace {

int sample_duration(const DurationLaw& law, Rng& rng) {
    const double extra_mean = law.mean - law.min_frames;
    if (extra_mean <= 0.0) return law.min_frames;
    return law.min_frames + static_cast<int>(rng.negative_binomial(extra_mean, law.dispersion));
}

}  // namespace

PhaseSequence generate_video(const WorkflowModel& model, std::uint64_t seed, int target_length) {
    model.validate();
    if (target_length < 1) throw GenerationError("target length must be at least 1 frame");
    Rng rng(seed);
    PhaseSequence seq;
    seq.num_classes = model.num_classes;
    int current = static_cast<int>(rng.categorical(model.initial));
    int interrupted = -1;
    while (static_cast<int>(seq.labels.size()) < target_length) {
        int dur = sample_duration(model.durations[static_cast<std::size_t>(current)], rng);
        if (current == model.terminal_class)
            dur = std::max(dur, target_length - static_cast<int>(seq.labels.size()));
        seq.labels.insert(seq.labels.end(), static_cast<std::size_t>(dur), current);
        if (static_cast<int>(seq.labels.size()) >= target_length) break;
        int next;
        if (contains(model.resume_classes, current) && interrupted >= 0) {
            next = interrupted;
            interrupted = -1;
        } else {
            const double* row = model.transition.data() +
                                static_cast<std::size_t>(current) * model.num_classes;
            next = static_cast<int>(rng.categorical({row, static_cast<std::size_t>(model.num_classes)}));
            if (contains(model.resume_classes, next)) interrupted = current;
        }
        current = next;
    }
    return seq;
}

std::vector<double> class_anchor(int label, int dim) {
    if (label < 0) throw ParameterError("class label must be non-negative");
    if (dim < 2) throw ParameterError("feature dim must be at least 2");
    Rng rng(mix_seed(kAnchorStream, (static_cast<std::uint64_t>(label) << 32) |
                                        static_cast<std::uint64_t>(dim)));
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

FeatureSequence synthesize_features(const std::vector<int>& labels, int dim, double noise_scale,
                                    int ambiguity_width, std::uint64_t seed) {
    if (dim < 2) throw ParameterError("feature dim must be at least 2");
    if (noise_scale < 0.0) throw ParameterError("noise scale must be non-negative");
    if (ambiguity_width < 0) throw ParameterError("ambiguity width must be non-negative");
    if (labels.empty()) throw DataError("cannot synthesize features for an empty sequence");

    int max_label = 0;
    for (int l : labels) {
        if (l < 0) throw DataError("negative label");
        max_label = std::max(max_label, l);
    }
    std::vector<std::vector<double>> anchors;
    for (int c = 0; c <= max_label; ++c) anchors.push_back(class_anchor(c, dim));

    const auto segs = segments_from_frames(labels);
    Rng rng(mix_seed(kFeatureStream, seed));
    FeatureSequence out;
    out.num_frames = static_cast<int>(labels.size());
    out.dim = dim;
    out.source = "synthetic";
    out.values.reserve(labels.size() * static_cast<std::size_t>(dim));

    std::vector<double> base(static_cast<std::size_t>(dim));
    for (std::size_t si = 0; si < segs.size(); ++si) {
        const Segment& s = segs[si];
        const int left_neighbor = si > 0 ? segs[si - 1].label : -1;
        const int right_neighbor = si + 1 < segs.size() ? segs[si + 1].label : -1;
        for (int t = s.start; t < s.end; ++t) {
            const int m_left = t - s.start;
            const int m_right = s.end - 1 - t;
            int neighbor = -1;
            int m = 0;
            if (left_neighbor >= 0 && (right_neighbor < 0 || m_left <= m_right)) {
                neighbor = left_neighbor;
                m = m_left;
            } else if (right_neighbor >= 0) {
                neighbor = right_neighbor;
                m = m_right;
            }
            double alpha = 0.0;
            if (neighbor >= 0 && ambiguity_width > 0 && m < ambiguity_width)
                alpha = 0.5 * (1.0 - static_cast<double>(m) / ambiguity_width);
            const auto& own = anchors[static_cast<std::size_t>(s.label)];
            for (int j = 0; j < dim; ++j) {
                double v = own[static_cast<std::size_t>(j)];
                if (alpha > 0.0)
                    v = (1.0 - alpha) * v +
                        alpha * anchors[static_cast<std::size_t>(neighbor)][static_cast<std::size_t>(j)];
                if (noise_scale > 0.0) v += noise_scale * rng.normal();
                out.values.push_back(static_cast<float>(v));
            }
        }
    }
    return out;
}

void DatasetSpec::validate() const {
    if (preset != "ramie" && preset != "autolaparo" && preset != "sequential")
        throw ConfigError("unknown preset '" + preset + "'");
    if (preset == "sequential" && num_classes < 2)
        throw ConfigError("sequential preset requires num_classes >= 2");
    if (num_videos < 1) throw ConfigError("num_videos must be positive");
    if (feature_dim < 2) throw ConfigError("feature_dim must be at least 2");
    if (min_length < 1 || max_length < min_length)
        throw ConfigError("need 1 <= min_length <= max_length");
    if (noise_scale < 0) throw ConfigError("noise_scale must be non-negative");
    if (split_train < 0 || split_val < 0 || split_test < 0 ||
        split_train + split_val + split_test == 0)
        throw ConfigError("split ratio must be non-negative and non-zero");
}

WorkflowModel DatasetSpec::workflow() const {
    validate();
    WorkflowModel m;
    if (preset == "ramie") m = ramie_preset();
    else if (preset == "autolaparo") m = autolaparo_preset();
    else m = sequential_preset(num_classes);
    if (ambiguity_width >= 0) m.ambiguity_width = ambiguity_width;
    return m;
}

void split_counts(const DatasetSpec& spec, int* train, int* val, int* test) {
    const double total = spec.split_train + spec.split_val + spec.split_test;
    const double exact[3] = {spec.num_videos * spec.split_train / total,
                             spec.num_videos * spec.split_val / total,
                             spec.num_videos * spec.split_test / total};
    int counts[3];
    double remainders[3];
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        counts[i] = static_cast<int>(std::floor(exact[i]));
        remainders[i] = exact[i] - counts[i];
        assigned += counts[i];
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
        return remainders[a] != remainders[b] ? remainders[a] > remainders[b] : a < b;
    });
    for (int i = 0; assigned < spec.num_videos; ++i, ++assigned) ++counts[order[i % 3]];
    *train = counts[0];
    *val = counts[1];
    *test = counts[2];
}

Manifest make_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    spec.validate();
    const WorkflowModel model = spec.workflow();
    std::filesystem::create_directories(out_dir);

    int n_train, n_val, n_test;
    split_counts(spec, &n_train, &n_val, &n_test);

    Manifest manifest;
    manifest.preset = spec.preset;
    manifest.seed = spec.seed;
    manifest.num_classes = model.num_classes;
    manifest.feature_dim = spec.feature_dim;

    Rng length_rng(mix_seed(spec.seed, kLengthStream));
    for (int i = 0; i < spec.num_videos; ++i) {
        const int target = spec.min_length +
                           static_cast<int>(length_rng.uniform_int(
                               static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1)));
        const std::uint64_t label_seed = mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(i));
        const std::uint64_t feat_seed = mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(i) + 1);
        PhaseSequence seq = generate_video(model, label_seed, target);
        FeatureSequence feats = synthesize_features(seq.labels, spec.feature_dim, spec.noise_scale,
                                                    model.ambiguity_width, feat_seed);

        char idbuf[16];
        std::snprintf(idbuf, sizeof idbuf, "v%02d", i + 1);
        VideoEntry entry;
        entry.id = idbuf;
        entry.features = entry.id + ".phsf";
        entry.labels = entry.id + ".labels.txt";
        entry.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        entry.num_frames = static_cast<int>(seq.labels.size());

        const auto dir = std::filesystem::path(out_dir);
        save_features(feats, (dir / entry.features).string());
        save_labels(seq.labels, (dir / entry.labels).string());
        manifest.videos.push_back(std::move(entry));
    }

    const auto manifest_path = (std::filesystem::path(out_dir) / "manifest.json").string();
    save_manifest(manifest, manifest_path);
    manifest.base_dir = out_dir;
    return manifest;
}

}  // namespace phaseseg
