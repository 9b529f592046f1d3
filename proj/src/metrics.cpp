#include "phaseseg/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "phaseseg/errors.hpp"

namespace phaseseg {

std::vector<Segment> segments_from_frames(const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("cannot segment an empty sequence");
    std::vector<Segment> segs;
    int start = 0;
    for (std::size_t t = 1; t <= labels.size(); ++t) {
        if (t == labels.size() || labels[t] != labels[t - 1]) {
            segs.push_back({labels[t - 1], start, static_cast<int>(t)});
            start = static_cast<int>(t);
        }
    }
    return segs;
}

std::vector<int> frames_from_segments(const std::vector<Segment>& segments) {
    std::vector<int> out;
    for (const auto& s : segments)
        for (int t = s.start; t < s.end; ++t) out.push_back(s.label);
    return out;
}

namespace {

void require_same_length(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size())
        throw DataError("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                        std::to_string(gt.size()));
    if (pred.empty()) throw DataError("empty sequences");
}

std::vector<int> segment_labels(const std::vector<Segment>& segs) {
    std::vector<int> out;
    out.reserve(segs.size());
    for (const auto& s : segs) out.push_back(s.label);
    return out;
}

double iou(const Segment& a, const Segment& b) {
    const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const int uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace

double accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
    require_same_length(pred, gt);
    std::size_t correct = 0;
    for (std::size_t t = 0; t < pred.size(); ++t)
        if (pred[t] == gt[t]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(pred.size());
}

MacroScores macro_prf_jaccard(const std::vector<int>& pred, const std::vector<int>& gt,
                              int num_classes) {
    require_same_length(pred, gt);
    if (num_classes < 1) throw ParameterError("num_classes must be positive");
    MacroScores out;
    int active = 0;
    for (int c = 0; c < num_classes; ++c) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t t = 0; t < pred.size(); ++t) {
            const bool p = pred[t] == c, g = gt[t] == c;
            if (p && g) ++tp;
            else if (p) ++fp;
            else if (g) ++fn;
        }
        if (tp + fp + fn == 0) continue;  // class absent everywhere
        ++active;
        out.precision += tp + fp > 0 ? 100.0 * tp / (tp + fp) : 0.0;
        out.recall += tp + fn > 0 ? 100.0 * tp / (tp + fn) : 0.0;
        out.jaccard += 100.0 * tp / (tp + fp + fn);
    }
    if (active == 0) throw DataError("no class has support in either sequence");
    out.precision /= active;
    out.recall /= active;
    out.jaccard /= active;
    return out;
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double edit_score(const std::vector<Segment>& pred_segments,
                  const std::vector<Segment>& gt_segments) {
    const auto p = segment_labels(pred_segments);
    const auto g = segment_labels(gt_segments);
    const std::size_t denom = std::max(p.size(), g.size());
    if (denom == 0) return 100.0;
    const double score = 100.0 * (1.0 - static_cast<double>(levenshtein(p, g)) / static_cast<double>(denom));
    return std::max(0.0, score);
}

double f1_at_tau(const std::vector<Segment>& pred_segments,
                 const std::vector<Segment>& gt_segments, double tau) {
    if (tau <= 0.0 || tau >= 100.0) throw ParameterError("tau must be in (0, 100)");
    const double threshold = tau / 100.0;
    std::vector<bool> gt_used(gt_segments.size(), false);
    long tp = 0, fp = 0;
    for (const auto& ps : pred_segments) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t j = 0; j < gt_segments.size(); ++j) {
            if (gt_used[j] || gt_segments[j].label != ps.label) continue;
            const double v = iou(ps, gt_segments[j]);
            if (v > best_iou) {
                best_iou = v;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= threshold) {
            gt_used[static_cast<std::size_t>(best)] = true;
            ++tp;
        } else {
            ++fp;
        }
    }
    const long fn = static_cast<long>(gt_segments.size()) - tp;
    if (tp == 0 && (fp > 0 || fn > 0)) return 0.0;
    if (tp == 0) return 100.0;  // both empty
    const double precision = static_cast<double>(tp) / (tp + fp);
    const double recall = static_cast<double>(tp) / (tp + fn);
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

VideoMetrics evaluate_video(const std::string& video_id, const std::vector<int>& pred,
                            const std::vector<int>& gt, int num_classes) {
    require_same_length(pred, gt);
    VideoMetrics m;
    m.video_id = video_id;
    m.accuracy = accuracy(pred, gt);
    const MacroScores macro = macro_prf_jaccard(pred, gt, num_classes);
    m.precision = macro.precision;
    m.recall = macro.recall;
    m.jaccard = macro.jaccard;
    const auto ps = segments_from_frames(pred);
    const auto gs = segments_from_frames(gt);
    m.edit = edit_score(ps, gs);
    m.f1_25 = f1_at_tau(ps, gs, 25.0);
    m.f1_50 = f1_at_tau(ps, gs, 50.0);
    m.f1_75 = f1_at_tau(ps, gs, 75.0);
    return m;
}

AggregateMetrics aggregate(const std::vector<VideoMetrics>& videos) {
    if (videos.empty()) throw DataError("cannot aggregate zero videos");
    AggregateMetrics out;
    out.num_videos = static_cast<int>(videos.size());
    const auto fields = {&VideoMetrics::accuracy, &VideoMetrics::precision, &VideoMetrics::recall,
                         &VideoMetrics::jaccard, &VideoMetrics::edit, &VideoMetrics::f1_25,
                         &VideoMetrics::f1_50, &VideoMetrics::f1_75};
    for (auto f : fields) {
        double mean = 0.0;
        for (const auto& v : videos) mean += v.*f;
        mean /= static_cast<double>(videos.size());
        double var = 0.0;
        if (videos.size() > 1) {
            for (const auto& v : videos) var += (v.*f - mean) * (v.*f - mean);
            var /= static_cast<double>(videos.size() - 1);
        }
        out.mean.*f = mean;
        out.stddev.*f = std::sqrt(var);
    }
    return out;
}

}  // namespace phaseseg
