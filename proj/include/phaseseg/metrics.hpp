#pragma once

#include <string>
#include <vector>

namespace phaseseg {

// Maximal run of one label, end exclusive.
struct Segment {
    int label = 0;
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

// Maximal-run RLE of a frame-label sequence. Adjacent segments always carry
// different labels and the segments tile [0, T) exactly.
std::vector<Segment> segments_from_frames(const std::vector<int>& labels);
std::vector<int> frames_from_segments(const std::vector<Segment>& segments);

double accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

struct MacroScores {
    double precision = 0.0;
    double recall = 0.0;
    double jaccard = 0.0;
};

// Frame-wise per-class scores averaged over classes. Classes with zero
// support in both sequences are skipped; zero denominators score 0.
MacroScores macro_prf_jaccard(const std::vector<int>& pred, const std::vector<int>& gt,
                              int num_classes);

// Levenshtein distance between segment label sequences.
int levenshtein(const std::vector<int>& a, const std::vector<int>& b);

// 100 * (1 - LEV / max(|pred|, |gt|)), floored at 0.
double edit_score(const std::vector<Segment>& pred_segments,
                  const std::vector<Segment>& gt_segments);

// Segmental F1 at an IoU threshold of tau/100. Each predicted segment claims
// the unmatched same-label truth segment with the highest IoU; it counts as a
// true positive when that IoU reaches the threshold.
double f1_at_tau(const std::vector<Segment>& pred_segments,
                 const std::vector<Segment>& gt_segments, double tau);

struct VideoMetrics {
    std::string video_id;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double jaccard = 0.0;
    double edit = 0.0;
    double f1_25 = 0.0;
    double f1_50 = 0.0;
    double f1_75 = 0.0;
};

struct AggregateMetrics {
    int num_videos = 0;
    VideoMetrics mean;  // video_id empty
    VideoMetrics stddev;
};

// All metrics of one video against its ground truth.
VideoMetrics evaluate_video(const std::string& video_id, const std::vector<int>& pred,
                            const std::vector<int>& gt, int num_classes);

// Unweighted mean and sample (n-1) standard deviation across videos; the
// standard deviation is 0 for a single video.
AggregateMetrics aggregate(const std::vector<VideoMetrics>& videos);

}  // namespace phaseseg
