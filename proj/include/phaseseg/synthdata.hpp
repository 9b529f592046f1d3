#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseseg/io.hpp"

namespace phaseseg {

struct PhaseSequence {
    std::vector<int> labels;
    int num_classes = 0;
    double fps = 1.0;
};

struct DurationLaw {
    double mean = 0.0;       // mean run length in frames
    double dispersion = 1.0; // negative-binomial shape; smaller = heavier tail
    int min_frames = 1;
};

// Semi-Markov workflow: phases are drawn from the transition matrix, run
// lengths from per-class duration laws. Classes listed in resume_classes act
// as detours: when such a run ends, the interrupted phase continues instead
// of a fresh draw. A terminal class, once entered, runs to the target length.
struct WorkflowModel {
    int num_classes = 0;
    std::vector<double> transition;      // row-major C x C, zero diagonal
    std::vector<DurationLaw> durations;  // per class
    std::vector<double> initial;         // length C
    std::vector<int> resume_classes;
    int terminal_class = -1;
    int ambiguity_width = 10;

    void validate() const;
    double p(int from, int to) const { return transition[static_cast<std::size_t>(from) * num_classes + to]; }
};

// 13-phase workflow: 11 ordered surgical phases plus two detour classes
// (non-standard action, camera out of body). skip jumps one phase ahead,
// ret revisits the previous phase, detour enters either detour class.
WorkflowModel ramie_preset(double skip = 0.15, double ret = 0.05, double detour = 0.08);

// 7 ordered phases; with probability swap the second and third phases occur
// in the opposite order.
WorkflowModel autolaparo_preset(double swap = 0.25);

// Strictly ordered phases 0..C-1, uniform duration laws. Used for tiny
// separable smoke datasets.
WorkflowModel sequential_preset(int num_classes);

PhaseSequence generate_video(const WorkflowModel& model, std::uint64_t seed, int target_length);

// Fixed direction vector for one class at one feature width; independent of
// any dataset seed.
std::vector<double> class_anchor(int label, int dim);

// Per-frame features: the class anchor plus noise; within ambiguity_width
// frames of a phase boundary the anchor is linearly blended with the
// neighboring class, meeting at the midpoint on the boundary itself.
FeatureSequence synthesize_features(const std::vector<int>& labels, int dim, double noise_scale,
                                    int ambiguity_width, std::uint64_t seed);

struct DatasetSpec {
    std::string preset = "ramie";  // ramie | autolaparo | sequential
    int num_classes = 0;           // only for the sequential preset; 0 = preset default
    int num_videos = 27;
    int feature_dim = 2048;
    int min_length = 500;
    int max_length = 1500;
    double noise_scale = 0.1;
    int ambiguity_width = -1;      // -1 = preset default
    int split_train = 14, split_val = 4, split_test = 9;  // ratio, scaled to num_videos
    std::uint64_t seed = 42;

    void validate() const;
    WorkflowModel workflow() const;
};

// Largest-remainder apportionment of num_videos into the three splits.
void split_counts(const DatasetSpec& spec, int* train, int* val, int* test);

// Writes per-video feature/label files plus manifest.json into out_dir and
// returns the manifest.
Manifest make_dataset(const DatasetSpec& spec, const std::string& out_dir);

}  // namespace phaseseg
