#pragma once

#include <string>
#include <vector>

#include "phaseseg/tensor.hpp"

namespace phaseseg {

// Frame features, stored as 32-bit floats row-major. Files round-trip
// bit-exactly because this struct already holds the on-disk precision.
struct FeatureSequence {
    int num_frames = 0;
    int dim = 0;
    std::vector<float> values;    // [num_frames, dim]
    std::string source = "external";  // "synthetic" when generated; not serialized

    TensorPtr to_tensor() const;  // widened to double, no gradient
};

// Binary feature file: magic "PHSF", then u32 version, u32 T, u32 D,
// then T*D little-endian f32 values row-major.
void save_features(const FeatureSequence& seq, const std::string& path);
FeatureSequence load_features(const std::string& path);

// CSV import: one frame per line, comma-separated numbers, uniform width.
FeatureSequence import_features_csv(const std::string& path);

// Labels file: one integer per line. If num_classes >= 0, labels are
// validated against [0, num_classes).
std::vector<int> load_labels(const std::string& path, int num_classes = -1);
void save_labels(const std::vector<int>& labels, const std::string& path);

struct VideoEntry {
    std::string id;
    std::string features;  // path relative to the manifest directory
    std::string labels;
    std::string split;     // "train", "val" or "test"
    int num_frames = 0;
};

struct Manifest {
    std::string preset;
    unsigned long long seed = 0;
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<VideoEntry> videos;
    std::string base_dir;  // set by load_manifest, not serialized

    std::vector<VideoEntry> split(const std::string& name) const;
    std::string resolve(const std::string& relative) const;
};

void save_manifest(const Manifest& manifest, const std::string& path);
Manifest load_manifest(const std::string& path);

}  // namespace phaseseg
