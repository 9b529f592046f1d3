#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "phaseseg/metrics.hpp"

namespace phaseseg {

struct ReportEntry {
    VideoMetrics metrics;
    int pred_segments = 0;  // over-segmentation diagnostic
    int gt_segments = 0;
};

// {"videos": [...], "aggregate": {"num_videos", "mean", "stddev"}, "std_kind"}
nlohmann::json report_json(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg);
void write_report_json(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg,
                       const std::string& path);

// One row per video plus mean and stddev rows; fixed column order.
void write_report_csv(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg,
                      const std::string& path);

// Color per class index, cycling if num_classes exceeds the palette.
const std::vector<std::string>& ribbon_palette();

// Two-row phase ribbon (ground truth above prediction) at a fixed horizontal
// scale of 2 px per frame.
void write_ribbon_svg(const std::vector<int>& gt, const std::vector<int>& pred,
                      const std::string& title, const std::string& path);

}  // namespace phaseseg
