#include "phaseseg/report.hpp"

#include <fstream>
#include <sstream>

#include "phaseseg/errors.hpp"

namespace phaseseg {

namespace {

nlohmann::json metrics_json(const VideoMetrics& m) {
    return {
        {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
        {"jaccard", m.jaccard},   {"edit", m.edit},           {"f1_25", m.f1_25},
        {"f1_50", m.f1_50},       {"f1_75", m.f1_75},
    };
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << text;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

}  // namespace

nlohmann::json report_json(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg) {
    nlohmann::json j;
    j["videos"] = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json v = metrics_json(e.metrics);
        v["video_id"] = e.metrics.video_id;
        v["pred_segments"] = e.pred_segments;
        v["gt_segments"] = e.gt_segments;
        j["videos"].push_back(std::move(v));
    }
    j["aggregate"] = {{"num_videos", agg.num_videos},
                      {"mean", metrics_json(agg.mean)},
                      {"stddev", metrics_json(agg.stddev)}};
    j["std_kind"] = "sample";  // n-1 normalization across videos
    return j;
}

void write_report_json(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg,
                       const std::string& path) {
    write_text(path, report_json(entries, agg).dump(2) + "\n");
}

void write_report_csv(const std::vector<ReportEntry>& entries, const AggregateMetrics& agg,
                      const std::string& path) {
    std::ostringstream out;
    out << "video_id,accuracy,precision,recall,jaccard,edit,f1_25,f1_50,f1_75,pred_segments,gt_segments\n";
    char buf[320];
    auto row = [&](const std::string& id, const VideoMetrics& m) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                      id.c_str(), m.accuracy, m.precision, m.recall, m.jaccard, m.edit, m.f1_25,
                      m.f1_50, m.f1_75);
        out << buf;
    };
    for (const auto& e : entries) {
        row(e.metrics.video_id, e.metrics);
        out << ',' << e.pred_segments << ',' << e.gt_segments << '\n';
    }
    row("mean", agg.mean);
    out << ",,\n";
    row("stddev", agg.stddev);
    out << ",,\n";
    write_text(path, out.str());
}

const std::vector<std::string>& ribbon_palette() {
    // 16 visually distinct fills; classes beyond 16 cycle
    static const std::vector<std::string> colors = {
        "#4e79a7",  // blue
        "#f28e2b",  // orange
        "#e15759",  // red
        "#76b7b2",  // teal
        "#59a14f",  // green
        "#edc948",  // yellow
        "#b07aa1",  // purple
        "#ff9da7",  // pink
        "#9c755f",  // brown
        "#bab0ac",  // grey
        "#86bcb6",  // sea
        "#d37295",  // rose
        "#8cd17d",  // light green
        "#b6992d",  // olive
        "#499894",  // dark teal
        "#e58606",  // amber
    };
    return colors;
}

void write_ribbon_svg(const std::vector<int>& gt, const std::vector<int>& pred,
                      const std::string& title, const std::string& path) {
    if (gt.size() != pred.size() || gt.empty())
        throw DataError("ribbon needs equal, non-empty sequences");
    const int px_per_frame = 2;
    const int row_h = 40, gap = 8, label_w = 40, margin = 10;
    const int width = label_w + static_cast<int>(gt.size()) * px_per_frame + margin;
    const int height = margin + 16 + 2 * row_h + gap + margin;
    const auto& palette = ribbon_palette();

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "  <title>" << xml_escape(title) << "</title>\n";
    svg << "  <text x=\"" << margin << "\" y=\"" << margin + 10
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(title) << "</text>\n";

    auto draw_row = [&](const std::vector<int>& labels, int y, const char* name) {
        svg << "  <text x=\"" << margin << "\" y=\"" << y + row_h / 2 + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
        for (const auto& seg : segments_from_frames(labels)) {
            const int x = label_w + seg.start * px_per_frame;
            const int w = seg.length() * px_per_frame;
            svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
                << row_h << "\" fill=\""
                << palette[static_cast<std::size_t>(seg.label) % palette.size()] << "\"/>\n";
        }
    };
    const int top = margin + 16;
    draw_row(gt, top, "gt");
    draw_row(pred, top + row_h + gap, "pred");
    svg << "</svg>\n";
    write_text(path, svg.str());
}

}  // namespace phaseseg
