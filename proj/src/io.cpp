#include "phaseseg/io.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phaseseg/errors.hpp"

namespace phaseseg {

namespace {

constexpr char kFeatureMagic[4] = {'P', 'H', 'S', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

// Sequential reader that reports the byte offset of the first problem.
class ByteReader {
public:
    ByteReader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::string raw(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& why) const {
        throw FormatError(path_ + ": " + why + " at byte " + std::to_string(pos_));
    }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n)
            fail(std::string("truncated file, expected ") + what);
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

}  // namespace

TensorPtr FeatureSequence::to_tensor() const {
    if (num_frames < 1 || dim < 1) throw DataError("feature sequence is empty");
    auto t = Tensor::create({num_frames, dim}, false);
    for (std::size_t i = 0; i < values.size(); ++i) t->data[i] = static_cast<double>(values[i]);
    return t;
}

void save_features(const FeatureSequence& seq, const std::string& path) {
    if (seq.num_frames < 0 || seq.dim < 0 ||
        seq.values.size() != static_cast<std::size_t>(seq.num_frames) * static_cast<std::size_t>(seq.dim))
        throw DataError("feature sequence shape does not match its value count");
    std::string out;
    out.reserve(16 + seq.values.size() * 4);
    out.append(kFeatureMagic, 4);
    put_u32(out, kFeatureVersion);
    put_u32(out, static_cast<std::uint32_t>(seq.num_frames));
    put_u32(out, static_cast<std::uint32_t>(seq.dim));
    for (float v : seq.values) put_f32(out, v);
    write_file(path, out);
}

FeatureSequence load_features(const std::string& path) {
    ByteReader r(read_file(path), path);
    const std::string magic = r.raw(4, "magic");
    if (magic != std::string(kFeatureMagic, 4))
        throw FormatError(path + ": bad magic at byte 0");
    const std::uint32_t version = r.u32("version");
    if (version != kFeatureVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
    FeatureSequence seq;
    seq.num_frames = static_cast<int>(r.u32("frame count"));
    seq.dim = static_cast<int>(r.u32("feature dim"));
    const std::size_t n = static_cast<std::size_t>(seq.num_frames) * static_cast<std::size_t>(seq.dim);
    if (r.remaining() != n * 4) r.fail("body size mismatch, expected " + std::to_string(n * 4) + " bytes");
    seq.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) seq.values[i] = r.f32("feature value");
    return seq;
}

FeatureSequence import_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    FeatureSequence seq;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stof(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw FormatError(path + ": line " + std::to_string(line_no) + ": '" + cell +
                                  "' is not a number");
            }
        }
        if (seq.dim == 0) {
            seq.dim = static_cast<int>(row.size());
        } else if (static_cast<int>(row.size()) != seq.dim) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                              std::to_string(seq.dim) + " columns, got " + std::to_string(row.size()));
        }
        seq.values.insert(seq.values.end(), row.begin(), row.end());
        ++seq.num_frames;
    }
    if (seq.num_frames == 0) throw DataError(path + ": no feature rows");
    return seq;
}

std::vector<int> load_labels(const std::string& path, int num_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<int> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(line, &used);
            while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
            if (used != line.size()) throw std::invalid_argument("trailing junk");
            labels.push_back(v);
        } catch (const std::exception&) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": '" + line +
                              "' is not an integer");
        }
        if (num_classes >= 0 && (labels.back() < 0 || labels.back() >= num_classes))
            throw DataError(path + ": line " + std::to_string(line_no) + ": label " +
                            std::to_string(labels.back()) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    if (labels.empty()) throw DataError(path + ": no labels");
    return labels;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
    std::ostringstream out;
    for (int v : labels) out << v << '\n';
    write_file(path, out.str());
}

std::vector<VideoEntry> Manifest::split(const std::string& name) const {
    std::vector<VideoEntry> out;
    for (const auto& v : videos)
        if (v.split == name) out.push_back(v);
    return out;
}

std::string Manifest::resolve(const std::string& relative) const {
    if (relative.empty()) return relative;
    std::filesystem::path p(relative);
    if (p.is_absolute() || base_dir.empty()) return relative;
    return (std::filesystem::path(base_dir) / p).string();
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["preset"] = manifest.preset;
    j["seed"] = manifest.seed;
    j["num_classes"] = manifest.num_classes;
    j["feature_dim"] = manifest.feature_dim;
    j["videos"] = nlohmann::json::array();
    for (const auto& v : manifest.videos) {
        j["videos"].push_back({{"id", v.id},
                               {"features", v.features},
                               {"labels", v.labels},
                               {"split", v.split},
                               {"num_frames", v.num_frames}});
    }
    write_file(path, j.dump(2) + "\n");
}

Manifest load_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": not valid JSON: " + e.what());
    }
    Manifest m;
    try {
        m.preset = j.at("preset").get<std::string>();
        m.seed = j.at("seed").get<unsigned long long>();
        m.num_classes = j.at("num_classes").get<int>();
        m.feature_dim = j.at("feature_dim").get<int>();
        for (const auto& jv : j.at("videos")) {
            VideoEntry v;
            v.id = jv.at("id").get<std::string>();
            v.features = jv.at("features").get<std::string>();
            v.labels = jv.at("labels").get<std::string>();
            v.split = jv.at("split").get<std::string>();
            v.num_frames = jv.at("num_frames").get<int>();
            m.videos.push_back(std::move(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad manifest structure: " + e.what());
    }
    for (std::size_t i = 0; i < m.videos.size(); ++i)
        for (std::size_t k = i + 1; k < m.videos.size(); ++k)
            if (m.videos[i].id == m.videos[k].id)
                throw DataError(path + ": duplicate video id '" + m.videos[i].id + "'");
    m.base_dir = std::filesystem::path(path).parent_path().string();
    return m;
}

}  // namespace phaseseg
