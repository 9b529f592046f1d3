#include "phaseseg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace phaseseg {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'E', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& b, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& b, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    return v;
}

[[noreturn]] void fail(const std::string& path, const std::string& why, std::size_t offset) {
    throw FormatError(path + ": " + why + " at byte " + std::to_string(offset));
}

}  // namespace

Checkpoint snapshot_model(const Model& model, nlohmann::json meta) {
    Checkpoint c;
    c.model_config = model.config();
    c.meta = std::move(meta);
    c.params.reserve(model.parameter_count());
    for (const auto& p : model.parameters())
        for (double v : p->data) c.params.push_back(static_cast<float>(v));
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json header;
    header["model"] = nlohmann::json::parse(ckpt.model_config.to_json());
    header["meta"] = ckpt.meta.is_null() ? nlohmann::json::object() : ckpt.meta;
    const std::string blob = header.dump();

    std::string out;
    out.reserve(20 + blob.size() + ckpt.params.size() * 4);
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.append(blob);
    put_u64(out, static_cast<std::uint64_t>(ckpt.params.size()));
    for (float v : ckpt.params) put_u32(out, std::bit_cast<std::uint32_t>(v));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string b = ss.str();

    std::size_t pos = 0;
    if (b.size() < 4 || b.compare(0, 4, kMagic, 4) != 0) fail(path, "bad magic", 0);
    pos = 4;
    if (b.size() < pos + 4) fail(path, "truncated version field", pos);
    const std::uint32_t version = get_u32(b, pos);
    if (version != kVersion) fail(path, "unsupported version " + std::to_string(version), pos);
    pos += 4;
    if (b.size() < pos + 4) fail(path, "truncated header length", pos);
    const std::uint32_t blob_len = get_u32(b, pos);
    pos += 4;
    if (b.size() < pos + blob_len) fail(path, "truncated header blob", pos);
    const std::string blob = b.substr(pos, blob_len);
    pos += blob_len;

    Checkpoint c;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob);
        c.model_config = ModelConfig::from_json(header.at("model").dump());
        c.meta = header.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad header blob: " + e.what());
    }

    if (b.size() < pos + 8) fail(path, "truncated parameter count", pos);
    const std::uint64_t count = get_u64(b, pos);
    pos += 8;
    if (b.size() - pos != count * 4)
        fail(path, "parameter body size mismatch, expected " + std::to_string(count * 4) + " bytes", pos);
    c.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        c.params[i] = std::bit_cast<float>(get_u32(b, pos));
        pos += 4;
    }

    Model probe(c.model_config);
    if (probe.parameter_count() != count)
        throw DataError(path + ": parameter count " + std::to_string(count) +
                        " does not match the configured architecture (" +
                        std::to_string(probe.parameter_count()) + ")");
    return c;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model) {
    if (model.config().to_json() != ckpt.model_config.to_json())
        throw DataError("checkpoint configuration does not match the model");
    std::size_t i = 0;
    for (const auto& p : model.parameters())
        for (auto& v : p->data) v = static_cast<double>(ckpt.params[i++]);
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    Model model(ckpt.model_config);
    apply_checkpoint(ckpt, model);
    return model;
}

void quantize_params(Model& model) {
    for (const auto& p : model.parameters())
        for (auto& v : p->data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace phaseseg
