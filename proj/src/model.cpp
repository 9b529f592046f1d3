#include "phaseseg/model.hpp"

#include <cmath>

#include <json.hpp>

#include "phaseseg/kernels.hpp"

namespace phaseseg {

void ModelConfig::validate() const {
    if (input_dim < 1) throw ParameterError("input_dim must be positive");
    if (hidden_dim < 1) throw ParameterError("hidden_dim must be positive");
    if (num_classes < 2) throw ParameterError("num_classes must be at least 2");
    if (num_blocks < 1 || num_blocks > 30) throw ParameterError("num_blocks must be in [1, 30]");
    if (num_decoders < 0) throw ParameterError("num_decoders must be non-negative");
    if (kernel_size < 1) throw ParameterError("kernel_size must be positive");
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["input_dim"] = input_dim;
    j["hidden_dim"] = hidden_dim;
    j["num_classes"] = num_classes;
    j["num_blocks"] = num_blocks;
    j["num_decoders"] = num_decoders;
    j["kernel_size"] = kernel_size;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model config is not valid JSON: ") + e.what());
    }
    ModelConfig c;
    try {
        c.input_dim = j.at("input_dim").get<int>();
        c.hidden_dim = j.at("hidden_dim").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        c.num_blocks = j.at("num_blocks").get<int>();
        c.num_decoders = j.at("num_decoders").get<int>();
        c.kernel_size = j.at("kernel_size").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model config is missing a field: ") + e.what());
    }
    c.validate();
    return c;
}

Model::Model(const ModelConfig& config) : config_(config) {
    config_.validate();
    stages_.push_back(make_stage(config_.input_dim, "encoder"));
    for (int s = 0; s < config_.num_decoders; ++s)
        stages_.push_back(make_stage(config_.num_classes, "decoder" + std::to_string(s + 1)));
}

TensorPtr Model::reg(const std::string& name, std::vector<int> shape) {
    auto t = Tensor::create(std::move(shape), true);
    params_.push_back(t);
    names_.push_back(name);
    return t;
}

Block Model::make_block(int depth) {
    Block b;
    b.dilation = 1 << (depth - 1);
    b.window = 1 << (depth - 1);
    return b;
}

Stage Model::make_stage(int stage_in, const std::string& prefix) {
    const int d = config_.hidden_dim;
    Stage st;
    st.in_w = reg(prefix + ".in.w", {stage_in, d});
    st.in_b = reg(prefix + ".in.b", {1, d});
    for (int l = 1; l <= config_.num_blocks; ++l) {
        Block b = make_block(l);
        const std::string bp = prefix + ".block" + std::to_string(l);
        b.conv_w = reg(bp + ".conv.w", {config_.kernel_size, d, d});
        b.conv_b = reg(bp + ".conv.b", {1, d});
        b.q_w = reg(bp + ".q.w", {d, d});
        b.q_b = reg(bp + ".q.b", {1, d});
        b.k_w = reg(bp + ".k.w", {d, d});
        b.k_b = reg(bp + ".k.b", {1, d});
        b.v_w = reg(bp + ".v.w", {d, d});
        b.v_b = reg(bp + ".v.b", {1, d});
        b.out_w = reg(bp + ".out.w", {d, d});
        b.out_b = reg(bp + ".out.b", {1, d});
        st.blocks.push_back(std::move(b));
    }
    st.cls_w = reg(prefix + ".cls.w", {d, config_.num_classes});
    st.cls_b = reg(prefix + ".cls.b", {1, config_.num_classes});
    return st;
}

void Model::freeze() {
    for (const auto& p : params_) p->requires_grad = false;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->numel();
    return n;
}

void Model::init_params(Rng& rng) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        const bool is_bias = names_[i].size() >= 2 && names_[i].substr(names_[i].size() - 2) == ".b";
        if (is_bias) {
            std::fill(p->data.begin(), p->data.end(), 0.0);
            continue;
        }
        // fan_in: leading extents except the output dimension
        std::size_t fan_in = 1;
        for (std::size_t k = 0; k + 1 < p->shape.size(); ++k) fan_in *= static_cast<std::size_t>(p->shape[k]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : p->data) v = rng.uniform(-bound, bound);
    }
}

TensorPtr Model::run_stage(const Stage& stage, int stage_index, const TensorPtr& input,
                           const TensorPtr& enc_embedding, TensorPtr* embedding_out) const {
    const bool cross = stage_index > 0;
    TensorPtr x = linear(input, stage.in_w, stage.in_b);
    for (const Block& b : stage.blocks) {
        TensorPtr c = relu(causal_dilated_conv1d(x, b.conv_w, b.conv_b, b.dilation));
        TensorPtr q = linear(c, b.q_w, b.q_b);
        const TensorPtr& kv_src = cross ? enc_embedding : c;
        TensorPtr k = linear(kv_src, b.k_w, b.k_b);
        TensorPtr v = linear(kv_src, b.v_w, b.v_b);
        TensorPtr a = windowed_causal_attention(q, k, v, b.window);
        TensorPtr s = add(c, a);
        TensorPtr o = linear(s, b.out_w, b.out_b);
        x = add(x, o);
    }
    if (embedding_out) *embedding_out = x;
    return linear(x, stage.cls_w, stage.cls_b);
}

ForwardResult Model::forward(const TensorPtr& features) const {
    if (!features) throw DataError("forward: null feature tensor");
    if (features->ndim() != 2)
        throw DimensionError("forward: features must be [T, input_dim], got " + shape_str(features->shape));
    if (features->shape[0] < 1) throw DataError("forward: empty feature sequence");
    if (features->shape[1] != config_.input_dim)
        throw DimensionError("forward: feature dimension " + std::to_string(features->shape[1]) +
                             " does not match model input_dim " + std::to_string(config_.input_dim));

    ForwardResult result;
    TensorPtr enc_embedding;
    TensorPtr logits = run_stage(stages_[0], 0, features, nullptr, &enc_embedding);
    result.stage_logits.push_back(logits);
    result.encoder_embedding = enc_embedding;
    for (std::size_t s = 1; s < stages_.size(); ++s) {
        TensorPtr probs = softmax(logits, 1);
        logits = run_stage(stages_[s], static_cast<int>(s), probs, enc_embedding, nullptr);
        result.stage_logits.push_back(logits);
    }
    return result;
}

StreamingSession::StreamingSession(const Model& model) : model_(model) {
    reset();
}

void StreamingSession::reset() {
    t_ = 0;
    enc_embedding_rows_.clear();
    states_.assign(model_.stages().size(), StageState{});
    for (auto& st : states_) st.blocks.assign(model_.config().num_blocks, BlockState{});
}

std::vector<double> StreamingSession::run_stage_frame(int stage_index, const std::vector<double>& row,
                                                      bool is_encoder) {
    const Stage& stage = model_.stages()[static_cast<std::size_t>(stage_index)];
    StageState& sst = states_[static_cast<std::size_t>(stage_index)];
    const int d = model_.config().hidden_dim;
    const int k = model_.config().kernel_size;

    std::vector<double> x(static_cast<std::size_t>(d));
    kernels::linear_row(row.data(), stage.in_w->data.data(), stage.in_b->data.data(),
                        static_cast<int>(row.size()), d, x.data());

    std::vector<double> c(static_cast<std::size_t>(d)), tmp(static_cast<std::size_t>(d));
    std::vector<double> a(static_cast<std::size_t>(d)), s(static_cast<std::size_t>(d));
    std::vector<double> weights;
    for (std::size_t bi = 0; bi < stage.blocks.size(); ++bi) {
        const Block& b = stage.blocks[bi];
        BlockState& bs = sst.blocks[bi];
        bs.x_hist.insert(bs.x_hist.end(), x.begin(), x.end());

        kernels::conv_row(bs.x_hist.data(), d, b.conv_w->data.data(), b.conv_b->data.data(),
                          k, b.dilation, d, t_, c.data());
        for (auto& cv : c) cv = cv > 0.0 ? cv : 0.0;

        std::vector<double> q(static_cast<std::size_t>(d));
        kernels::linear_row(c.data(), b.q_w->data.data(), b.q_b->data.data(), d, d, q.data());
        const double* kv_row = is_encoder ? c.data()
                                          : enc_embedding_rows_.data() + static_cast<std::size_t>(t_) * d;
        kernels::linear_row(kv_row, b.k_w->data.data(), b.k_b->data.data(), d, d, tmp.data());
        bs.k_rows.insert(bs.k_rows.end(), tmp.begin(), tmp.end());
        kernels::linear_row(kv_row, b.v_w->data.data(), b.v_b->data.data(), d, d, tmp.data());
        bs.v_rows.insert(bs.v_rows.end(), tmp.begin(), tmp.end());

        int ks, ke;
        kernels::attention_span(t_, b.window, &ks, &ke);
        weights.resize(static_cast<std::size_t>(ke - ks));
        kernels::attention_row(q.data(), bs.k_rows.data(), bs.v_rows.data(), d, ks, ke,
                               1.0 / std::sqrt(static_cast<double>(d)), weights.data(), a.data());

        for (int j = 0; j < d; ++j) s[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] + a[static_cast<std::size_t>(j)];
        kernels::linear_row(s.data(), b.out_w->data.data(), b.out_b->data.data(), d, d, tmp.data());
        for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += tmp[static_cast<std::size_t>(j)];
    }

    if (is_encoder) enc_embedding_rows_.insert(enc_embedding_rows_.end(), x.begin(), x.end());

    std::vector<double> logits(static_cast<std::size_t>(model_.config().num_classes));
    kernels::linear_row(x.data(), stage.cls_w->data.data(), stage.cls_b->data.data(),
                        d, model_.config().num_classes, logits.data());
    return logits;
}

std::vector<std::vector<double>> StreamingSession::push_frame(const std::vector<double>& frame) {
    if (static_cast<int>(frame.size()) != model_.config().input_dim)
        throw DimensionError("push_frame: expected " + std::to_string(model_.config().input_dim) +
                             " values, got " + std::to_string(frame.size()));

    std::vector<std::vector<double>> out;
    out.reserve(model_.stages().size());
    std::vector<double> logits = run_stage_frame(0, frame, true);
    out.push_back(logits);
    const int C = model_.config().num_classes;
    std::vector<double> probs(static_cast<std::size_t>(C));
    for (std::size_t s = 1; s < model_.stages().size(); ++s) {
        kernels::softmax_row(logits.data(), C, probs.data());
        logits = run_stage_frame(static_cast<int>(s), probs, false);
        out.push_back(logits);
    }
    ++t_;
    return out;
}

}  // namespace phaseseg
