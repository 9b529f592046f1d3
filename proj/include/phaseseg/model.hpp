#pragma once

#include <map>
#include <string>
#include <vector>

#include "phaseseg/ops.hpp"
#include "phaseseg/rng.hpp"

namespace phaseseg {

// Architecture hyperparameters. Defaults follow the reference configuration:
// one encoder and three refinement decoders, ten blocks each, with the block
// at depth l using window and dilation 2^(l-1).
struct ModelConfig {
    int input_dim = 2048;
    int hidden_dim = 64;
    int num_classes = 13;
    int num_blocks = 10;
    int num_decoders = 3;
    int kernel_size = 3;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// One conv + windowed-attention block. The decoder variant draws attention
// keys and values from the encoder embedding instead of its own conv output.
struct Block {
    TensorPtr conv_w, conv_b;      // [k, d, d], [1, d]
    TensorPtr q_w, q_b;            // [d, d], [1, d]
    TensorPtr k_w, k_b;
    TensorPtr v_w, v_b;
    TensorPtr out_w, out_b;        // [d, d], [1, d]
    int dilation = 1;
    int window = 1;
};

// One stage: input projection, block stack, classification head.
struct Stage {
    TensorPtr in_w, in_b;          // [stage_in, d], [1, d]
    std::vector<Block> blocks;
    TensorPtr cls_w, cls_b;        // [d, C], [1, C]
};

struct ForwardResult {
    std::vector<TensorPtr> stage_logits;  // [T, C] per stage, encoder first
    TensorPtr encoder_embedding;          // [T, d] output of the last encoder block
};

class Model {
public:
    explicit Model(const ModelConfig& config);

    void init_params(Rng& rng);

    // Runs every stage on a [T, input_dim] feature sequence.
    ForwardResult forward(const TensorPtr& features) const;

    const ModelConfig& config() const { return config_; }

    // Drops gradient tracking on all parameters (inference-only models).
    void freeze();

    // Parameters in fixed registration order; this order defines the
    // checkpoint layout and must not change between save and load.
    const std::vector<TensorPtr>& parameters() const { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }
    std::size_t parameter_count() const;

    const Stage& encoder() const { return stages_.front(); }
    const std::vector<Stage>& stages() const { return stages_; }

private:
    Block make_block(int depth);
    Stage make_stage(int stage_in, const std::string& prefix);
    TensorPtr reg(const std::string& name, std::vector<int> shape);
    TensorPtr run_stage(const Stage& stage, int stage_index, const TensorPtr& input,
                        const TensorPtr& enc_embedding, TensorPtr* embedding_out) const;

    ModelConfig config_;
    std::vector<Stage> stages_;     // stage 0 is the encoder
    std::vector<TensorPtr> params_;
    std::vector<std::string> names_;
};

// Incremental frame-at-a-time evaluation of a trained model. Feeding the
// frames of a sequence one by one yields, at every step, exactly the logits
// the batch forward pass produces for that prefix.
class StreamingSession {
public:
    explicit StreamingSession(const Model& model);

    // Appends one frame ([input_dim] values) and returns the per-stage class
    // logits for that frame, encoder first.
    std::vector<std::vector<double>> push_frame(const std::vector<double>& frame);

    int frames_seen() const { return t_; }
    void reset();

private:
    struct BlockState {
        std::vector<double> x_hist;   // conv input rows seen so far, [t, d]
        std::vector<double> k_rows;   // attention keys per frame, [t, d]
        std::vector<double> v_rows;   // attention values per frame, [t, d]
    };
    struct StageState {
        std::vector<BlockState> blocks;
    };

    std::vector<double> run_stage_frame(int stage_index, const std::vector<double>& row,
                                        bool is_encoder);

    const Model& model_;
    std::vector<StageState> states_;
    std::vector<double> enc_embedding_rows_;  // [t, d] encoder embedding history
    int t_ = 0;
};

}  // namespace phaseseg
