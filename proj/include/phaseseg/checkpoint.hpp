#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "phaseseg/model.hpp"

namespace phaseseg {

// On-disk model snapshot. Header: magic "PSEG", u32 version, u32 length of a
// JSON blob holding the model configuration and training metadata, that blob,
// then u64 parameter count. Body: parameters as little-endian 32-bit floats
// in registration order. Round-trips bit-exactly.
struct Checkpoint {
    ModelConfig model_config;
    nlohmann::json meta;        // optimizer settings, epochs, seed, ...
    std::vector<float> params;  // registration order
};

Checkpoint snapshot_model(const Model& model, nlohmann::json meta = {});

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Writes checkpoint parameters into an existing model of matching shape.
void apply_checkpoint(const Checkpoint& ckpt, Model& model);

// Convenience: build a model directly from a checkpoint.
Model model_from_checkpoint(const Checkpoint& ckpt);

// Rounds every parameter through 32-bit float precision in place, so that
// in-memory evaluation matches what a saved checkpoint will reproduce.
void quantize_params(Model& model);

}  // namespace phaseseg
