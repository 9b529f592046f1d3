#pragma once

#include <stdexcept>
#include <string>

namespace phaseseg {

// Shape or size disagreement between tensors/sequences.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid scalar argument (dilation < 1, lr <= 0, layer index out of range, ...).
struct ParameterError : std::invalid_argument {
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid data content (label out of range, empty sequence, length mismatch).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file; message names the byte offset where parsing failed.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration inconsistency (checkpoint vs data dims, bad config values).
// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Workflow generator cannot satisfy the requested constraints.
struct GenerationError : std::runtime_error {
    explicit GenerationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace phaseseg
