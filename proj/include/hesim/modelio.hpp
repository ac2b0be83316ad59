#pragma once

#include <string>

#include "hesim/netcompile.hpp"

namespace hesim {

/// Parse a model description from JSON.  Unknown keys are rejected so that
/// typos fail loudly rather than silently changing the architecture.
ModelSpec parse_model_json(const std::string& text);
ModelSpec load_model(const std::string& path);

/// Resolve a model argument: builtin name, literal path, or a file found
/// under $HECNN_MODEL_DIR.  Throws IoError when nothing matches.
ModelSpec resolve_model(const std::string& name_or_path);

/// Weights are a flat stream of little-endian float32 values in layer
/// order: conv banks as [c_out][c_in][k][k] followed by [c_out] biases,
/// dense layers as [m][n] followed by [m].  Sub-convolutions store their
/// per-group banks consecutively.
ModelWeights load_weights(const ModelSpec& model, const std::string& path);
void save_weights(const ModelSpec& model, const ModelWeights& weights,
                  const std::string& path);

/// Inputs are [c][d][d] little-endian float32 values.
Tensor3 load_input(const ModelSpec& model, const std::string& path);
void save_input(const Tensor3& input, const std::string& path);

}  // namespace hesim
