#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hesim/convlower.hpp"
#include "hesim/meter.hpp"
#include "hesim/refmodel.hpp"

namespace hesim {

enum class LayerKind { Conv, SubConv, AvgPool, Square, Flatten, Dense };
enum class KernelPolicy { ConvPack, HS, LoLaDense, LoLaStacked };

struct LayerSpec {
  LayerKind kind;
  Eigen::Index k = 0;       // conv/pool kernel side
  Eigen::Index s = 1;       // stride
  Eigen::Index out = 0;     // conv out_channels / dense units
  Eigen::Index groups = 1;  // subconv channel partition
  std::optional<KernelPolicy> policy;
  std::string label;  // empty layers are skipped when naming fused stages
};

struct ModelSpec {
  std::string name;
  Eigen::Index in_c = 0, in_d = 0;
  Eigen::Index n_slots = 0;
  std::vector<LayerSpec> layers;
  // Intermediate linear stages without an explicit per-layer policy use
  // this kernel.
  KernelPolicy default_policy = KernelPolicy::HS;
};

struct LayerWeights {
  FilterBank filters;                     // conv; subconv uses group_filters
  std::vector<FilterBank> group_filters;  // subconv, one bank per group
  Eigen::MatrixXd dense_w;
  Eigen::VectorXd dense_b;
};

struct ModelWeights {
  std::vector<LayerWeights> layers;  // indexed like ModelSpec::layers
};

enum class StageKind { ConvPack, RepackConv, Merge, Square, Linear };

/// One executable stage of the lowered program.  Linear stages carry the
/// indices of the fused layers; matrices are composed from the weights at
/// execution time.
struct Stage {
  StageKind kind;
  std::string label;
  std::vector<std::size_t> layer_idx;
  Eigen::Index groups = 1;          // Merge target / Linear group count
  KernelPolicy policy = KernelPolicy::HS;  // Linear stages
};

struct LoweredProgram {
  ModelSpec model;
  std::vector<Stage> stages;
};

struct OpReport {
  std::vector<std::pair<std::string, OpTally>> rows;
  OpTally total;

  std::string to_csv() const;
};

struct ExecResult {
  Eigen::VectorXd logits;
  OpReport report;
};

/// Replace maximal runs of linear layers between activations with single
/// fused stages.  Stage boundaries additionally fall before any layer with
/// an explicit ConvPack policy, which always stands alone.  Throws a
/// diagnostic naming the offending stage on a capacity violation.
LoweredProgram lower(const ModelSpec& model);

ExecResult execute(const LoweredProgram& program, const ModelWeights& weights,
                   const Tensor3& input, MeterContext& ctx);

/// Plaintext reference forward pass over the unfused layer list; the
/// canonical oracle for execute().
Eigen::VectorXd ref_forward(const ModelSpec& model, const ModelWeights& weights,
                            const Tensor3& input);

ModelWeights random_weights(const ModelSpec& model, std::uint64_t seed);
Tensor3 random_input(const ModelSpec& model, std::uint64_t seed);

ModelSpec builtin_cryptonets_hs();
ModelSpec builtin_me();
ModelSpec builtin_ce();
/// nullopt if the name is not a builtin.
std::optional<ModelSpec> builtin_model(const std::string& name);

/// Reference operation counts for the original LoLa-MNIST pipeline, kept as
/// published constants (not reproduced by execution).
OpReport lola_mnist_reference();

}  // namespace hesim
