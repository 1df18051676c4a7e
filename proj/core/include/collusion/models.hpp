#pragma once

#include <optional>
#include <string>
#include <vector>

#include "collusion/graph.hpp"
#include "collusion/matrix.hpp"
#include "collusion/rng.hpp"
#include "collusion/tape.hpp"

namespace collusion {

enum class ModelKind { FFN, RGCN };
enum class DecompMode { Full, Basis, Diagonal };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct LayerSpec {
    std::size_t in_dim;
    std::size_t out_dim;
    double dropout_rate;
    bool relu;
};

// (Input, h), (h, h/2), (h/2, 2) with dropout 20/10/0 and relu on the two
// hidden layers.
std::vector<LayerSpec> three_layer_spec(std::size_t input_dim, std::size_t hidden_units,
                                        std::size_t n_classes = 2);

struct FfnLayer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
};

struct RgcnLayer {
    DecompMode mode = DecompMode::Full;
    // Full: one weight per relation.
    std::vector<Matrix> weights;            // [r] in x out
    // Basis: shared bases plus per-relation scalar coefficients.
    std::vector<Matrix> bases;              // [b] in x out
    std::vector<std::vector<Matrix>> coeffs;  // [r][b] 1 x 1
    // Diagonal: one vector per relation, in == out.
    std::vector<Matrix> diagonals;          // [r] 1 x dim
    Matrix bias;                            // 1 x out, applied after the relation sum
};

struct ModelParams {
    ModelKind kind = ModelKind::FFN;
    std::vector<LayerSpec> specs;
    std::vector<RelationKind> relations;  // RGCN only, fixed order
    std::vector<FfnLayer> ffn;
    std::vector<RgcnLayer> rgcn;

    std::size_t input_dim() const { return specs.front().in_dim; }
};

struct ModelSpec {
    ModelKind kind = ModelKind::FFN;
    std::size_t input_dim = 10;
    std::size_t hidden_units = 16;
    std::vector<RelationKind> relations;
    DecompMode mode = DecompMode::Full;
    std::size_t num_bases = 2;  // Basis mode only
};

// Glorot-uniform weights, zero biases, deterministic per seed.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

// Flat, deterministic view of every trainable matrix; order matches the
// leaf order produced by the forward builders.
std::vector<Matrix*> parameter_refs(ModelParams& params);
std::vector<const Matrix*> parameter_refs(const ModelParams& params);

struct ForwardPlan {
    NodeId logits;
    std::vector<NodeId> params;  // aligned with parameter_refs order
};

ForwardPlan ffn_forward(Tape& tape, const ModelParams& params, const Matrix& x, bool training,
                        Rng& rng);

// Per layer: sum over active relations of A_tilde^(r) H W^(r); relations in
// params but absent from the graph contribute zero.
ForwardPlan rgcn_forward(Tape& tape, const ModelParams& params, const RelationalGraph& graph,
                         const Matrix& x, bool training, Rng& rng);

ForwardPlan model_forward(Tape& tape, const ModelParams& params, const RelationalGraph* graph,
                          const Matrix& x, bool training, Rng& rng);

// Deterministic inference: softmax probabilities, m x 2.
Matrix predict_probs(const ModelParams& params, const RelationalGraph* graph, const Matrix& x);

// Checkpoint serialization; hexfloat text, byte-exact round trip.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace collusion
