#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "collusion/dataio.hpp"
#include "collusion/graph.hpp"
#include "collusion/models.hpp"
#include "collusion/tape.hpp"

namespace collusion {

// Inverse-frequency class weights from training-portion labels only.
struct ClassWeights {
    double collusion = 1.0;
    double non_collusion = 1.0;
};

ClassWeights class_weights(const std::vector<int>& training_labels);

// Mean weighted cross-entropy over the masked rows, built on the tape so
// gradients flow back through the softmax. labels has one entry per logits
// row; mask_rows selects the rows entering the loss.
NodeId weighted_ce_node(Tape& tape, NodeId logits, const std::vector<int>& labels,
                        const std::vector<std::size_t>& mask_rows, const ClassWeights& w);

// Plain evaluation path over positive-class probabilities (already masked).
double weighted_ce(const std::vector<double>& pos_probs, const std::vector<int>& labels,
                   const ClassWeights& w);

enum class Partition { Train, Val, Test };

struct SplitAssignment {
    std::map<std::string, Partition> by_company;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> val_rows;
    std::vector<std::size_t> test_rows;
};

// Company-level 60/20/20 split, stratified by the company-level collusive
// flag (any bid labeled 1). Rounding goes toward the training share.
// Throws DataError when either class has fewer than 5 companies.
SplitAssignment company_split(const BidTable& table, std::uint64_t seed);

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-3;
    std::size_t hidden_units = 16;
    std::size_t max_epochs = 500;
    std::size_t patience = 30;
    std::size_t folds = 3;
};

// The 2 x 2 x 2 hyperparameter grid, enumerated in tie-break priority order
// (learning rate, then weight decay, then hidden units, ascending).
std::vector<TrainConfig> grid_configs(std::size_t max_epochs = 500);

struct TrainCurvePoint {
    std::size_t epoch;
    double train_loss;
    double val_f1;
};

struct TrainResult {
    ModelParams params;       // from the best-validation-F1 epoch
    std::size_t best_epoch = 0;
    double best_val_f1 = 0.0;
    std::vector<TrainCurvePoint> curve;
    bool failed = false;
    std::string failure;
};

// Full-batch training with AdamW (decoupled weight decay), early stopping on
// validation F1 with the configured patience, best-epoch restoration.
// Divergence marks the result failed instead of throwing.
TrainResult train_model(ModelParams params, const Matrix& x, const std::vector<int>& labels,
                        const RelationalGraph* graph, const TrainConfig& cfg,
                        const std::vector<std::size_t>& train_rows,
                        const std::vector<std::size_t>& val_rows, std::uint64_t seed);

struct GridOutcome {
    TrainConfig best;
    std::vector<double> scores;  // mean fold F1 per config, -inf for all-failed
};

// Three-fold company-level CV over the train+val companies; each fold fits
// its own feature normalization and class weights on the fold-train rows.
GridOutcome grid_search(const BidTable& table, const FeatureMatrix& raw_features,
                        const RelationalGraph* graph, const ModelSpec& spec,
                        const SplitAssignment& split, std::size_t max_epochs,
                        std::uint64_t seed);

// F1 at threshold 0.5 over the given rows.
double f1_on_rows(const ModelParams& params, const RelationalGraph* graph, const Matrix& x,
                  const std::vector<int>& labels, const std::vector<std::size_t>& rows);

std::vector<double> positive_probs(const ModelParams& params, const RelationalGraph* graph,
                                   const Matrix& x, const std::vector<std::size_t>& rows);

}  // namespace collusion
