#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "collusion/dataio.hpp"
#include "collusion/graph.hpp"
#include "collusion/metrics.hpp"
#include "collusion/models.hpp"
#include "collusion/training.hpp"

namespace collusion {

// Relations whose identifier columns the table actually carries.
std::set<RelationKind> available_relations(const BidTable& table);

struct PhaseOptions {
    std::size_t runs = 10;
    std::uint64_t base_seed = 1;
    std::size_t max_epochs = 500;
    // When set, per-run checkpoints and training/ROC/PR curve files are
    // written under this directory.
    std::optional<std::string> out_dir;
    // Normalization scope switch: fit min-max on the full dataset instead of
    // the training rows.
    bool normalize_on_full = false;
    // Parallel run execution; aggregates are identical either way.
    bool parallel = true;
};

struct RunRecord {
    std::map<std::string, double> metrics;
    TrainConfig best_config;
    std::size_t best_epoch = 0;
    bool failed = false;
    std::string failure;
    bool all_negative = false;  // predicted everything non-collusive
};

struct PhaseIResult {
    std::string dataset_name;
    ModelKind kind;
    RunAggregate aggregate;
    std::vector<RunRecord> runs;
    std::vector<std::string> checkpoint_paths;  // one per successful run
};

struct PhaseIIResult {
    std::string source_dataset;
    std::string target_dataset;
    ModelKind kind;
    RunAggregate aggregate;
    std::vector<RunRecord> runs;
    bool all_negative = false;  // every checkpoint predicted all-negative
};

// Per run: fresh company split, grid search over train+val, final training
// on the combined train+val rows (early stopping still watching the val
// portion), evaluation on the test rows.
PhaseIResult run_phase1(const BidTable& table, ModelKind kind,
                        const std::set<RelationKind>& relations, const PhaseOptions& opts);

// Zero-shot evaluation of saved checkpoints on a complete foreign dataset.
// Features are normalized on the full target table; the target graph uses
// the intersection of the model's relations and the target's available
// relations. Throws ConfigError when the intersection is empty.
PhaseIIResult run_phase2(const std::vector<std::string>& checkpoint_paths,
                         const BidTable& target, const std::string& source_name);

// results.csv (dataset,model,metric,mean,sd,n) plus a Mean (SD) text table
// with a winner marker per dataset/metric pair and the all-negative dagger.
void render_report(const std::vector<PhaseIResult>& phase1,
                   const std::vector<PhaseIIResult>& phase2, const std::string& out_dir);

}  // namespace collusion
