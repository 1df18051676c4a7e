#include "collusion/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "collusion/errors.hpp"
#include "collusion/metrics.hpp"

namespace collusion {

ClassWeights class_weights(const std::vector<int>& labels) {
    std::size_t n_coll = 0, n_non = 0;
    for (int y : labels) (y == 1 ? n_coll : n_non)++;
    if (n_coll == 0 || n_non == 0)
        throw ContractError("class_weights: both classes must be present in the training rows");
    return {1.0 / static_cast<double>(n_coll), 1.0 / static_cast<double>(n_non)};
}

NodeId weighted_ce_node(Tape& tape, NodeId logits, const std::vector<int>& labels,
                        const std::vector<std::size_t>& mask_rows, const ClassWeights& w) {
    if (mask_rows.empty()) throw ContractError("weighted_ce_node: empty mask");
    const Matrix& lv = tape.value(logits);
    if (lv.cols() != 2) throw DimensionError("weighted_ce_node: logits must be m x 2");
    // Coefficients carry the negated class weight and the masked-mean factor;
    // loss = sum(C .* log(softmax(logits))).
    Matrix coeff(lv.rows(), 2);
    const double inv_n = 1.0 / static_cast<double>(mask_rows.size());
    for (std::size_t r : mask_rows) {
        const int y = labels[r];
        coeff(r, y) = -(y == 1 ? w.collusion : w.non_collusion) * inv_n;
    }
    NodeId probs = tape.softmax_rows(logits);
    return tape.sum(tape.hadamard(tape.constant(std::move(coeff)), tape.log(probs)));
}

double weighted_ce(const std::vector<double>& pos_probs, const std::vector<int>& labels,
                   const ClassWeights& w) {
    if (pos_probs.empty()) throw ContractError("weighted_ce: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < pos_probs.size(); ++i) {
        const double p = std::clamp(pos_probs[i], kLogClamp, 1.0 - kLogClamp);
        total += labels[i] == 1 ? -w.collusion * std::log(p)
                                : -w.non_collusion * std::log(1.0 - p);
    }
    return total / static_cast<double>(pos_probs.size());
}

namespace {

struct CompanyClass {
    std::vector<std::string> collusive;
    std::vector<std::string> clean;
};

CompanyClass classify_companies(const BidTable& table) {
    std::map<std::string, bool> flag;
    for (const BidRecord& r : table.records) flag[r.company_id] |= (r.label == 1);
    CompanyClass cc;
    for (const auto& [company, collusive] : flag)
        (collusive ? cc.collusive : cc.clean).push_back(company);
    return cc;
}

}  // namespace

SplitAssignment company_split(const BidTable& table, std::uint64_t seed) {
    CompanyClass cc = classify_companies(table);
    if (cc.collusive.size() < 5 || cc.clean.size() < 5)
        throw DataError("company_split: need at least 5 companies per class (have " +
                        std::to_string(cc.collusive.size()) + " collusive, " +
                        std::to_string(cc.clean.size()) +
                        " non-collusive); consider fewer folds or more data");

    Rng rng(seed);
    SplitAssignment split;
    for (std::vector<std::string>* group : {&cc.collusive, &cc.clean}) {
        std::shuffle(group->begin(), group->end(), rng.engine());
        const std::size_t n = group->size();
        const std::size_t n_val = n / 5;   // floor(0.2 n); remainder goes to train
        const std::size_t n_test = n / 5;
        for (std::size_t i = 0; i < n; ++i) {
            Partition p = Partition::Train;
            if (i < n_val)
                p = Partition::Val;
            else if (i < n_val + n_test)
                p = Partition::Test;
            split.by_company[(*group)[i]] = p;
        }
    }
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        switch (split.by_company.at(table.records[i].company_id)) {
            case Partition::Train: split.train_rows.push_back(i); break;
            case Partition::Val: split.val_rows.push_back(i); break;
            case Partition::Test: split.test_rows.push_back(i); break;
        }
    }
    return split;
}

std::vector<TrainConfig> grid_configs(std::size_t max_epochs) {
    std::vector<TrainConfig> grid;
    for (double lr : {1e-3, 1e-2})
        for (double wd : {1e-3, 1e-2})
            for (std::size_t h : {std::size_t{16}, std::size_t{32}}) {
                TrainConfig c;
                c.learning_rate = lr;
                c.weight_decay = wd;
                c.hidden_units = h;
                c.max_epochs = max_epochs;
                grid.push_back(c);
            }
    return grid;
}

std::vector<double> positive_probs(const ModelParams& params, const RelationalGraph* graph,
                                   const Matrix& x, const std::vector<std::size_t>& rows) {
    const Matrix probs = predict_probs(params, graph, x);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(probs(r, 1));
    return out;
}

double f1_on_rows(const ModelParams& params, const RelationalGraph* graph, const Matrix& x,
                  const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
    const std::vector<double> scores = positive_probs(params, graph, x, rows);
    std::vector<int> ys;
    ys.reserve(rows.size());
    for (std::size_t r : rows) ys.push_back(labels[r]);
    return threshold_metrics(confusion_from(scores, ys)).f1;
}

namespace {

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t t = 0;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void adamw_step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                AdamState& state, double lr, double wd) {
    if (state.m.empty()) {
        for (const Matrix* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& w = *params[i];
        const Matrix& g = *grads[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            double& mj = state.m[i].raw()[j];
            double& vj = state.v[i].raw()[j];
            const double gj = g.raw()[j];
            mj = kBeta1 * mj + (1.0 - kBeta1) * gj;
            vj = kBeta2 * vj + (1.0 - kBeta2) * gj * gj;
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            w.raw()[j] -= lr * (mhat / (std::sqrt(vhat) + kEps) + wd * w.raw()[j]);
        }
    }
}

}  // namespace

TrainResult train_model(ModelParams params, const Matrix& x, const std::vector<int>& labels,
                        const RelationalGraph* graph, const TrainConfig& cfg,
                        const std::vector<std::size_t>& train_rows,
                        const std::vector<std::size_t>& val_rows, std::uint64_t seed) {
    if (train_rows.empty() || val_rows.empty())
        throw ContractError("train_model: train and val masks must be non-empty");

    std::vector<int> train_labels;
    for (std::size_t r : train_rows) train_labels.push_back(labels[r]);
    const ClassWeights weights = class_weights(train_labels);

    Rng dropout_rng(seed);
    AdamState adam;
    TrainResult result;
    result.params = params;

    double best_f1 = -1.0;
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Tape tape;
        ForwardPlan plan = model_forward(tape, params, graph, x, /*training=*/true, dropout_rng);
        NodeId loss = weighted_ce_node(tape, plan.logits, labels, train_rows, weights);
        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            result.failed = true;
            result.failure = "loss diverged at epoch " + std::to_string(epoch);
            return result;
        }
        tape.backward(loss);

        std::vector<Matrix*> refs = parameter_refs(params);
        std::vector<const Matrix*> grads;
        grads.reserve(plan.params.size());
        for (NodeId id : plan.params) grads.push_back(&tape.grad(id));
        adamw_step(refs, grads, adam, cfg.learning_rate, cfg.weight_decay);

        const double val_f1 = f1_on_rows(params, graph, x, labels, val_rows);
        result.curve.push_back({epoch, loss_value, val_f1});

        if (val_f1 > best_f1) {
            best_f1 = val_f1;
            result.best_epoch = epoch;
            result.params = params;
            since_improvement = 0;
        } else if (++since_improvement >= cfg.patience) {
            break;
        }
    }
    result.best_val_f1 = best_f1;
    return result;
}

GridOutcome grid_search(const BidTable& table, const FeatureMatrix& raw_features,
                        const RelationalGraph* graph, const ModelSpec& spec,
                        const SplitAssignment& split, std::size_t max_epochs,
                        std::uint64_t seed) {
    // Stratified 3-fold assignment at company level over train+val companies.
    CompanyClass cc = classify_companies(table);
    std::map<std::string, std::size_t> fold_of;
    Rng rng(seed);
    const std::size_t folds = TrainConfig{}.folds;
    for (std::vector<std::string>* group : {&cc.collusive, &cc.clean}) {
        std::vector<std::string> pool;
        for (const std::string& c : *group)
            if (split.by_company.at(c) != Partition::Test) pool.push_back(c);
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        for (std::size_t i = 0; i < pool.size(); ++i) fold_of[pool[i]] = i % folds;
    }

    std::vector<std::vector<std::size_t>> fold_rows(folds);
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        auto it = fold_of.find(table.records[i].company_id);
        if (it != fold_of.end()) fold_rows[it->second].push_back(i);
    }

    const std::vector<TrainConfig> grid = grid_configs(max_epochs);
    GridOutcome out;
    out.scores.assign(grid.size(), -std::numeric_limits<double>::infinity());

    std::vector<int> labels;
    for (const BidRecord& r : table.records) labels.push_back(r.label);

    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        double total = 0.0;
        std::size_t ok = 0;
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<std::size_t> cv_train;
            for (std::size_t g = 0; g < folds; ++g)
                if (g != f) cv_train.insert(cv_train.end(), fold_rows[g].begin(),
                                            fold_rows[g].end());
            const std::vector<std::size_t>& cv_val = fold_rows[f];
            if (cv_train.empty() || cv_val.empty()) continue;

            const FeatureMatrix norm = minmax_normalize(raw_features, cv_train);
            ModelSpec ms = spec;
            ms.hidden_units = grid[ci].hidden_units;
            const std::uint64_t job_seed = seed ^ (ci * folds + f + 1);
            ModelParams params = init_params(ms, job_seed);
            TrainResult tr = train_model(std::move(params), norm.matrix, labels, graph, grid[ci],
                                         cv_train, cv_val, job_seed);
            if (tr.failed) continue;
            total += tr.best_val_f1;
            ++ok;
        }
        if (ok > 0) out.scores[ci] = total / static_cast<double>(ok);
    }

    std::size_t best = grid.size();
    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        if (!std::isfinite(out.scores[ci])) continue;
        if (best == grid.size() || out.scores[ci] > out.scores[best]) best = ci;
    }
    if (best == grid.size()) throw RunError("grid_search: every configuration failed");
    out.best = grid[best];
    return out;
}

}  // namespace collusion
