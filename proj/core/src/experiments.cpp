#include "collusion/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "collusion/errors.hpp"

namespace collusion {

std::set<RelationKind> available_relations(const BidTable& table) {
    std::set<RelationKind> out = {RelationKind::Tender, RelationKind::Competitor};
    if (table.has_location()) out.insert(RelationKind::Location);
    if (table.has_site()) out.insert(RelationKind::Site);
    return out;
}

namespace {

const std::vector<std::string> kMetricNames = {"f1", "balanced_accuracy", "precision",
                                               "recall", "roc_auc", "pr_auc"};

std::map<std::string, double> evaluate(const std::vector<double>& scores,
                                       const std::vector<int>& labels, bool dagger_convention,
                                       bool* all_negative) {
    const Confusion conf = confusion_from(scores, labels);
    ThresholdMetrics tm = threshold_metrics(conf);
    const bool predicted_all_negative = (conf.tp + conf.fp == 0);
    if (all_negative) *all_negative = predicted_all_negative;
    if (dagger_convention && predicted_all_negative) tm.precision = 1.0;

    std::map<std::string, double> m;
    m["f1"] = tm.f1;
    m["balanced_accuracy"] = tm.balanced_accuracy;
    m["precision"] = tm.precision;
    m["recall"] = tm.recall;
    bool roc_ok = false, pr_ok = false;
    const double roc = roc_auc(scores, labels, &roc_ok);
    const double pr = pr_auc(scores, labels, &pr_ok);
    if (roc_ok) m["roc_auc"] = roc;
    if (pr_ok) m["pr_auc"] = pr;
    return m;
}

void write_curves(const std::string& stem, const TrainResult& tr,
                  const std::vector<double>& scores, const std::vector<int>& labels) {
    {
        std::ofstream out(stem + "_train.csv");
        out << "epoch,train_loss,val_f1\n";
        for (const TrainCurvePoint& p : tr.curve)
            out << p.epoch << ',' << p.train_loss << ',' << p.val_f1 << '\n';
    }
    {
        std::ofstream out(stem + "_roc.csv");
        out << "threshold,fpr,tpr\n";
        for (const CurvePoint& p : roc_curve(scores, labels))
            out << p.threshold << ',' << p.x << ',' << p.y << '\n';
    }
    {
        std::ofstream out(stem + "_pr.csv");
        out << "threshold,recall,precision\n";
        for (const CurvePoint& p : pr_curve(scores, labels))
            out << p.threshold << ',' << p.x << ',' << p.y << '\n';
    }
}

struct Phase1RunOutput {
    RunRecord record;
    TrainResult train;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
    ModelParams params;
};

Phase1RunOutput phase1_single_run(const BidTable& table, const FeatureMatrix& raw,
                                  const RelationalGraph* graph, const ModelSpec& base_spec,
                                  const PhaseOptions& opts, std::size_t run_index) {
    const std::uint64_t seed = opts.base_seed + run_index;
    Phase1RunOutput out;
    try {
        const SplitAssignment split = company_split(table, seed);
        GridOutcome grid = grid_search(table, raw, graph, base_spec, split, opts.max_epochs, seed);
        out.record.best_config = grid.best;

        std::vector<std::size_t> combined = split.train_rows;
        combined.insert(combined.end(), split.val_rows.begin(), split.val_rows.end());
        std::sort(combined.begin(), combined.end());

        std::vector<std::size_t> all_rows(table.records.size());
        for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
        const FeatureMatrix norm =
            minmax_normalize(raw, opts.normalize_on_full ? all_rows : combined);

        std::vector<int> labels;
        for (const BidRecord& r : table.records) labels.push_back(r.label);

        ModelSpec spec = base_spec;
        spec.hidden_units = grid.best.hidden_units;
        out.train = train_model(init_params(spec, seed), norm.matrix, labels, graph, grid.best,
                                combined, split.val_rows, seed);
        if (out.train.failed) {
            out.record.failed = true;
            out.record.failure = out.train.failure;
            return out;
        }
        out.record.best_epoch = out.train.best_epoch;
        out.params = out.train.params;

        out.test_scores = positive_probs(out.train.params, graph, norm.matrix, split.test_rows);
        for (std::size_t r : split.test_rows) out.test_labels.push_back(labels[r]);
        out.record.metrics = evaluate(out.test_scores, out.test_labels,
                                      /*dagger_convention=*/false, &out.record.all_negative);
    } catch (const std::exception& e) {
        out.record.failed = true;
        out.record.failure = e.what();
    }
    return out;
}

}  // namespace

PhaseIResult run_phase1(const BidTable& table, ModelKind kind,
                        const std::set<RelationKind>& relations, const PhaseOptions& opts) {
    PhaseIResult result;
    result.dataset_name = table.dataset_name;
    result.kind = kind;

    const FeatureMatrix raw = assemble_features(table, screens_by_tender(table));

    RelationalGraph graph;
    const RelationalGraph* graph_ptr = nullptr;
    ModelSpec spec;
    spec.kind = kind;
    spec.input_dim = raw.matrix.cols();
    if (kind == ModelKind::RGCN) {
        std::set<RelationKind> active;
        const std::set<RelationKind> avail = available_relations(table);
        for (RelationKind r : relations)
            if (avail.count(r)) active.insert(r);
        if (active.empty()) throw ConfigError("no requested relation is available in the dataset");
        graph = build_graph(table, active);
        graph_ptr = &graph;
        spec.relations.assign(active.begin(), active.end());
    }

    std::vector<Phase1RunOutput> outputs(opts.runs);
    if (opts.parallel) {
        std::vector<std::future<Phase1RunOutput>> futures;
        for (std::size_t r = 0; r < opts.runs; ++r)
            futures.push_back(std::async(std::launch::async, phase1_single_run, std::cref(table),
                                         std::cref(raw), graph_ptr, spec, std::cref(opts), r));
        for (std::size_t r = 0; r < opts.runs; ++r) outputs[r] = futures[r].get();
    } else {
        for (std::size_t r = 0; r < opts.runs; ++r)
            outputs[r] = phase1_single_run(table, raw, graph_ptr, spec, opts, r);
    }

    std::vector<std::map<std::string, double>> run_metrics;
    for (std::size_t r = 0; r < opts.runs; ++r) {
        Phase1RunOutput& out = outputs[r];
        result.runs.push_back(out.record);
        if (out.record.failed) continue;
        run_metrics.push_back(out.record.metrics);
        if (opts.out_dir) {
            std::filesystem::create_directories(*opts.out_dir);
            const std::string stem = *opts.out_dir + "/" + result.dataset_name + "_" +
                                     model_kind_name(kind) + "_run" + std::to_string(r);
            const std::string ckpt = stem + ".model";
            save_checkpoint(out.params, ckpt);
            result.checkpoint_paths.push_back(ckpt);
            write_curves(stem, out.train, out.test_scores, out.test_labels);
        }
    }
    result.aggregate = aggregate_runs(run_metrics, opts.runs);
    return result;
}

PhaseIIResult run_phase2(const std::vector<std::string>& checkpoint_paths, const BidTable& target,
                         const std::string& source_name) {
    if (checkpoint_paths.empty()) throw ContractError("run_phase2: no checkpoints");
    if (source_name == target.dataset_name)
        throw ContractError("run_phase2: source and target datasets must differ");

    PhaseIIResult result;
    result.source_dataset = source_name;
    result.target_dataset = target.dataset_name;

    // Zero-shot rule: features normalized on the full foreign dataset.
    const FeatureMatrix raw = assemble_features(target, screens_by_tender(target));
    std::vector<std::size_t> all_rows(target.records.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    const FeatureMatrix norm = minmax_normalize(raw, all_rows);

    std::vector<int> labels;
    for (const BidRecord& r : target.records) labels.push_back(r.label);

    RelationalGraph graph;
    bool graph_built = false;

    std::vector<std::map<std::string, double>> run_metrics;
    std::size_t negative_count = 0;
    for (const std::string& path : checkpoint_paths) {
        const ModelParams params = load_checkpoint(path);
        result.kind = params.kind;
        const RelationalGraph* graph_ptr = nullptr;
        if (params.kind == ModelKind::RGCN) {
            if (!graph_built) {
                std::set<RelationKind> active;
                const std::set<RelationKind> avail = available_relations(target);
                for (RelationKind r : params.relations)
                    if (avail.count(r)) active.insert(r);
                if (active.empty())
                    throw ConfigError(
                        "run_phase2: no relation shared between the model and the target dataset");
                graph = build_graph(target, active);
                graph_built = true;
            }
            graph_ptr = &graph;
        }
        RunRecord rec;
        const std::vector<double> scores = positive_probs(params, graph_ptr, norm.matrix, all_rows);
        rec.metrics = evaluate(scores, labels, /*dagger_convention=*/true, &rec.all_negative);
        negative_count += rec.all_negative;
        run_metrics.push_back(rec.metrics);
        result.runs.push_back(std::move(rec));
    }
    result.all_negative = (negative_count == checkpoint_paths.size());
    result.aggregate = aggregate_runs(run_metrics, checkpoint_paths.size());
    return result;
}

namespace {

std::string fmt_cell(const RunAggregate& agg, const std::string& metric, bool winner,
                     bool dagger) {
    auto it = agg.metrics.find(metric);
    if (it == agg.metrics.end() || it->second.n == 0) return "—";  // em dash
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << it->second.mean << " (" << it->second.sd << ")";
    if (dagger && (metric == "precision" || metric == "recall")) ss << "†";  // dagger
    if (winner) ss << "*";
    return ss.str();
}

double mean_or_nan(const RunAggregate& agg, const std::string& metric) {
    auto it = agg.metrics.find(metric);
    return it == agg.metrics.end() ? std::nan("") : it->second.mean;
}

}  // namespace

void render_report(const std::vector<PhaseIResult>& phase1,
                   const std::vector<PhaseIIResult>& phase2, const std::string& out_dir) {
    if (phase1.empty() && phase2.empty()) throw ContractError("render_report: no results");
    std::filesystem::create_directories(out_dir);

    std::ofstream csv(out_dir + "/results.csv");
    csv << "phase,dataset,source,model,metric,mean,sd,n\n";
    for (const PhaseIResult& r : phase1)
        for (const auto& [name, m] : r.aggregate.metrics)
            csv << "1," << r.dataset_name << ",," << model_kind_name(r.kind) << ',' << name << ','
                << m.mean << ',' << m.sd << ',' << m.n << '\n';
    for (const PhaseIIResult& r : phase2)
        for (const auto& [name, m] : r.aggregate.metrics)
            csv << "2," << r.target_dataset << ',' << r.source_dataset << ','
                << model_kind_name(r.kind) << ',' << name << ',' << m.mean << ',' << m.sd << ','
                << m.n << '\n';

    std::ofstream txt(out_dir + "/report.txt");
    txt << "Mean (SD) per metric; * marks the higher mean of an NN/GNN pair;\n"
        << "† marks precision/recall of an all-negative classifier.\n\n";

    // Pair NN and GNN results per dataset when both are present.
    auto emit_pair = [&](const std::string& title, const RunAggregate* nn, bool nn_dagger,
                         const RunAggregate* gnn, bool gnn_dagger) {
        txt << "== " << title << " ==\n";
        txt << std::left << std::setw(20) << "Metric" << std::setw(16) << "NN" << "GNN\n";
        for (const std::string& metric : kMetricNames) {
            const double a = nn ? mean_or_nan(*nn, metric) : std::nan("");
            const double b = gnn ? mean_or_nan(*gnn, metric) : std::nan("");
            const bool nn_wins = !std::isnan(a) && (std::isnan(b) || a > b);
            const bool gnn_wins = !std::isnan(b) && (std::isnan(a) || b > a);
            txt << std::setw(20) << metric << std::setw(16)
                << (nn ? fmt_cell(*nn, metric, nn_wins && gnn, nn_dagger) : "—")
                << (gnn ? fmt_cell(*gnn, metric, gnn_wins && nn, gnn_dagger) : "—") << '\n';
        }
        txt << '\n';
    };

    std::set<std::string> seen;
    for (const PhaseIResult& r : phase1) {
        if (!seen.insert(r.dataset_name).second) continue;
        const RunAggregate* nn = nullptr;
        const RunAggregate* gnn = nullptr;
        for (const PhaseIResult& o : phase1)
            if (o.dataset_name == r.dataset_name)
                (o.kind == ModelKind::FFN ? nn : gnn) = &o.aggregate;
        emit_pair("Phase I: " + r.dataset_name, nn, false, gnn, false);
    }
    seen.clear();
    for (const PhaseIIResult& r : phase2) {
        const std::string key = r.source_dataset + "->" + r.target_dataset;
        if (!seen.insert(key).second) continue;
        const RunAggregate* nn = nullptr;
        const RunAggregate* gnn = nullptr;
        bool nn_dagger = false, gnn_dagger = false;
        for (const PhaseIIResult& o : phase2)
            if (o.source_dataset == r.source_dataset && o.target_dataset == r.target_dataset) {
                (o.kind == ModelKind::FFN ? nn : gnn) = &o.aggregate;
                (o.kind == ModelKind::FFN ? nn_dagger : gnn_dagger) = o.all_negative;
            }
        emit_pair("Phase II: " + key, nn, nn_dagger, gnn, gnn_dagger);
    }
}

}  // namespace collusion
