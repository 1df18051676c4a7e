#include <benchmark/benchmark.h>

#include "collusion/dataio.hpp"
#include "collusion/experiments.hpp"
#include "collusion/models.hpp"
#include "collusion/synth.hpp"
#include "collusion/training.hpp"

namespace {

using namespace collusion;

BidTable bench_table() {
    SynthConfig cfg;
    cfg.n_tenders = 200;
    return generate_synthetic(cfg);
}

void BM_Screens(benchmark::State& state) {
    const BidTable table = bench_table();
    for (auto _ : state) benchmark::DoNotOptimize(screens_by_tender(table));
}
BENCHMARK(BM_Screens);

void BM_BuildGraph(benchmark::State& state) {
    const BidTable table = bench_table();
    const std::set<RelationKind> rels = {RelationKind::Tender, RelationKind::Competitor};
    for (auto _ : state) benchmark::DoNotOptimize(build_graph(table, rels));
}
BENCHMARK(BM_BuildGraph);

void BM_SpMM(benchmark::State& state) {
    const BidTable table = bench_table();
    const RelationalGraph g = build_graph(table, {RelationKind::Tender});
    Matrix h(g.node_count, static_cast<std::size_t>(state.range(0)));
    Rng rng(7);
    for (double& v : h.raw()) v = rng.normal(0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(g.relations[0].normalized.multiply(h));
}
BENCHMARK(BM_SpMM)->Arg(16)->Arg(32);

void BM_TrainEpochs(benchmark::State& state) {
    const BidTable table = bench_table();
    const FeatureMatrix raw = assemble_features(table, screens_by_tender(table));
    std::vector<std::size_t> rows(table.records.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const FeatureMatrix norm = minmax_normalize(raw, rows);
    std::vector<int> labels;
    for (const BidRecord& r : table.records) labels.push_back(r.label);
    const RelationalGraph g =
        build_graph(table, {RelationKind::Tender, RelationKind::Competitor});

    ModelSpec spec;
    spec.kind = ModelKind::RGCN;
    spec.input_dim = norm.matrix.cols();
    spec.relations = {RelationKind::Tender, RelationKind::Competitor};
    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    const SplitAssignment split = company_split(table, 1);

    for (auto _ : state) {
        TrainResult tr = train_model(init_params(spec, 1), norm.matrix, labels, &g, cfg,
                                     split.train_rows, split.val_rows, 1);
        benchmark::DoNotOptimize(tr);
    }
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
