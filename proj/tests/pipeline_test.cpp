#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "collusion/errors.hpp"
#include "collusion/experiments.hpp"
#include "collusion/synth.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace collusion;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

// Small but split-feasible generator setup: 6 peer groups of 5, enough
// rigged tenders that all five cartel members carry labels.
SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_tenders = 60;
    cfg.n_companies = 30;
    cfg.cartel_size = 5;
    cfg.min_bidders = 3;
    cfg.max_bidders = 5;
    return cfg;
}

PhaseOptions quick_options(std::size_t runs = 2) {
    PhaseOptions opts;
    opts.runs = runs;
    opts.max_epochs = 15;
    opts.parallel = false;
    return opts;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool identical_tables(const BidTable& a, const BidTable& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const BidRecord &x = a.records[i], &y = b.records[i];
        if (x.tender_id != y.tender_id || x.company_id != y.company_id ||
            x.bid_value != y.bid_value || x.label != y.label || x.winner != y.winner ||
            x.location_id != y.location_id || x.site_id != y.site_id || x.date != y.date)
            return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("generate_synthetic") {
    TEST_CASE("fixed seed reproduces the table bit-identically") {
        SynthConfig cfg = small_config();
        CHECK(identical_tables(generate_synthetic(cfg), generate_synthetic(cfg)));
    }

    TEST_CASE("infeasible configs are rejected") {
        SynthConfig cfg;
        cfg.cartel_size = cfg.n_companies + 1;
        CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
        cfg = SynthConfig{};
        cfg.shrink = 0.0;
        CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
        cfg = SynthConfig{};
        cfg.cartel_size = cfg.n_companies;  // a single peer group cannot host outsiders
        CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
        cfg = SynthConfig{};
        cfg.participation_rate = 1.5;
        CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    }

    TEST_CASE("labels mark exactly cartel members inside rigged tenders") {
        BidTable t = generate_synthetic(small_config());
        const std::size_t cartel = small_config().cartel_size;
        std::map<std::string, bool> tender_rigged;
        for (const BidRecord& r : t.records)
            tender_rigged[r.tender_id] = tender_rigged[r.tender_id] || r.label == 1;
        std::size_t labeled = 0;
        for (const BidRecord& r : t.records) {
            if (r.label == 1) {
                ++labeled;
                // Cartel companies are C0..C{cartel-1} (peer group 0).
                const std::size_t id = std::stoul(r.company_id.substr(1));
                CHECK(id < cartel);
            }
            if (tender_rigged.at(r.tender_id)) {
                // In a rigged tender every cartel bid is labeled.
                const std::size_t id = std::stoul(r.company_id.substr(1));
                if (id < cartel) CHECK(r.label == 1);
            }
        }
        CHECK(labeled > 0);
    }

    TEST_CASE("rigged tenders compress the bid spread") {
        BidTable t = generate_synthetic(SynthConfig{});
        std::map<std::string, bool> rigged;
        for (const BidRecord& r : t.records)
            rigged[r.tender_id] = rigged[r.tender_id] || r.label == 1;
        auto screens = screens_by_tender(t);
        double cv_rigged = 0, cv_comp = 0;
        std::size_t n_rigged = 0, n_comp = 0;
        for (const auto& [tender, s] : screens) {
            if (rigged.at(tender)) {
                cv_rigged += s.cv;
                ++n_rigged;
            } else {
                cv_comp += s.cv;
                ++n_comp;
            }
        }
        REQUIRE(n_rigged > 0);
        REQUIRE(n_comp > 0);
        CHECK(cv_rigged / n_rigged < cv_comp / n_comp);
    }

    TEST_CASE("all four relation identifiers are emitted") {
        BidTable t = generate_synthetic(small_config());
        CHECK(available_relations(t) ==
              std::set<RelationKind>{RelationKind::Tender, RelationKind::Competitor,
                                     RelationKind::Location, RelationKind::Site});
        CHECK(t.has_dates());
    }
}

TEST_SUITE("run_phase1") {
    TEST_CASE("runs are recorded, checkpointed, and aggregated") {
        BidTable t = generate_synthetic(small_config());
        const fs::path dir = fs::temp_directory_path() / "phase1_out";
        fs::remove_all(dir);
        PhaseOptions opts = quick_options();
        opts.out_dir = dir.string();
        PhaseIResult res = run_phase1(t, ModelKind::FFN, {}, opts);
        CHECK(res.kind == ModelKind::FFN);
        CHECK(res.runs.size() == 2);
        CHECK(res.aggregate.runs_attempted == 2);
        for (const RunRecord& r : res.runs) {
            REQUIRE_FALSE(r.failed);
            CHECK(r.metrics.count("f1") == 1);
            CHECK(r.metrics.count("balanced_accuracy") == 1);
        }
        REQUIRE(res.checkpoint_paths.size() == 2);
        for (const std::string& p : res.checkpoint_paths) CHECK(fs::exists(p));
        // Curve files for run 0 exist alongside the checkpoints.
        CHECK(fs::exists(dir / "synthetic_nn_run0_train.csv"));
        CHECK(fs::exists(dir / "synthetic_nn_run0_roc.csv"));
        CHECK(fs::exists(dir / "synthetic_nn_run0_pr.csv"));
    }

    TEST_CASE("a fixed base seed reproduces aggregates bit-identically") {
        BidTable t = generate_synthetic(small_config());
        PhaseIResult a = run_phase1(t, ModelKind::FFN, {}, quick_options());
        PhaseIResult b = run_phase1(t, ModelKind::FFN, {}, quick_options());
        REQUIRE(a.aggregate.metrics.size() == b.aggregate.metrics.size());
        for (const auto& [name, ma] : a.aggregate.metrics) {
            CHECK(ma.mean == b.aggregate.metrics.at(name).mean);
            CHECK(ma.sd == b.aggregate.metrics.at(name).sd);
        }
    }

    TEST_CASE("an RGCN request without usable relations is a config error") {
        BidTable t = generate_synthetic(small_config());
        for (BidRecord& r : t.records) {
            r.location_id.reset();
            r.site_id.reset();
        }
        CHECK_THROWS_AS(run_phase1(t, ModelKind::RGCN, {RelationKind::Location},
                                   quick_options()),
                        ConfigError);
    }
}

TEST_SUITE("run_phase2") {
    TEST_CASE("an all-negative model scores precision one, recall zero, flagged") {
        BidTable target = generate_synthetic(small_config());
        // Zeroed FFN with a strongly negative positive-class bias predicts
        // everything as non-collusive.
        ModelSpec spec;
        ModelParams p = init_params(spec, 1);
        for (Matrix* m : parameter_refs(p)) std::fill(m->raw().begin(), m->raw().end(), 0.0);
        p.ffn[2].bias(0, 0) = 10.0;
        p.ffn[2].bias(0, 1) = -10.0;
        const fs::path c1 = fs::temp_directory_path() / "allneg_1.model";
        const fs::path c2 = fs::temp_directory_path() / "allneg_2.model";
        save_checkpoint(p, c1.string());
        save_checkpoint(p, c2.string());

        const std::string before = read_file(c1);
        PhaseIIResult res = run_phase2({c1.string(), c2.string()}, target, "elsewhere");
        CHECK(res.all_negative);
        CHECK(res.aggregate.metrics.at("precision").mean == doctest::Approx(1.0));
        CHECK(res.aggregate.metrics.at("recall").mean == doctest::Approx(0.0));
        // Evaluation never touches the checkpoint bytes.
        CHECK(read_file(c1) == before);
    }

    TEST_CASE("trained checkpoints transfer without failures") {
        BidTable source = generate_synthetic(small_config());
        SynthConfig target_cfg = small_config();
        target_cfg.seed = 2;
        BidTable target = generate_synthetic(target_cfg);
        PhaseOptions opts = quick_options();
        const fs::path dir = fs::temp_directory_path() / "phase2_src";
        fs::remove_all(dir);
        opts.out_dir = dir.string();
        PhaseIResult ph1 = run_phase1(source, ModelKind::RGCN,
                                      {RelationKind::Tender, RelationKind::Competitor}, opts);
        REQUIRE(ph1.checkpoint_paths.size() == 2);
        PhaseIIResult res = run_phase2(ph1.checkpoint_paths, target, "source");
        CHECK(res.runs.size() == 2);
        for (const RunRecord& r : res.runs) CHECK_FALSE(r.failed);
        CHECK(res.aggregate.metrics.count("f1") == 1);
    }

    TEST_CASE("source equal to target is rejected") {
        BidTable t = generate_synthetic(small_config());
        const fs::path c = fs::temp_directory_path() / "selftransfer.model";
        save_checkpoint(init_params(ModelSpec{}, 1), c.string());
        CHECK_THROWS_AS(run_phase2({c.string()}, t, t.dataset_name), ContractError);
        CHECK_THROWS_AS(run_phase2({}, t, "src"), ContractError);
    }

    TEST_CASE("no shared relation between model and target is a config error") {
        BidTable target = generate_synthetic(small_config());
        for (BidRecord& r : target.records) r.location_id.reset();
        ModelSpec spec;
        spec.kind = ModelKind::RGCN;
        spec.relations = {RelationKind::Location};
        const fs::path c = fs::temp_directory_path() / "locmodel.model";
        save_checkpoint(init_params(spec, 1), c.string());
        CHECK_THROWS_AS(run_phase2({c.string()}, target, "src"), ConfigError);
    }
}

TEST_SUITE("render_report") {
    RunAggregate fake_aggregate(double base) {
        std::vector<std::map<std::string, double>> runs;
        for (int i = 0; i < 2; ++i)
            runs.push_back({{"f1", base + 0.01 * i},
                            {"balanced_accuracy", base},
                            {"precision", base},
                            {"recall", base}});
        return aggregate_runs(runs);
    }

    TEST_CASE("two models with four metrics emit eight csv rows") {
        PhaseIResult nn, gnn;
        nn.dataset_name = gnn.dataset_name = "demo";
        nn.kind = ModelKind::FFN;
        gnn.kind = ModelKind::RGCN;
        nn.aggregate = fake_aggregate(0.4);
        gnn.aggregate = fake_aggregate(0.6);
        const fs::path dir = fs::temp_directory_path() / "report_out";
        fs::remove_all(dir);
        render_report({nn, gnn}, {}, dir.string());

        std::ifstream csv(dir / "results.csv");
        std::string line;
        std::getline(csv, line);  // header
        std::size_t rows = 0;
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 8);

        const std::string txt = read_file(dir / "report.txt");
        CHECK(txt.find("demo") != std::string::npos);
        CHECK(txt.find("*") != std::string::npos);  // winner marker
    }

    TEST_CASE("all-negative transfer rows carry the dagger, missing metrics a dash") {
        PhaseIIResult res;
        res.source_dataset = "src";
        res.target_dataset = "dst";
        res.kind = ModelKind::RGCN;
        res.all_negative = true;
        res.aggregate = aggregate_runs({{{"precision", 1.0}, {"recall", 0.0}, {"f1", 0.0},
                                         {"balanced_accuracy", 0.5}},
                                        {{"precision", 1.0}, {"recall", 0.0}, {"f1", 0.0},
                                         {"balanced_accuracy", 0.5}}});
        const fs::path dir = fs::temp_directory_path() / "report_dagger";
        fs::remove_all(dir);
        render_report({}, {res}, dir.string());
        const std::string txt = read_file(dir / "report.txt");
        CHECK(txt.find("†") != std::string::npos);  // dagger on precision/recall
        CHECK(txt.find("—") != std::string::npos);  // em dash for absent NN column
    }
}
