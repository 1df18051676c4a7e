// Command-line front end for the collusion-detection pipeline.
//
// Subcommands: ingest, screens, graph-stats, synth, train, transfer, report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 run failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "collusion/errors.hpp"
#include "collusion/experiments.hpp"
#include "collusion/synth.hpp"

namespace {

using namespace collusion;

// Run configuration: plain key=value lines, '#' comments. Keys cover schema
// column mapping (schema.tender_id=...), generator fields (synth.markup_mean=...)
// and phase options (normalize_on_full=1).
std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

double to_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not numeric: " + it->second);
    }
}

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key,
                    std::size_t fallback) {
    const double v = to_double(kv, key, static_cast<double>(fallback));
    if (v < 0.0) throw ConfigError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

ColumnSchema schema_from(const std::map<std::string, std::string>& kv) {
    ColumnSchema s;
    // Canonical optional columns are bound by default; absent ones are skipped.
    s.winner = "Winner";
    s.location_id = "Location";
    s.site_id = "Site";
    s.date = "Date";
    auto pick = [&](const std::string& key, std::string& field) {
        auto it = kv.find("schema." + key);
        if (it != kv.end()) field = it->second;
    };
    pick("tender_id", s.tender_id);
    pick("company_id", s.company_id);
    pick("bid_value", s.bid_value);
    pick("label", s.label);
    pick("winner", s.winner);
    pick("location_id", s.location_id);
    pick("site_id", s.site_id);
    pick("date", s.date);
    pick("pte", s.pte);
    return s;
}

SynthConfig synth_from(const std::map<std::string, std::string>& kv, std::uint64_t seed) {
    SynthConfig c;
    c.n_tenders = to_size(kv, "synth.n_tenders", c.n_tenders);
    c.n_companies = to_size(kv, "synth.n_companies", c.n_companies);
    c.cartel_size = to_size(kv, "synth.cartel_size", c.cartel_size);
    c.participation_rate = to_double(kv, "synth.participation_rate", c.participation_rate);
    c.markup_mean = to_double(kv, "synth.markup_mean", c.markup_mean);
    c.markup_sd = to_double(kv, "synth.markup_sd", c.markup_sd);
    c.shrink = to_double(kv, "synth.shrink", c.shrink);
    c.base_dispersion = to_double(kv, "synth.base_dispersion", c.base_dispersion);
    c.min_bidders = to_size(kv, "synth.min_bidders", c.min_bidders);
    c.max_bidders = to_size(kv, "synth.max_bidders", c.max_bidders);
    c.n_locations = to_size(kv, "synth.n_locations", c.n_locations);
    c.n_sites = to_size(kv, "synth.n_sites", c.n_sites);
    c.seed = seed;
    return c;
}

std::set<RelationKind> parse_relations(const std::string& list, const BidTable& table) {
    std::set<RelationKind> out;
    if (list.empty() || list == "all") {
        out = available_relations(table);
    } else {
        std::stringstream ss(list);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty()) out.insert(relation_from_name(token));
    }
    return out;
}

std::string dataset_label(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

void print_aggregate(std::ostream& os, const std::string& label, const RunAggregate& agg) {
    os << label << " (" << agg.runs_attempted - agg.runs_failed << "/" << agg.runs_attempted
       << " runs ok)\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& [name, m] : agg.metrics)
        os << "  " << std::left << std::setw(18) << name << m.mean << " (" << m.sd << ")\n";
}

struct CommonArgs {
    std::string config_path;
    std::string dataset_path;
    std::string model = "rgcn";
    std::string relations;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_dataset) {
    cmd->add_option("--config", a.config_path, "key=value run configuration file");
    auto* ds = cmd->add_option("--dataset", a.dataset_path, "delimited bid table");
    if (needs_dataset) ds->required();
    cmd->add_option("--model", a.model, "classifier: nn or rgcn")
        ->check(CLI::IsMember({"nn", "rgcn"}));
    cmd->add_option("--relations", a.relations,
                    "comma list of tender,competitor,location,site (default: all available)");
    cmd->add_option("--runs", a.runs, "number of repeated runs");
    cmd->add_option("--seed", a.seed, "base seed");
    cmd->add_option("--out", a.out_dir, "output directory");
}

BidTable load_dataset(const CommonArgs& a, const std::map<std::string, std::string>& kv) {
    return load_bids(a.dataset_path, schema_from(kv), dataset_label(a.dataset_path));
}

PhaseOptions phase_options(const CommonArgs& a, const std::map<std::string, std::string>& kv) {
    PhaseOptions opts;
    opts.runs = a.runs;
    opts.base_seed = a.seed;
    opts.max_epochs = to_size(kv, "max_epochs", opts.max_epochs);
    opts.normalize_on_full = to_size(kv, "normalize_on_full", 0) != 0;
    opts.parallel = to_size(kv, "parallel", 1) != 0;
    if (!a.out_dir.empty()) opts.out_dir = a.out_dir;
    return opts;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Bid-rigging screening and graph-based collusion classification"};
    app.require_subcommand(1);

    CommonArgs ingest_a, screens_a, graph_a, synth_a, train_a, transfer_a, report_a;
    std::vector<std::string> checkpoints;
    std::string transfer_source = "source";

    auto* c_ingest = app.add_subcommand("ingest", "validate a bid table and print its stats");
    add_common(c_ingest, ingest_a, true);
    auto* c_screens = app.add_subcommand("screens", "per-tender screening statistics as CSV");
    add_common(c_screens, screens_a, true);
    auto* c_graph = app.add_subcommand("graph-stats", "relational graph summary");
    add_common(c_graph, graph_a, true);
    auto* c_synth = app.add_subcommand("synth", "write a synthetic planted-cartel bid table");
    add_common(c_synth, synth_a, false);
    auto* c_train = app.add_subcommand("train", "repeated split/grid-search/train/test runs");
    add_common(c_train, train_a, true);
    auto* c_transfer = app.add_subcommand("transfer",
                                          "zero-shot evaluation of saved models on a foreign table");
    add_common(c_transfer, transfer_a, true);
    c_transfer->add_option("--checkpoint", checkpoints, "model checkpoint (repeatable)")
        ->required();
    c_transfer->add_option("--source", transfer_source, "name of the source dataset");
    auto* c_report = app.add_subcommand("report",
                                        "run both models on a dataset and render the paired table");
    add_common(c_report, report_a, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 2;
    }

    if (c_ingest->parsed()) {
        const auto kv = ingest_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                     : load_config(ingest_a.config_path);
        const BidTable table = load_dataset(ingest_a, kv);
        const DatasetStats st = dataset_stats(table);
        std::cout << "dataset            " << table.dataset_name << '\n'
                  << "bids               " << st.bid_count << '\n'
                  << "tenders            " << st.tender_count << '\n'
                  << std::fixed << std::setprecision(2)
                  << "collusive_share    " << 100.0 * st.collusive_share << "%\n"
                  << "bids_per_tender    " << st.mean_bids_per_tender << '\n';
        std::cout << "relations         ";
        for (RelationKind r : available_relations(table)) std::cout << ' ' << relation_name(r);
        std::cout << '\n';
        return 0;
    }

    if (c_screens->parsed()) {
        const auto kv = screens_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                      : load_config(screens_a.config_path);
        const BidTable table = load_dataset(screens_a, kv);
        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!screens_a.out_dir.empty()) {
            std::filesystem::create_directories(screens_a.out_dir);
            file.open(screens_a.out_dir + "/screens.csv");
            os = &file;
        }
        *os << "tender,n,mean,sd,cv,spd,diffp,rd,kurt,skew,kstest,undefined\n";
        *os << std::setprecision(12);
        const auto by_tender = table.rows_by_tender();
        for (const std::string& tid : table.tender_ids()) {
            std::vector<double> bids;
            for (std::size_t i : by_tender.at(tid))
                bids.push_back(table.records[i].bid_value);
            const ScreenSet s = compute_screens(bids);
            std::string flags;
            if (s.cv_undefined) flags += "cv;";
            if (s.rd_undefined) flags += "rd;";
            if (s.kurt_undefined) flags += "kurt;";
            if (s.skew_undefined) flags += "skew;";
            if (s.kstest_undefined) flags += "kstest;";
            *os << tid << ',' << s.n << ',' << s.mean_bid << ',' << s.stddev << ',' << s.cv << ','
                << s.spd << ',' << s.diffp << ',' << s.rd << ',' << s.kurt << ',' << s.skew << ','
                << s.kstest << ',' << flags << '\n';
        }
        return 0;
    }

    if (c_graph->parsed()) {
        const auto kv = graph_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                    : load_config(graph_a.config_path);
        const BidTable table = load_dataset(graph_a, kv);
        const RelationalGraph g = build_graph(table, parse_relations(graph_a.relations, table));
        std::cout << "nodes " << g.node_count << '\n';
        for (const Relation& rel : g.relations) {
            double deg = 0.0;
            for (double d : rel.degrees) deg += d - 1.0;  // degrees include the self-loop
            std::cout << std::left << std::setw(12) << relation_name(rel.kind) << "edges "
                      << rel.edges.size() << "  mean_degree " << std::fixed
                      << std::setprecision(2) << (g.node_count ? deg / g.node_count : 0.0) << '\n';
        }
        return 0;
    }

    if (c_synth->parsed()) {
        const auto kv = synth_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                    : load_config(synth_a.config_path);
        const BidTable table = generate_synthetic(synth_from(kv, synth_a.seed));
        const std::string dir = synth_a.out_dir.empty() ? "." : synth_a.out_dir;
        std::filesystem::create_directories(dir);
        const std::string path = dir + "/synthetic.csv";
        save_bids(table, path);
        const DatasetStats st = dataset_stats(table);
        std::cout << "wrote " << path << ": " << st.bid_count << " bids, " << st.tender_count
                  << " tenders, " << std::fixed << std::setprecision(2)
                  << 100.0 * st.collusive_share << "% collusive\n";
        return 0;
    }

    if (c_train->parsed()) {
        const auto kv = train_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                    : load_config(train_a.config_path);
        const BidTable table = load_dataset(train_a, kv);
        const ModelKind kind = model_kind_from_name(train_a.model);
        const PhaseIResult res = run_phase1(table, kind, parse_relations(train_a.relations, table),
                                            phase_options(train_a, kv));
        print_aggregate(std::cout, table.dataset_name + " / " + model_kind_name(kind),
                        res.aggregate);
        for (const RunRecord& r : res.runs)
            if (r.failed) std::cerr << "run failed: " << r.failure << '\n';
        if (!train_a.out_dir.empty()) render_report({res}, {}, train_a.out_dir);
        if (res.aggregate.runs_failed == res.aggregate.runs_attempted)
            throw RunError("every run failed");
        return 0;
    }

    if (c_transfer->parsed()) {
        const auto kv = transfer_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                       : load_config(transfer_a.config_path);
        const BidTable target = load_dataset(transfer_a, kv);
        const PhaseIIResult res = run_phase2(checkpoints, target, transfer_source);
        print_aggregate(std::cout,
                        transfer_source + " -> " + target.dataset_name + " / " +
                            model_kind_name(res.kind),
                        res.aggregate);
        if (res.all_negative) std::cout << "  note: every model predicted all-negative\n";
        if (!transfer_a.out_dir.empty()) render_report({}, {res}, transfer_a.out_dir);
        return 0;
    }

    // report: Phase I for both models, paired table output.
    const auto kv = report_a.config_path.empty() ? std::map<std::string, std::string>{}
                                                 : load_config(report_a.config_path);
    const BidTable table = load_dataset(report_a, kv);
    const std::set<RelationKind> rels = parse_relations(report_a.relations, table);
    const PhaseOptions opts = phase_options(report_a, kv);
    std::vector<PhaseIResult> results;
    results.push_back(run_phase1(table, ModelKind::FFN, rels, opts));
    results.push_back(run_phase1(table, ModelKind::RGCN, rels, opts));
    for (const PhaseIResult& r : results)
        print_aggregate(std::cout, table.dataset_name + " / " + model_kind_name(r.kind),
                        r.aggregate);
    const std::string dir = report_a.out_dir.empty() ? "." : report_a.out_dir;
    render_report(results, {}, dir);
    std::cout << "report written to " << dir << "/report.txt\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const collusion::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const collusion::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "run failure: " << e.what() << '\n';
        return 4;
    }
}
