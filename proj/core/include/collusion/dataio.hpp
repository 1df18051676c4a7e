#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collusion/matrix.hpp"
#include "collusion/screens.hpp"

namespace collusion {

struct BidRecord {
    std::string tender_id;
    std::string company_id;
    std::optional<std::string> location_id;
    std::optional<std::string> site_id;
    double bid_value = 0.0;
    int winner = 0;                 // 1 if the bid won the tender
    std::optional<double> date;     // ordinal date
    std::optional<double> pte;      // pre-tender estimate
    int label = 0;                  // 1 = collusive
};

struct BidTable {
    std::vector<BidRecord> records;
    std::string dataset_name;

    bool has_dates() const;
    bool has_location() const;
    bool has_site() const;
    // Distinct tender ids in first-appearance order.
    std::vector<std::string> tender_ids() const;
    // Row indices per tender.
    std::map<std::string, std::vector<std::size_t>> rows_by_tender() const;
    std::map<std::string, std::vector<std::size_t>> rows_by_company() const;
};

// Maps logical fields to column names of the input file. Empty entries mean
// the column is absent; tender/company/bid_value/label are mandatory.
struct ColumnSchema {
    std::string tender_id = "Tender";
    std::string company_id = "Company";
    std::string bid_value = "Bid_value";
    std::string label = "Collusive_competitor";
    std::string winner;     // derived from lowest bid per tender when empty
    std::string location_id;
    std::string site_id;
    std::string date;
    std::string pte;
};

// The training feature set, in fixed column order.
struct FeatureMatrix {
    Matrix matrix;  // m x 10
    std::vector<std::string> feature_names;
};

inline const std::vector<std::string>& feature_order() {
    static const std::vector<std::string> names = {
        "Bid_value", "Number_bids", "Winner", "CV",   "SPD",
        "DIFFP",     "RD",          "KURT",   "SKEW", "KSTEST"};
    return names;
}

struct DatasetStats {
    std::size_t bid_count = 0;
    std::size_t tender_count = 0;
    double collusive_share = 0.0;        // fraction in [0,1]
    double mean_bids_per_tender = 0.0;
};

// Reads a delimited text file with a header row. Delimiter is sniffed from
// the header (comma, semicolon or tab).
BidTable load_bids(const std::string& path, const ColumnSchema& schema,
                   const std::string& dataset_name = "");

// Writes the mandatory + present optional columns back out; load(save(t))
// round-trips the mandatory columns bit-identically.
void save_bids(const BidTable& table, const std::string& path);

// Per-tender screens for every tender in the table.
std::map<std::string, ScreenSet> screens_by_tender(const BidTable& table);

// Per-bid rows [bid_value, number_bids, winner, CV..KSTEST]; tender-level
// screens broadcast to all bids of the tender. Date, PTE and Bid/PTE never
// enter the feature set.
FeatureMatrix assemble_features(const BidTable& table,
                                const std::map<std::string, ScreenSet>& screens);

// Min-max scaling per column, fit on fit_rows and applied with clamping to
// every row. Constant columns map to 0.
FeatureMatrix minmax_normalize(const FeatureMatrix& fm, const std::vector<std::size_t>& fit_rows);

DatasetStats dataset_stats(const BidTable& table);

}  // namespace collusion
