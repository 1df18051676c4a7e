#include "collusion/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "collusion/errors.hpp"

namespace collusion {

bool BidTable::has_dates() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(),
                       [](const BidRecord& r) { return r.date.has_value(); });
}

bool BidTable::has_location() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(),
                       [](const BidRecord& r) { return r.location_id.has_value(); });
}

bool BidTable::has_site() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(),
                       [](const BidRecord& r) { return r.site_id.has_value(); });
}

std::vector<std::string> BidTable::tender_ids() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const BidRecord& r : records)
        if (seen.insert(r.tender_id).second) out.push_back(r.tender_id);
    return out;
}

std::map<std::string, std::vector<std::size_t>> BidTable::rows_by_tender() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].tender_id].push_back(i);
    return out;
}

std::map<std::string, std::vector<std::size_t>> BidTable::rows_by_company() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].company_id].push_back(i);
    return out;
}

namespace {

char sniff_delimiter(const std::string& header) {
    for (char c : {'\t', ';', ','})
        if (header.find(c) != std::string::npos) return c;
    return ',';
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("row " + std::to_string(row) + ": cannot parse value '" + s +
                        "' in column " + col);
    }
}

// Column index for a mapped name, or npos if the mapping is empty.
std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        bool mandatory) {
    if (name.empty()) {
        if (mandatory) throw ConfigError("mandatory column mapping is empty");
        return std::string::npos;
    }
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    if (mandatory) throw DataError("missing mandatory column: " + name);
    return std::string::npos;
}

void derive_winners(BidTable& table) {
    for (auto& [tender, rows] : table.rows_by_tender()) {
        std::size_t best = rows.front();
        for (std::size_t r : rows)
            if (table.records[r].bid_value < table.records[best].bid_value) best = r;
        for (std::size_t r : rows) table.records[r].winner = (r == best) ? 1 : 0;
    }
}

}  // namespace

BidTable load_bids(const std::string& path, const ColumnSchema& schema,
                   const std::string& dataset_name) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("empty file: " + path);
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    const char delim = sniff_delimiter(header_line);
    const std::vector<std::string> header = split(header_line, delim);

    const std::size_t c_tender = find_column(header, schema.tender_id, true);
    const std::size_t c_company = find_column(header, schema.company_id, true);
    const std::size_t c_bid = find_column(header, schema.bid_value, true);
    const std::size_t c_label = find_column(header, schema.label, true);
    const std::size_t c_winner = find_column(header, schema.winner, false);
    const std::size_t c_location = find_column(header, schema.location_id, false);
    const std::size_t c_site = find_column(header, schema.site_id, false);
    const std::size_t c_date = find_column(header, schema.date, false);
    const std::size_t c_pte = find_column(header, schema.pte, false);

    BidTable table;
    table.dataset_name = dataset_name.empty() ? path : dataset_name;

    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split(line, delim);
        if (fields.size() < header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        BidRecord rec;
        rec.tender_id = fields[c_tender];
        rec.company_id = fields[c_company];
        if (rec.tender_id.empty() || rec.company_id.empty())
            throw DataError("row " + std::to_string(row) + ": empty identifier");
        rec.bid_value = parse_double(fields[c_bid], row, schema.bid_value);
        if (rec.bid_value <= 0.0)
            throw DataError("row " + std::to_string(row) + ": bid_value must be positive");
        rec.label = static_cast<int>(parse_double(fields[c_label], row, schema.label));
        if (rec.label != 0 && rec.label != 1)
            throw DataError("row " + std::to_string(row) + ": label must be 0 or 1");
        if (c_winner != std::string::npos)
            rec.winner = static_cast<int>(parse_double(fields[c_winner], row, schema.winner));
        if (c_location != std::string::npos && !fields[c_location].empty())
            rec.location_id = fields[c_location];
        if (c_site != std::string::npos && !fields[c_site].empty())
            rec.site_id = fields[c_site];
        if (c_date != std::string::npos && !fields[c_date].empty())
            rec.date = parse_double(fields[c_date], row, schema.date);
        if (c_pte != std::string::npos && !fields[c_pte].empty())
            rec.pte = parse_double(fields[c_pte], row, schema.pte);
        table.records.push_back(std::move(rec));
    }
    if (table.records.empty()) throw DataError("no records in file: " + path);
    if (c_winner == std::string::npos) derive_winners(table);
    return table;
}

void save_bids(const BidTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    const bool loc = table.has_location();
    const bool site = table.has_site();
    const bool date = table.has_dates();
    out << "Tender,Company,Bid_value,Winner,Collusive_competitor";
    if (loc) out << ",Location";
    if (site) out << ",Site";
    if (date) out << ",Date";
    out << "\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (const BidRecord& r : table.records) {
        out << r.tender_id << ',' << r.company_id << ',' << r.bid_value << ',' << r.winner << ','
            << r.label;
        if (loc) out << ',' << *r.location_id;
        if (site) out << ',' << *r.site_id;
        if (date) out << ',' << *r.date;
        out << "\n";
    }
}

std::map<std::string, ScreenSet> screens_by_tender(const BidTable& table) {
    std::map<std::string, ScreenSet> out;
    for (const auto& [tender, rows] : table.rows_by_tender()) {
        std::vector<double> bids;
        bids.reserve(rows.size());
        for (std::size_t r : rows) bids.push_back(table.records[r].bid_value);
        ScreenSet s = compute_screens(bids);
        s.tender_id = tender;
        out.emplace(tender, std::move(s));
    }
    return out;
}

FeatureMatrix assemble_features(const BidTable& table,
                                const std::map<std::string, ScreenSet>& screens) {
    const std::size_t m = table.records.size();
    FeatureMatrix fm;
    fm.feature_names = feature_order();
    fm.matrix = Matrix(m, fm.feature_names.size());
    for (std::size_t i = 0; i < m; ++i) {
        const BidRecord& r = table.records[i];
        auto it = screens.find(r.tender_id);
        if (it == screens.end())
            throw DataError("no screens computed for tender " + r.tender_id);
        const ScreenSet& s = it->second;
        fm.matrix(i, 0) = r.bid_value;
        fm.matrix(i, 1) = static_cast<double>(s.n);
        fm.matrix(i, 2) = static_cast<double>(r.winner);
        fm.matrix(i, 3) = s.cv;
        fm.matrix(i, 4) = s.spd;
        fm.matrix(i, 5) = s.diffp;
        fm.matrix(i, 6) = s.rd;
        fm.matrix(i, 7) = s.kurt;
        fm.matrix(i, 8) = s.skew;
        fm.matrix(i, 9) = s.kstest;
    }
    return fm;
}

FeatureMatrix minmax_normalize(const FeatureMatrix& fm, const std::vector<std::size_t>& fit_rows) {
    if (fit_rows.empty()) throw ContractError("minmax_normalize: fit_rows is empty");
    FeatureMatrix out = fm;
    const std::size_t f = fm.matrix.cols();
    for (std::size_t j = 0; j < f; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r : fit_rows) {
            lo = std::min(lo, fm.matrix(r, j));
            hi = std::max(hi, fm.matrix(r, j));
        }
        for (std::size_t i = 0; i < fm.matrix.rows(); ++i) {
            double v = 0.0;
            if (hi > lo) v = std::clamp((fm.matrix(i, j) - lo) / (hi - lo), 0.0, 1.0);
            out.matrix(i, j) = v;
        }
    }
    return out;
}

DatasetStats dataset_stats(const BidTable& table) {
    if (table.records.empty()) throw ContractError("dataset_stats: empty table");
    DatasetStats st;
    st.bid_count = table.records.size();
    st.tender_count = table.tender_ids().size();
    std::size_t collusive = 0;
    for (const BidRecord& r : table.records) collusive += r.label;
    st.collusive_share = static_cast<double>(collusive) / static_cast<double>(st.bid_count);
    st.mean_bids_per_tender =
        static_cast<double>(st.bid_count) / static_cast<double>(st.tender_count);
    return st;
}

}  // namespace collusion
