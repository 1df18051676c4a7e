#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "collusion/dataio.hpp"
#include "collusion/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace collusion;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

// Writes `text` into a fresh temp file and returns its path.
std::string write_temp(const std::string& text, const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dataio_test_" + name);
    std::ofstream out(p);
    out << text;
    return p.string();
}

}  // namespace

TEST_SUITE("load_bids") {
    TEST_CASE("three rows load in file order") {
        const std::string path = write_temp(
            "Tender,Company,Bid_value,Collusive_competitor\n"
            "T1,A,100,0\n"
            "T1,B,110,1\n"
            "T2,A,90,0\n",
            "three_rows.csv");
        BidTable t = load_bids(path, ColumnSchema{});
        REQUIRE(t.records.size() == 3);
        CHECK(t.records[0].company_id == "A");
        CHECK(t.records[1].company_id == "B");
        CHECK(t.records[1].label == 1);
        CHECK(t.records[2].tender_id == "T2");
        CHECK_FALSE(t.records[0].date.has_value());
    }

    TEST_CASE("semicolon and tab delimiters are sniffed") {
        for (const char* delim : {";", "\t"}) {
            std::ostringstream text;
            for (const char* line : {"Tender,Company,Bid_value,Collusive_competitor", "T1,A,100,0",
                                     "T1,B,110,0"}) {
                std::string l = line;
                for (char& c : l)
                    if (c == ',') c = delim[0];
                text << l << '\n';
            }
            BidTable t = load_bids(write_temp(text.str(), std::string("delim") + delim[0]),
                                   ColumnSchema{});
            CHECK(t.records.size() == 2);
            CHECK(t.records[1].bid_value == 110.0);
        }
    }

    TEST_CASE("missing mandatory column names the column") {
        const std::string path = write_temp("Tender,Company,Collusive_competitor\nT1,A,0\n",
                                            "missing_col.csv");
        CHECK_THROWS_WITH_AS(load_bids(path, ColumnSchema{}), doctest::Contains("Bid_value"),
                             DataError);
    }

    TEST_CASE("unparseable value reports the row number") {
        const std::string path = write_temp(
            "Tender,Company,Bid_value,Collusive_competitor\nT1,A,100,0\nT1,B,oops,0\n",
            "bad_value.csv");
        CHECK_THROWS_WITH_AS(load_bids(path, ColumnSchema{}), doctest::Contains("row 2"),
                             DataError);
    }

    TEST_CASE("optional columns are bound when mapped") {
        ColumnSchema schema;
        schema.location_id = "Location";
        schema.date = "Date";
        const std::string path = write_temp(
            "Tender,Company,Bid_value,Collusive_competitor,Location,Date\n"
            "T1,A,100,0,L1,5\n",
            "optional.csv");
        BidTable t = load_bids(path, schema);
        CHECK(t.records[0].location_id == "L1");
        CHECK(t.records[0].date == 5.0);
        CHECK(t.has_location());
        CHECK(t.has_dates());
    }

    TEST_CASE("save then load round-trips the mandatory columns bit-identically") {
        BidTable t = make_table({{"T1", "A", 100.125, 0},
                                 {"T1", "B", 110.333333333333337, 1},
                                 {"T2", "A", 97.0000000000000004, 0}});
        const fs::path p = fs::temp_directory_path() / "dataio_roundtrip.csv";
        save_bids(t, p.string());
        BidTable back = load_bids(p.string(), ColumnSchema{});
        REQUIRE(back.records.size() == t.records.size());
        for (std::size_t i = 0; i < t.records.size(); ++i) {
            CHECK(back.records[i].tender_id == t.records[i].tender_id);
            CHECK(back.records[i].company_id == t.records[i].company_id);
            CHECK(back.records[i].bid_value == t.records[i].bid_value);  // exact
            CHECK(back.records[i].label == t.records[i].label);
        }
    }
}

TEST_SUITE("assemble_features") {
    TEST_CASE("tender screens broadcast to every bid") {
        BidTable t = make_table({{"T1", "A", 100}, {"T1", "B", 110}, {"T1", "C", 120}});
        FeatureMatrix fm = assemble_features(t, screens_by_tender(t));
        REQUIRE(fm.matrix.rows() == 3);
        REQUIRE(fm.matrix.cols() == 10);
        CHECK(fm.feature_names == feature_order());
        for (std::size_t col = 3; col < 10; ++col) {  // CV..KSTEST shared
            CHECK(fm.matrix(0, col) == fm.matrix(1, col));
            CHECK(fm.matrix(1, col) == fm.matrix(2, col));
        }
        // Number_bids column.
        CHECK(fm.matrix(0, 1) == 3.0);
    }

    TEST_CASE("PTE never enters the feature set") {
        BidTable t = make_table({{"T1", "A", 100}, {"T1", "B", 120}});
        for (BidRecord& r : t.records) r.pte = 95.0;
        FeatureMatrix fm = assemble_features(t, screens_by_tender(t));
        CHECK(fm.matrix.cols() == 10);
    }

    TEST_CASE("single-tender table counts five bids per row") {
        BidTable t = make_table({{"T1", "A", 1}, {"T1", "B", 2}, {"T1", "C", 3},
                                 {"T1", "D", 4}, {"T1", "E", 5}});
        FeatureMatrix fm = assemble_features(t, screens_by_tender(t));
        for (std::size_t i = 0; i < 5; ++i) CHECK(fm.matrix(i, 1) == 5.0);
    }

    TEST_CASE("missing tender screens are a consistency error") {
        BidTable t = make_table({{"T1", "A", 100}, {"T2", "B", 110}});
        std::map<std::string, ScreenSet> partial;
        partial["T1"] = compute_screens({100});
        CHECK_THROWS_AS(assemble_features(t, partial), DataError);
    }

    TEST_CASE("derived winner is the lowest bid, ties to the earlier row") {
        const fs::path p = fs::temp_directory_path() / "dataio_winner.csv";
        {
            std::ofstream out(p);
            out << "Tender,Company,Bid_value,Collusive_competitor\n"
                   "T1,A,110,0\nT1,B,100,0\nT1,C,100,0\n";
        }
        BidTable t = load_bids(p.string(), ColumnSchema{});
        CHECK(t.records[0].winner == 0);
        CHECK(t.records[1].winner == 1);
        CHECK(t.records[2].winner == 0);
    }
}

TEST_SUITE("minmax_normalize") {
    FeatureMatrix column(std::vector<double> values) {
        FeatureMatrix fm;
        const std::size_t n = values.size();
        fm.matrix = Matrix(n, 1, std::move(values));
        fm.feature_names = {"x"};
        return fm;
    }

    TEST_CASE("full-range column maps to [0, 0.5, 1]") {
        FeatureMatrix out = minmax_normalize(column({0, 5, 10}), {0, 1, 2});
        CHECK(out.matrix(0, 0) == 0.0);
        CHECK(out.matrix(1, 0) == 0.5);
        CHECK(out.matrix(2, 0) == 1.0);
    }

    TEST_CASE("constant column maps to zero") {
        FeatureMatrix out = minmax_normalize(column({7, 7, 7}), {0, 1, 2});
        for (std::size_t i = 0; i < 3; ++i) CHECK(out.matrix(i, 0) == 0.0);
    }

    TEST_CASE("values outside the fit range clamp to [0,1]") {
        FeatureMatrix out = minmax_normalize(column({0, 5, 10}), {0, 1});
        CHECK(out.matrix(0, 0) == 0.0);
        CHECK(out.matrix(1, 0) == 1.0);
        CHECK(out.matrix(2, 0) == 1.0);  // clamped
    }

    TEST_CASE("empty fit rows are rejected") {
        CHECK_THROWS_AS(minmax_normalize(column({1, 2}), {}), ContractError);
    }

    TEST_CASE("random features always land in [0,1]") {
        Rng rng(9);
        FeatureMatrix fm;
        fm.matrix = random_matrix(30, 4, rng, -50, 50);
        fm.feature_names = {"a", "b", "c", "d"};
        FeatureMatrix out = minmax_normalize(fm, {3, 4, 5, 6, 7, 8});
        for (double v : out.matrix.raw()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_SUITE("dataset_stats") {
    TEST_CASE("four bids in two tenders") {
        BidTable t = make_table(
            {{"T1", "A", 100, 1}, {"T1", "B", 110}, {"T2", "A", 90}, {"T2", "C", 95}});
        DatasetStats s = dataset_stats(t);
        CHECK(s.bid_count == 4);
        CHECK(s.tender_count == 2);
        CHECK(s.collusive_share == doctest::Approx(0.25));
        CHECK(s.mean_bids_per_tender == doctest::Approx(2.0));
    }

    TEST_CASE("empty table is rejected") {
        CHECK_THROWS_AS(dataset_stats(BidTable{}), ContractError);
    }
}
