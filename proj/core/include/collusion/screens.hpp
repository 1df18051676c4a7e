#pragma once

#include <string>
#include <vector>

namespace collusion {

// Tender-level screening statistics. Statistics whose formula is undefined
// for the given bid count are reported as 0 with the matching flag set, so
// the feature matrix stays dense while audits can still spot degenerate
// tenders.
struct ScreenSet {
    std::string tender_id;
    std::size_t n = 0;         // bid count
    double mean_bid = 0.0;
    double stddev = 0.0;       // sample (n-1) convention
    double cv = 0.0;
    double spd = 0.0;
    double diffp = 0.0;
    double rd = 0.0;
    double kurt = 0.0;         // excess kurtosis
    double skew = 0.0;
    double kstest = 0.0;

    bool cv_undefined = false;
    bool rd_undefined = false;
    bool kurt_undefined = false;
    bool skew_undefined = false;
    bool kstest_undefined = false;
};

struct AbaResult {
    double a1 = 0.0;
    double a2 = 0.0;
    double winner = 0.0;
    bool a2_undefined = false;      // no bid strictly below A1
    bool winner_undefined = false;  // no bid strictly above A2
};

// All seven screening variables for one tender. Bids must be non-empty and
// positive; throws ContractError otherwise.
ScreenSet compute_screens(const std::vector<double>& bids);

// Two-sided Kolmogorov-Smirnov statistic of the bids against the uniform
// distribution on [min, max]. Returns 0 (flagged via compute_screens) when
// all bids are equal.
double kstest_uniform(const std::vector<double>& bids);

// Trimmed average bid A1, the below-average mean A2, and the lowest bid
// strictly above A2 (the average-bid-auction winner rule).
AbaResult aba_averages(const std::vector<double>& bids, double trim_fraction = 0.0);

}  // namespace collusion
