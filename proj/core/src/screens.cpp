#include "collusion/screens.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collusion/errors.hpp"

namespace collusion {

namespace {

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample (n-1) standard deviation.
double sample_std(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

double kstest_uniform(const std::vector<double>& bids) {
    if (bids.size() < 2) throw ContractError("kstest_uniform requires at least 2 bids");
    std::vector<double> sorted = bids;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (hi <= lo) return 0.0;
    const double n = static_cast<double>(sorted.size());
    // Empirical CDF steps at each sample point; evaluate the gap on both
    // sides of the discontinuity.
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = (sorted[i] - lo) / (hi - lo);
        const double above = static_cast<double>(i + 1) / n - f;
        const double below = f - static_cast<double>(i) / n;
        d = std::max({d, above, below});
    }
    return d;
}

ScreenSet compute_screens(const std::vector<double>& bids) {
    if (bids.empty()) throw ContractError("compute_screens: empty bid list");
    for (double b : bids)
        if (b <= 0.0) throw ContractError("compute_screens: bids must be positive");

    ScreenSet s;
    const std::size_t n = bids.size();
    const double dn = static_cast<double>(n);
    s.n = n;
    s.mean_bid = mean_of(bids);
    s.stddev = sample_std(bids);

    std::vector<double> sorted = bids;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();

    s.spd = (hi - lo) / lo;
    s.diffp = n >= 2 ? (sorted[1] - lo) / lo : 0.0;

    if (n >= 2) {
        s.cv = s.stddev / s.mean_bid;
    } else {
        s.cv_undefined = true;
    }

    // Losing bids: everything above the single lowest bid.
    if (n >= 3) {
        std::vector<double> losing(sorted.begin() + 1, sorted.end());
        const double s_losing = sample_std(losing);
        if (s_losing > 0.0) {
            s.rd = (sorted[1] - lo) / s_losing;
        } else {
            s.rd_undefined = true;
        }
    } else {
        s.rd_undefined = true;
    }

    if (n >= 3 && s.stddev > 0.0) {
        double z3 = 0.0;
        for (double b : bids) {
            const double z = (b - s.mean_bid) / s.stddev;
            z3 += z * z * z;
        }
        s.skew = dn / ((dn - 1.0) * (dn - 2.0)) * z3;
    } else {
        s.skew_undefined = true;
    }

    if (n >= 4 && s.stddev > 0.0) {
        double z4 = 0.0;
        for (double b : bids) {
            const double z = (b - s.mean_bid) / s.stddev;
            z4 += z * z * z * z;
        }
        s.kurt = dn * (dn + 1.0) / ((dn - 1.0) * (dn - 2.0) * (dn - 3.0)) * z4 -
                 3.0 * (dn - 1.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
    } else {
        s.kurt_undefined = true;
    }

    if (n >= 2 && hi > lo) {
        s.kstest = kstest_uniform(bids);
    } else {
        s.kstest_undefined = true;
    }
    return s;
}

AbaResult aba_averages(const std::vector<double>& bids, double trim_fraction) {
    if (bids.empty()) throw ContractError("aba_averages: empty bid list");
    if (trim_fraction < 0.0 || trim_fraction >= 0.5)
        throw ContractError("aba_averages: trim_fraction must be in [0, 0.5)");

    std::vector<double> sorted = bids;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t cut =
        static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(sorted.size())));
    std::vector<double> trimmed(sorted.begin() + cut, sorted.end() - cut);

    AbaResult r;
    r.a1 = mean_of(trimmed);

    double below_sum = 0.0;
    std::size_t below_n = 0;
    for (double b : sorted) {
        if (b < r.a1) {
            below_sum += b;
            ++below_n;
        }
    }
    if (below_n == 0) {
        r.a2_undefined = true;
        r.winner_undefined = true;
        return r;
    }
    r.a2 = below_sum / static_cast<double>(below_n);

    r.winner_undefined = true;
    for (double b : sorted) {
        if (b > r.a2) {
            r.winner = b;
            r.winner_undefined = false;
            break;
        }
    }
    return r;
}

}  // namespace collusion
