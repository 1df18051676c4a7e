#include "collusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "collusion/errors.hpp"

namespace collusion {

Confusion confusion_from(const std::vector<double>& scores, const std::vector<int>& labels,
                         double threshold) {
    if (scores.size() != labels.size())
        throw ContractError("confusion_from: scores/labels length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1)
            pred ? ++c.tp : ++c.fn;
        else
            pred ? ++c.fp : ++c.tn;
    }
    return c;
}

ThresholdMetrics threshold_metrics(const Confusion& c) {
    ThresholdMetrics m;
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    else
        m.precision_degenerate = true;
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    else
        m.recall_degenerate = true;
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
        m.f1_degenerate = true;
    const double tnr =
        (c.tn + c.fp > 0) ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 0.0;
    m.balanced_accuracy = 0.5 * (m.recall + tnr);
    return m;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels, bool* defined) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;

    // Midrank formulation; exactly the pairwise probability with ties = 1/2.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += midrank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

namespace {

// Distinct thresholds in descending order with cumulative tp/fp counts.
struct SweepPoint {
    double threshold;
    std::size_t tp;
    std::size_t fp;
};

std::vector<SweepPoint> threshold_sweep(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<SweepPoint> sweep;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < n) {
        const double t = scores[order[i]];
        while (i < n && scores[order[i]] == t) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        sweep.push_back({t, tp, fp});
    }
    return sweep;
}

}  // namespace

std::vector<CurvePoint> roc_curve(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    const std::size_t n_neg = labels.size() - n_pos;
    std::vector<CurvePoint> pts;
    pts.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (const SweepPoint& s : threshold_sweep(scores, labels)) {
        const double fpr = n_neg ? static_cast<double>(s.fp) / static_cast<double>(n_neg) : 0.0;
        const double tpr = n_pos ? static_cast<double>(s.tp) / static_cast<double>(n_pos) : 0.0;
        pts.push_back({s.threshold, fpr, tpr});
    }
    if (pts.back().x != 1.0 || pts.back().y != 1.0)
        pts.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    return pts;
}

std::vector<CurvePoint> pr_curve(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    std::vector<CurvePoint> pts;
    for (const SweepPoint& s : threshold_sweep(scores, labels)) {
        const double recall = n_pos ? static_cast<double>(s.tp) / static_cast<double>(n_pos) : 0.0;
        const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        pts.push_back({s.threshold, recall, precision});
    }
    return pts;
}

double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels, bool* defined) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    if (n_pos == 0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    // Average-precision step sum; precision is not interpolated.
    double auc = 0.0;
    double prev_recall = 0.0;
    for (const CurvePoint& p : pr_curve(scores, labels)) {
        auc += (p.x - prev_recall) * p.y;
        prev_recall = p.x;
    }
    return auc;
}

RunAggregate aggregate_runs(const std::vector<std::map<std::string, double>>& runs,
                            std::size_t runs_attempted) {
    if (runs.size() < 2) throw ContractError("aggregate_runs: need at least 2 runs");
    RunAggregate agg;
    agg.runs_attempted = runs_attempted ? runs_attempted : runs.size();
    agg.runs_failed = agg.runs_attempted - runs.size();
    std::map<std::string, std::vector<double>> by_metric;
    for (const auto& run : runs)
        for (const auto& [name, value] : run) by_metric[name].push_back(value);
    for (const auto& [name, values] : by_metric) {
        MetricAggregate m;
        m.n = values.size();
        m.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                 static_cast<double>(values.size());
        if (values.size() >= 2) {
            double ss = 0.0;
            for (double v : values) ss += (v - m.mean) * (v - m.mean);
            m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        agg.metrics[name] = m;
    }
    return agg;
}

}  // namespace collusion
