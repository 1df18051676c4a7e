#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace collusion {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// 0/0 cases report 0 with the matching degenerate flag.
struct ThresholdMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
};

struct CurvePoint {
    double threshold;
    double x;  // FPR for ROC, recall for PR
    double y;  // TPR for ROC, precision for PR
};

// Mean / sample-SD summary of one metric over a batch of runs.
struct MetricAggregate {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

struct RunAggregate {
    std::map<std::string, MetricAggregate> metrics;
    std::size_t runs_attempted = 0;
    std::size_t runs_failed = 0;
};

Confusion confusion_from(const std::vector<double>& scores, const std::vector<int>& labels,
                         double threshold = 0.5);

ThresholdMetrics threshold_metrics(const Confusion& conf);

// Probability that a random positive ranks above a random negative, ties
// counting one half. Returns the undefined flag through `defined` when one
// class is absent.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels,
               bool* defined = nullptr);

// Average-precision step sum over descending-score thresholds.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels,
              bool* defined = nullptr);

// ROC points from (0,0) to (1,1), one per distinct threshold.
std::vector<CurvePoint> roc_curve(const std::vector<double>& scores,
                                  const std::vector<int>& labels);
std::vector<CurvePoint> pr_curve(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

// Per-metric mean and sample SD over >= 2 runs. Each element of `runs` maps
// metric name to value; entries missing a metric are skipped for it.
RunAggregate aggregate_runs(const std::vector<std::map<std::string, double>>& runs,
                            std::size_t runs_attempted = 0);

}  // namespace collusion
