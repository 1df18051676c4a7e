#pragma once

// Shared fixtures and independent reference implementations ("oracles") used
// across the test binaries. The oracles deliberately re-derive every formula
// from scratch rather than calling into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "collusion/dataio.hpp"
#include "collusion/graph.hpp"
#include "collusion/matrix.hpp"
#include "collusion/models.hpp"
#include "collusion/rng.hpp"
#include "collusion/sparse.hpp"
#include "collusion/tape.hpp"
#include "collusion/training.hpp"

namespace testutil {

using namespace collusion;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.raw()) v = rng.uniform(lo, hi);
    return m;
}

// Entry-by-entry triple-loop product; oracle for matmul.
inline Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences

// Central finite differences of a scalar loss with respect to every entry of
// every parameter matrix, compared against the autodiff gradient. `loss_fn`
// must be a deterministic function of the current parameter values.
template <typename LossFn>
double max_fd_rel_error(std::vector<Matrix*> params, const std::vector<Matrix>& auto_grads,
                        LossFn loss_fn, double step = 1e-5) {
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& w = *params[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w.raw()[i];
            w.raw()[i] = saved + step;
            const double up = loss_fn();
            w.raw()[i] = saved - step;
            const double down = loss_fn();
            w.raw()[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double ad = auto_grads[p].raw()[i];
            const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Graph fixtures

// Random undirected graph as a raw (zero-diagonal, symmetric) sparse
// adjacency over n nodes.
inline SparseMatrix random_adjacency(std::size_t n, std::size_t n_edges, Rng& rng) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t attempt = 0; attempt < n_edges * 4 && edges.size() < n_edges; ++attempt) {
        std::size_t a = rng.index(n), b = rng.index(n);
        if (a == b) continue;
        edges.insert({std::min(a, b), std::max(a, b)});
    }
    std::vector<SparseMatrix::Entry> entries;
    for (auto [a, b] : edges) {
        entries.push_back({a, b, 1.0});
        entries.push_back({b, a, 1.0});
    }
    return SparseMatrix(n, std::move(entries));
}

// Assembles the full Relation bundle (raw / self-looped / normalized /
// degrees) the way build_graph would, from a raw adjacency.
inline Relation make_relation(RelationKind kind, const SparseMatrix& raw) {
    Relation rel;
    rel.kind = kind;
    for (const SparseMatrix::Entry& e : raw.entries())
        if (e.row < e.col) rel.edges.push_back({e.row, e.col});
    rel.raw = raw;
    std::vector<SparseMatrix::Entry> looped = raw.entries();
    for (std::size_t i = 0; i < raw.dim(); ++i) looped.push_back({i, i, 1.0});
    rel.self_looped = SparseMatrix(raw.dim(), std::move(looped));
    rel.degrees.assign(raw.dim(), 0.0);
    for (const SparseMatrix::Entry& e : rel.self_looped.entries()) rel.degrees[e.row] += e.value;
    rel.normalized = normalize_relation(raw);
    return rel;
}

inline RelationalGraph random_graph(std::size_t n, const std::vector<RelationKind>& kinds,
                                    std::size_t n_edges, Rng& rng) {
    RelationalGraph g;
    g.node_count = n;
    for (RelationKind k : kinds) g.relations.push_back(make_relation(k, random_adjacency(n, n_edges, rng)));
    return g;
}

// ---------------------------------------------------------------------------
// Bid-table fixtures

struct BidSpec {
    std::string tender;
    std::string company;
    double bid;
    int label = 0;
};

inline BidTable make_table(const std::vector<BidSpec>& bids, bool with_dates = false) {
    BidTable t;
    t.dataset_name = "fixture";
    for (std::size_t i = 0; i < bids.size(); ++i) {
        BidRecord r;
        r.tender_id = bids[i].tender;
        r.company_id = bids[i].company;
        r.bid_value = bids[i].bid;
        r.label = bids[i].label;
        if (with_dates) r.date = static_cast<double>(i);
        t.records.push_back(std::move(r));
    }
    return t;
}

// n_collusive + n_clean companies, every company bidding in enough shared
// tenders that splits and folds are well defined.
inline BidTable make_company_table(std::size_t n_collusive, std::size_t n_clean,
                                   std::size_t bids_per_company = 3) {
    std::vector<BidSpec> bids;
    const std::size_t n = n_collusive + n_clean;
    for (std::size_t b = 0; b < bids_per_company; ++b)
        for (std::size_t c = 0; c < n; ++c)
            bids.push_back({"T" + std::to_string(b * 3 + c % 3), "C" + std::to_string(c),
                            100.0 + static_cast<double>(c + 7 * b), c < n_collusive ? 1 : 0});
    return make_table(bids);
}

// ---------------------------------------------------------------------------
// Metric oracles

// O(n^2) pairwise probability that a positive outranks a negative, ties 1/2.
inline double roc_auc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Brute-force average precision: enumerate every distinct threshold in
// descending order, recompute the confusion from scratch, step-sum P*dR.
inline double pr_auc_threshold_enum(const std::vector<double>& scores,
                                    const std::vector<int>& labels) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    double auc = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) (labels[i] == 1 ? tp : fp)++;
        const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return auc;
}

// ---------------------------------------------------------------------------
// Screen oracles (independent re-derivations via central moments)

struct ScreenOracle {
    double mean, sd, cv, spd, diffp, rd, skew, kurt, ks;
    bool rd_def, skew_def, kurt_def, ks_def;
};

inline ScreenOracle screen_oracle(std::vector<double> x) {
    ScreenOracle o{};
    const double n = static_cast<double>(x.size());
    std::sort(x.begin(), x.end());
    o.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double d = v - o.mean;
        m2 += d * d / n;
        m3 += d * d * d / n;
        m4 += d * d * d * d / n;
    }
    o.sd = x.size() >= 2 ? std::sqrt(n / (n - 1.0) * m2) : 0.0;
    o.cv = o.sd / o.mean;
    o.spd = (x.back() - x.front()) / x.front();
    o.diffp = x.size() >= 2 ? (x[1] - x[0]) / x[0] : 0.0;

    o.rd_def = false;
    if (x.size() >= 3) {
        std::vector<double> losing(x.begin() + 1, x.end());
        const double lm =
            std::accumulate(losing.begin(), losing.end(), 0.0) / static_cast<double>(losing.size());
        double ss = 0;
        for (double v : losing) ss += (v - lm) * (v - lm);
        const double ls = std::sqrt(ss / static_cast<double>(losing.size() - 1));
        if (ls > 0) {
            o.rd = (x[1] - x[0]) / ls;
            o.rd_def = true;
        }
    }

    o.skew_def = x.size() >= 3 && o.sd > 0;
    if (o.skew_def)
        o.skew = n * n / ((n - 1.0) * (n - 2.0)) * m3 / (o.sd * o.sd * o.sd);
    o.kurt_def = x.size() >= 4 && o.sd > 0;
    if (o.kurt_def)
        o.kurt = n * (n + 1.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0)) * n * m4 /
                     (o.sd * o.sd * o.sd * o.sd) -
                 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));

    o.ks_def = x.size() >= 2 && x.back() > x.front();
    if (o.ks_def) {
        const double lo = x.front(), span = x.back() - x.front();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double f = (x[i] - lo) / span;
            o.ks = std::max({o.ks, std::abs(static_cast<double>(i + 1) / n - f),
                             std::abs(f - static_cast<double>(i) / n)});
        }
    }
    return o;
}

// Spectral radius by power iteration on the symmetric matrix.
inline double spectral_radius(const SparseMatrix& a, std::size_t iters = 300) {
    Matrix v(a.dim(), 1, 1.0);
    double lambda = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        Matrix w = a.multiply(v);
        double norm = 0.0;
        for (double x : w.raw()) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        lambda = norm;
        for (double& x : w.raw()) x /= norm;
        v = std::move(w);
    }
    return lambda;
}

inline bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace testutil
