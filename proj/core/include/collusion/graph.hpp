#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "collusion/dataio.hpp"
#include "collusion/sparse.hpp"

namespace collusion {

enum class RelationKind { Tender, Competitor, Location, Site };

constexpr std::array<RelationKind, 4> kAllRelations = {
    RelationKind::Tender, RelationKind::Competitor, RelationKind::Location, RelationKind::Site};

std::string relation_name(RelationKind r);
RelationKind relation_from_name(const std::string& name);

// One edge relation over the bid nodes: undirected edge list, raw adjacency
// A_hat, self-looped A_bar = A_hat + I and the symmetric normalization
// A_tilde = D^{-1/2} A_bar D^{-1/2}.
struct Relation {
    RelationKind kind;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted, unique
    SparseMatrix raw;          // A_hat, zero diagonal
    SparseMatrix self_looped;  // A_bar
    SparseMatrix normalized;   // A_tilde
    std::vector<double> degrees;  // diagonal of D (over A_bar)
};

struct RelationalGraph {
    std::size_t node_count = 0;
    std::vector<Relation> relations;

    const Relation* find(RelationKind kind) const;
    bool has(RelationKind kind) const { return find(kind) != nullptr; }
};

// Builds the relational graph over the table's bids. Tender/Location/Site
// connect all pairs sharing the identifier; Competitor chains each company's
// bids to their chronological previous and next bid (row order when dates
// are absent). Throws ConfigError when a requested relation's identifier
// column is missing.
RelationalGraph build_graph(const BidTable& table, const std::set<RelationKind>& active);

// Symmetric normalization of one adjacency: adds self-loops, computes
// degrees and returns D^{-1/2} (A_hat + I) D^{-1/2}.
SparseMatrix normalize_relation(const SparseMatrix& raw_adjacency);

// Per-node loop form of the unweighted aggregation h_u + sum over neighbors.
// Oracle for the sparse matrix product A_bar * H.
Matrix message_pass_reference(const Matrix& h, const RelationalGraph& graph, RelationKind kind);

}  // namespace collusion
