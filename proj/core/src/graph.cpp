#include "collusion/graph.hpp"

#include <algorithm>
#include <cmath>

#include "collusion/errors.hpp"

namespace collusion {

std::string relation_name(RelationKind r) {
    switch (r) {
        case RelationKind::Tender: return "tender";
        case RelationKind::Competitor: return "competitor";
        case RelationKind::Location: return "location";
        case RelationKind::Site: return "site";
    }
    return "?";
}

RelationKind relation_from_name(const std::string& name) {
    for (RelationKind r : kAllRelations)
        if (relation_name(r) == name) return r;
    throw ConfigError("unknown relation: " + name);
}

const Relation* RelationalGraph::find(RelationKind kind) const {
    for (const Relation& r : relations)
        if (r.kind == kind) return &r;
    return nullptr;
}

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

std::vector<Edge> clique_edges(const std::map<std::string, std::vector<std::size_t>>& groups) {
    std::vector<Edge> edges;
    for (const auto& [id, rows] : groups) {
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = a + 1; b < rows.size(); ++b)
                edges.emplace_back(std::min(rows[a], rows[b]), std::max(rows[a], rows[b]));
    }
    return edges;
}

// Chain each company's bids in chronological order (date, then row index);
// plain row order when dates are absent.
std::vector<Edge> competitor_edges(const BidTable& table) {
    std::vector<Edge> edges;
    const bool dated = table.has_dates();
    for (auto& [company, rows] : table.rows_by_company()) {
        std::vector<std::size_t> order = rows;
        if (dated) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return *table.records[a].date < *table.records[b].date;
            });
        }
        for (std::size_t k = 0; k + 1 < order.size(); ++k)
            edges.emplace_back(std::min(order[k], order[k + 1]),
                               std::max(order[k], order[k + 1]));
    }
    return edges;
}

SparseMatrix raw_adjacency(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(edges.size() * 2);
    for (const Edge& e : edges) {
        entries.push_back({e.first, e.second, 1.0});
        entries.push_back({e.second, e.first, 1.0});
    }
    return SparseMatrix(n, std::move(entries));
}

}  // namespace

SparseMatrix normalize_relation(const SparseMatrix& raw) {
    const std::size_t n = raw.dim();
    std::vector<double> degree(n, 1.0);  // self-loop contributes 1
    for (const auto& e : raw.entries()) degree[e.row] += e.value;

    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(raw.entries().size() + n);
    for (const auto& e : raw.entries())
        entries.push_back({e.row, e.col, e.value / std::sqrt(degree[e.row] * degree[e.col])});
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0 / degree[i]});
    return SparseMatrix(n, std::move(entries));
}

RelationalGraph build_graph(const BidTable& table, const std::set<RelationKind>& active) {
    if (active.empty()) throw ConfigError("build_graph: no active relations");
    const std::size_t n = table.records.size();
    RelationalGraph g;
    g.node_count = n;

    for (RelationKind kind : kAllRelations) {
        if (!active.count(kind)) continue;
        std::vector<Edge> edges;
        switch (kind) {
            case RelationKind::Tender:
                edges = clique_edges(table.rows_by_tender());
                break;
            case RelationKind::Competitor:
                edges = competitor_edges(table);
                break;
            case RelationKind::Location: {
                if (!table.has_location())
                    throw ConfigError("relation 'location' requested but location ids are absent");
                std::map<std::string, std::vector<std::size_t>> groups;
                for (std::size_t i = 0; i < n; ++i)
                    groups[*table.records[i].location_id].push_back(i);
                edges = clique_edges(groups);
                break;
            }
            case RelationKind::Site: {
                if (!table.has_site())
                    throw ConfigError("relation 'site' requested but site ids are absent");
                std::map<std::string, std::vector<std::size_t>> groups;
                for (std::size_t i = 0; i < n; ++i)
                    groups[*table.records[i].site_id].push_back(i);
                edges = clique_edges(groups);
                break;
            }
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        Relation rel;
        rel.kind = kind;
        rel.edges = edges;
        rel.raw = raw_adjacency(n, edges);

        std::vector<SparseMatrix::Entry> looped(rel.raw.entries());
        for (std::size_t i = 0; i < n; ++i) looped.push_back({i, i, 1.0});
        rel.self_looped = SparseMatrix(n, std::move(looped));

        rel.degrees.assign(n, 1.0);
        for (const auto& e : rel.raw.entries()) rel.degrees[e.row] += e.value;
        rel.normalized = normalize_relation(rel.raw);
        g.relations.push_back(std::move(rel));
    }
    return g;
}

Matrix message_pass_reference(const Matrix& h, const RelationalGraph& graph, RelationKind kind) {
    const Relation* rel = graph.find(kind);
    if (!rel) throw ContractError("message_pass_reference: relation not in graph");
    if (h.rows() != graph.node_count)
        throw DimensionError("message_pass_reference: feature row count mismatch");

    // Neighbor lists from the undirected edge list.
    std::vector<std::vector<std::size_t>> nbrs(graph.node_count);
    for (const auto& [a, b] : rel->edges) {
        nbrs[a].push_back(b);
        nbrs[b].push_back(a);
    }
    Matrix out = h;  // self term
    for (std::size_t u = 0; u < graph.node_count; ++u)
        for (std::size_t v : nbrs[u])
            for (std::size_t j = 0; j < h.cols(); ++j) out(u, j) += h(v, j);
    return out;
}

}  // namespace collusion
