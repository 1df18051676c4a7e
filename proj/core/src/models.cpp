#include "collusion/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "collusion/errors.hpp"

namespace collusion {

std::string model_kind_name(ModelKind k) {
    return k == ModelKind::FFN ? "nn" : "rgcn";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "nn" || name == "ffn") return ModelKind::FFN;
    if (name == "rgcn" || name == "gnn") return ModelKind::RGCN;
    throw ConfigError("unknown model kind: " + name);
}

std::vector<LayerSpec> three_layer_spec(std::size_t input_dim, std::size_t hidden_units,
                                        std::size_t n_classes) {
    if (hidden_units % 2 != 0) throw ConfigError("hidden_units must be even");
    return {
        {input_dim, hidden_units, 0.20, true},
        {hidden_units, hidden_units / 2, 0.10, true},
        {hidden_units / 2, n_classes, 0.0, false},
    };
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix w(rows, cols);
    for (double& v : w.raw()) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    ModelParams p;
    p.kind = spec.kind;
    p.specs = three_layer_spec(spec.input_dim, spec.hidden_units);
    if (spec.kind == ModelKind::FFN) {
        for (const LayerSpec& ls : p.specs) {
            FfnLayer layer;
            layer.weight = glorot(ls.in_dim, ls.out_dim, rng);
            layer.bias = Matrix(1, ls.out_dim);
            p.ffn.push_back(std::move(layer));
        }
        return p;
    }
    if (spec.relations.empty()) throw ConfigError("RGCN requires at least one relation");
    p.relations = spec.relations;
    for (const LayerSpec& ls : p.specs) {
        RgcnLayer layer;
        layer.mode = spec.mode;
        switch (spec.mode) {
            case DecompMode::Full:
                for (std::size_t r = 0; r < p.relations.size(); ++r)
                    layer.weights.push_back(glorot(ls.in_dim, ls.out_dim, rng));
                break;
            case DecompMode::Basis: {
                if (spec.num_bases == 0) throw ConfigError("num_bases must be positive");
                for (std::size_t b = 0; b < spec.num_bases; ++b)
                    layer.bases.push_back(glorot(ls.in_dim, ls.out_dim, rng));
                const double cb = 1.0 / std::sqrt(static_cast<double>(spec.num_bases));
                for (std::size_t r = 0; r < p.relations.size(); ++r) {
                    std::vector<Matrix> cs;
                    for (std::size_t b = 0; b < spec.num_bases; ++b)
                        cs.push_back(Matrix(1, 1, rng.uniform(-cb, cb)));
                    layer.coeffs.push_back(std::move(cs));
                }
                break;
            }
            case DecompMode::Diagonal:
                if (ls.in_dim != ls.out_dim)
                    throw ConfigError("diagonal decomposition requires in_dim == out_dim");
                for (std::size_t r = 0; r < p.relations.size(); ++r)
                    layer.diagonals.push_back(glorot(1, ls.out_dim, rng));
                break;
        }
        layer.bias = Matrix(1, ls.out_dim);
        p.rgcn.push_back(std::move(layer));
    }
    return p;
}

template <typename Params, typename MatrixPtr>
static std::vector<MatrixPtr> collect_refs(Params& params) {
    std::vector<MatrixPtr> refs;
    if (params.kind == ModelKind::FFN) {
        for (auto& layer : params.ffn) {
            refs.push_back(&layer.weight);
            refs.push_back(&layer.bias);
        }
        return refs;
    }
    for (auto& layer : params.rgcn) {
        switch (layer.mode) {
            case DecompMode::Full:
                for (auto& w : layer.weights) refs.push_back(&w);
                break;
            case DecompMode::Basis:
                for (auto& b : layer.bases) refs.push_back(&b);
                for (auto& cs : layer.coeffs)
                    for (auto& c : cs) refs.push_back(&c);
                break;
            case DecompMode::Diagonal:
                for (auto& d : layer.diagonals) refs.push_back(&d);
                break;
        }
        refs.push_back(&layer.bias);
    }
    return refs;
}

std::vector<Matrix*> parameter_refs(ModelParams& params) {
    return collect_refs<ModelParams, Matrix*>(params);
}

std::vector<const Matrix*> parameter_refs(const ModelParams& params) {
    return collect_refs<const ModelParams, const Matrix*>(params);
}

ForwardPlan ffn_forward(Tape& tape, const ModelParams& params, const Matrix& x, bool training,
                        Rng& rng) {
    if (params.kind != ModelKind::FFN) throw ContractError("ffn_forward on non-FFN params");
    if (x.cols() != params.input_dim())
        throw DimensionError("ffn_forward: expected " + std::to_string(params.input_dim()) +
                             " features, got " + std::to_string(x.cols()));
    ForwardPlan plan;
    NodeId h = tape.constant(x);
    for (std::size_t k = 0; k < params.specs.size(); ++k) {
        const LayerSpec& ls = params.specs[k];
        const FfnLayer& layer = params.ffn[k];
        h = tape.dropout(h, ls.dropout_rate, rng, training);
        NodeId w = tape.leaf(layer.weight);
        NodeId b = tape.leaf(layer.bias);
        plan.params.push_back(w);
        plan.params.push_back(b);
        h = tape.add_row(tape.matmul(h, w), b);
        if (ls.relu) h = tape.relu(h);
    }
    plan.logits = h;
    return plan;
}

ForwardPlan rgcn_forward(Tape& tape, const ModelParams& params, const RelationalGraph& graph,
                         const Matrix& x, bool training, Rng& rng) {
    if (params.kind != ModelKind::RGCN) throw ContractError("rgcn_forward on non-RGCN params");
    if (x.rows() != graph.node_count)
        throw DimensionError("rgcn_forward: " + std::to_string(x.rows()) + " feature rows vs " +
                             std::to_string(graph.node_count) + " graph nodes");
    ForwardPlan plan;
    NodeId h = tape.constant(x);
    for (std::size_t k = 0; k < params.specs.size(); ++k) {
        const LayerSpec& ls = params.specs[k];
        const RgcnLayer& layer = params.rgcn[k];
        h = tape.dropout(h, ls.dropout_rate, rng, training);

        // Register every parameter leaf first so the flat order never
        // depends on which relations the graph carries.
        std::vector<NodeId> weight_nodes;       // Full
        std::vector<NodeId> basis_nodes;        // Basis
        std::vector<std::vector<NodeId>> coeff_nodes;
        std::vector<NodeId> diag_nodes;         // Diagonal
        switch (layer.mode) {
            case DecompMode::Full:
                for (const Matrix& w : layer.weights) {
                    weight_nodes.push_back(tape.leaf(w));
                    plan.params.push_back(weight_nodes.back());
                }
                break;
            case DecompMode::Basis:
                for (const Matrix& b : layer.bases) {
                    basis_nodes.push_back(tape.leaf(b));
                    plan.params.push_back(basis_nodes.back());
                }
                for (const auto& cs : layer.coeffs) {
                    std::vector<NodeId> row;
                    for (const Matrix& c : cs) {
                        row.push_back(tape.leaf(c));
                        plan.params.push_back(row.back());
                    }
                    coeff_nodes.push_back(std::move(row));
                }
                break;
            case DecompMode::Diagonal:
                for (const Matrix& d : layer.diagonals) {
                    diag_nodes.push_back(tape.leaf(d));
                    plan.params.push_back(diag_nodes.back());
                }
                break;
        }
        NodeId bias = tape.leaf(layer.bias);
        plan.params.push_back(bias);

        std::optional<NodeId> acc;
        for (std::size_t r = 0; r < params.relations.size(); ++r) {
            const Relation* rel = graph.find(params.relations[r]);
            if (!rel) continue;  // absent relation contributes zero
            NodeId agg = tape.spmm(rel->normalized, h);
            NodeId term;
            switch (layer.mode) {
                case DecompMode::Full:
                    term = tape.matmul(agg, weight_nodes[r]);
                    break;
                case DecompMode::Basis: {
                    std::optional<NodeId> w;
                    for (std::size_t b = 0; b < basis_nodes.size(); ++b) {
                        NodeId scaled = tape.scale_node(basis_nodes[b], coeff_nodes[r][b]);
                        w = w ? tape.add(*w, scaled) : scaled;
                    }
                    term = tape.matmul(agg, *w);
                    break;
                }
                case DecompMode::Diagonal:
                    term = tape.col_scale(agg, diag_nodes[r]);
                    break;
            }
            acc = acc ? tape.add(*acc, term) : term;
        }
        if (!acc)
            throw ContractError("rgcn_forward: no model relation present in the graph");
        h = tape.add_row(*acc, bias);
        if (ls.relu) h = tape.relu(h);
    }
    plan.logits = h;
    return plan;
}

ForwardPlan model_forward(Tape& tape, const ModelParams& params, const RelationalGraph* graph,
                          const Matrix& x, bool training, Rng& rng) {
    if (params.kind == ModelKind::FFN) return ffn_forward(tape, params, x, training, rng);
    if (!graph) throw ContractError("model_forward: RGCN requires a graph");
    return rgcn_forward(tape, params, *graph, x, training, rng);
}

Matrix predict_probs(const ModelParams& params, const RelationalGraph* graph, const Matrix& x) {
    // Straight-line eval path: no tape, no dropout. Runs once per epoch for
    // validation, so it avoids the autodiff bookkeeping entirely.
    if (params.kind == ModelKind::RGCN && !graph)
        throw ContractError("predict_probs: RGCN requires a graph");
    if (x.cols() != params.input_dim())
        throw DimensionError("predict_probs: expected " + std::to_string(params.input_dim()) +
                             " features, got " + std::to_string(x.cols()));
    Matrix h = x;
    for (std::size_t k = 0; k < params.specs.size(); ++k) {
        const LayerSpec& ls = params.specs[k];
        Matrix z;
        if (params.kind == ModelKind::FFN) {
            z = matmul(h, params.ffn[k].weight);
        } else {
            const RgcnLayer& layer = params.rgcn[k];
            bool any = false;
            for (std::size_t r = 0; r < params.relations.size(); ++r) {
                const Relation* rel = graph->find(params.relations[r]);
                if (!rel) continue;
                const Matrix agg = rel->normalized.multiply(h);
                Matrix term;
                switch (layer.mode) {
                    case DecompMode::Full:
                        term = matmul(agg, layer.weights[r]);
                        break;
                    case DecompMode::Basis: {
                        Matrix w(layer.bases[0].rows(), layer.bases[0].cols());
                        for (std::size_t b = 0; b < layer.bases.size(); ++b) {
                            const double c = layer.coeffs[r][b](0, 0);
                            for (std::size_t i = 0; i < w.size(); ++i)
                                w.raw()[i] += c * layer.bases[b].raw()[i];
                        }
                        term = matmul(agg, w);
                        break;
                    }
                    case DecompMode::Diagonal:
                        term = agg;
                        for (std::size_t i = 0; i < term.rows(); ++i)
                            for (std::size_t j = 0; j < term.cols(); ++j)
                                term(i, j) *= layer.diagonals[r](0, j);
                        break;
                }
                if (!any) {
                    z = std::move(term);
                    any = true;
                } else {
                    for (std::size_t i = 0; i < z.size(); ++i) z.raw()[i] += term.raw()[i];
                }
            }
            if (!any)
                throw ContractError("predict_probs: no model relation present in the graph");
        }
        const Matrix& bias =
            params.kind == ModelKind::FFN ? params.ffn[k].bias : params.rgcn[k].bias;
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) {
                double v = z(i, j) + bias(0, j);
                z(i, j) = (ls.relu && v < 0.0) ? 0.0 : v;
            }
        h = std::move(z);
    }
    // Row-wise softmax with the usual max shift.
    for (std::size_t i = 0; i < h.rows(); ++i) {
        double mx = h(i, 0);
        for (std::size_t j = 1; j < h.cols(); ++j) mx = std::max(mx, h(i, j));
        double total = 0.0;
        for (std::size_t j = 0; j < h.cols(); ++j) total += (h(i, j) = std::exp(h(i, j) - mx));
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) /= total;
    }
    return h;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    out << std::hexfloat;
    for (std::size_t i = 0; i < m.size(); ++i)
        out << m.raw()[i] << (i + 1 == m.size() ? '\n' : ' ');
    out << std::defaultfloat;
}

Matrix read_matrix(std::istream& in, const std::string& expect_name) {
    std::string tag, name;
    std::size_t rows, cols;
    in >> tag >> name >> rows >> cols;
    if (tag != "matrix" || (!expect_name.empty() && name != expect_name))
        throw DataError("checkpoint: expected matrix " + expect_name);
    Matrix m(rows, cols);
    for (double& v : m.raw()) {
        std::string tok;
        in >> tok;
        v = std::strtod(tok.c_str(), nullptr);
    }
    return m;
}

std::string mode_name(DecompMode m) {
    switch (m) {
        case DecompMode::Full: return "full";
        case DecompMode::Basis: return "basis";
        case DecompMode::Diagonal: return "diagonal";
    }
    return "?";
}

DecompMode mode_from_name(const std::string& s) {
    if (s == "full") return DecompMode::Full;
    if (s == "basis") return DecompMode::Basis;
    if (s == "diagonal") return DecompMode::Diagonal;
    throw DataError("checkpoint: unknown decomposition mode " + s);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << "collusion-model v1\n";
    out << "kind " << model_kind_name(params.kind) << '\n';
    out << "layers " << params.specs.size() << '\n';
    for (const LayerSpec& ls : params.specs)
        out << "layer " << ls.in_dim << ' ' << ls.out_dim << ' ' << ls.dropout_rate << ' '
            << (ls.relu ? "relu" : "none") << '\n';
    if (params.kind == ModelKind::FFN) {
        for (std::size_t k = 0; k < params.ffn.size(); ++k) {
            write_matrix(out, "w" + std::to_string(k), params.ffn[k].weight);
            write_matrix(out, "b" + std::to_string(k), params.ffn[k].bias);
        }
        return;
    }
    out << "relations";
    for (RelationKind r : params.relations) out << ' ' << relation_name(r);
    out << '\n';
    out << "mode " << mode_name(params.rgcn.front().mode) << '\n';
    if (params.rgcn.front().mode == DecompMode::Basis)
        out << "bases " << params.rgcn.front().bases.size() << '\n';
    for (std::size_t k = 0; k < params.rgcn.size(); ++k) {
        const RgcnLayer& layer = params.rgcn[k];
        const std::string lk = std::to_string(k);
        switch (layer.mode) {
            case DecompMode::Full:
                for (std::size_t r = 0; r < layer.weights.size(); ++r)
                    write_matrix(out, "w" + lk + "_" + std::to_string(r), layer.weights[r]);
                break;
            case DecompMode::Basis:
                for (std::size_t b = 0; b < layer.bases.size(); ++b)
                    write_matrix(out, "u" + lk + "_" + std::to_string(b), layer.bases[b]);
                for (std::size_t r = 0; r < layer.coeffs.size(); ++r)
                    for (std::size_t b = 0; b < layer.coeffs[r].size(); ++b)
                        write_matrix(out,
                                     "c" + lk + "_" + std::to_string(r) + "_" + std::to_string(b),
                                     layer.coeffs[r][b]);
                break;
            case DecompMode::Diagonal:
                for (std::size_t r = 0; r < layer.diagonals.size(); ++r)
                    write_matrix(out, "d" + lk + "_" + std::to_string(r), layer.diagonals[r]);
                break;
        }
        write_matrix(out, "b" + lk, layer.bias);
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "collusion-model" || version != "v1")
        throw DataError("not a model checkpoint: " + path);
    std::string tag, kind_s;
    in >> tag >> kind_s;
    ModelParams p;
    p.kind = model_kind_from_name(kind_s);
    std::size_t n_layers;
    in >> tag >> n_layers;
    for (std::size_t k = 0; k < n_layers; ++k) {
        LayerSpec ls{};
        std::string act;
        in >> tag >> ls.in_dim >> ls.out_dim >> ls.dropout_rate >> act;
        ls.relu = (act == "relu");
        p.specs.push_back(ls);
    }
    if (p.kind == ModelKind::FFN) {
        for (std::size_t k = 0; k < n_layers; ++k) {
            FfnLayer layer;
            layer.weight = read_matrix(in, "w" + std::to_string(k));
            layer.bias = read_matrix(in, "b" + std::to_string(k));
            p.ffn.push_back(std::move(layer));
        }
        return p;
    }
    std::string line;
    std::getline(in, line);  // rest of layer line
    std::getline(in, line);  // relations line
    {
        std::istringstream ss(line);
        ss >> tag;
        std::string name;
        while (ss >> name) p.relations.push_back(relation_from_name(name));
    }
    std::string mode_s;
    in >> tag >> mode_s;
    const DecompMode mode = mode_from_name(mode_s);
    std::size_t num_bases = 0;
    if (mode == DecompMode::Basis) in >> tag >> num_bases;
    for (std::size_t k = 0; k < n_layers; ++k) {
        RgcnLayer layer;
        layer.mode = mode;
        const std::string lk = std::to_string(k);
        switch (mode) {
            case DecompMode::Full:
                for (std::size_t r = 0; r < p.relations.size(); ++r)
                    layer.weights.push_back(read_matrix(in, "w" + lk + "_" + std::to_string(r)));
                break;
            case DecompMode::Basis:
                for (std::size_t b = 0; b < num_bases; ++b)
                    layer.bases.push_back(read_matrix(in, "u" + lk + "_" + std::to_string(b)));
                for (std::size_t r = 0; r < p.relations.size(); ++r) {
                    std::vector<Matrix> cs;
                    for (std::size_t b = 0; b < num_bases; ++b)
                        cs.push_back(read_matrix(
                            in, "c" + lk + "_" + std::to_string(r) + "_" + std::to_string(b)));
                    layer.coeffs.push_back(std::move(cs));
                }
                break;
            case DecompMode::Diagonal:
                for (std::size_t r = 0; r < p.relations.size(); ++r)
                    layer.diagonals.push_back(read_matrix(in, "d" + lk + "_" + std::to_string(r)));
                break;
        }
        layer.bias = read_matrix(in, "b" + lk);
        p.rgcn.push_back(std::move(layer));
    }
    return p;
}

}  // namespace collusion
