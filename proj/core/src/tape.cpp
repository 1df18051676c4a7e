#include "collusion/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "collusion/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace collusion {

namespace {
// Tape buffers are allocated and freed once per epoch; past glibc's mmap
// threshold every one becomes an mmap/munmap round trip that dominates the
// training wall time. Keep the blocks on the free list instead.
[[maybe_unused]] const bool malloc_tuned = [] {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    return true;
}();
}  // namespace

NodeId Tape::push(Node n) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

NodeId Tape::leaf(Matrix value) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::constant(Matrix value) {
    Node n;
    n.op = OpKind::Leaf;
    n.wants_grad = false;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = OpKind::Matmul;
    n.a = a;
    n.b = b;
    n.has_b = true;
    n.value = collusion::matmul(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = OpKind::Add;
    n.a = a;
    n.b = b;
    n.has_b = true;
    n.value = collusion::add(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

NodeId Tape::add_row(NodeId a, NodeId bias) {
    const Matrix& av = nodes_[a].value;
    const Matrix& bv = nodes_[bias].value;
    if (bv.rows() != 1 || bv.cols() != av.cols())
        throw DimensionError("add_row: bias must be 1x" + std::to_string(av.cols()));
    Node n;
    n.op = OpKind::AddRow;
    n.a = a;
    n.b = bias;
    n.has_b = true;
    n.value = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) n.value(i, j) += bv(0, j);
    return push(std::move(n));
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
    Node n;
    n.op = OpKind::Hadamard;
    n.a = a;
    n.b = b;
    n.has_b = true;
    n.value = collusion::hadamard(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    Node n;
    n.op = OpKind::Relu;
    n.a = a;
    n.value = nodes_[a].value;
    for (double& v : n.value.raw())
        if (v < 0.0) v = 0.0;
    return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId a) {
    const Matrix& x = nodes_[a].value;
    Node n;
    n.op = OpKind::SoftmaxRows;
    n.a = a;
    n.value = Matrix(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = x(i, 0);
        for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            n.value(i, j) = std::exp(x(i, j) - mx);
            denom += n.value(i, j);
        }
        for (std::size_t j = 0; j < x.cols(); ++j) n.value(i, j) /= denom;
    }
    return push(std::move(n));
}

NodeId Tape::log(NodeId a) {
    Node n;
    n.op = OpKind::Log;
    n.a = a;
    n.value = nodes_[a].value;
    for (double& v : n.value.raw()) v = std::log(std::max(v, kLogClamp));
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
    Node n;
    n.op = OpKind::ScaleConst;
    n.a = a;
    n.aux = c;
    n.value = collusion::scale(nodes_[a].value, c);
    return push(std::move(n));
}

NodeId Tape::scale_node(NodeId a, NodeId scalar) {
    const Matrix& sv = nodes_[scalar].value;
    if (sv.rows() != 1 || sv.cols() != 1)
        throw ContractError("scale_node: scalar operand must be 1x1");
    Node n;
    n.op = OpKind::ScaleNode;
    n.a = a;
    n.b = scalar;
    n.has_b = true;
    n.value = collusion::scale(nodes_[a].value, sv(0, 0));
    return push(std::move(n));
}

NodeId Tape::col_scale(NodeId a, NodeId diag) {
    const Matrix& av = nodes_[a].value;
    const Matrix& dv = nodes_[diag].value;
    if (dv.rows() != 1 || dv.cols() != av.cols())
        throw DimensionError("col_scale: diag must be 1x" + std::to_string(av.cols()));
    Node n;
    n.op = OpKind::ColScale;
    n.a = a;
    n.b = diag;
    n.has_b = true;
    n.value = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) n.value(i, j) *= dv(0, j);
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = OpKind::Sum;
    n.a = a;
    n.value = Matrix(1, 1, collusion::sum(nodes_[a].value));
    return push(std::move(n));
}

NodeId Tape::dropout(NodeId a, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    Node n;
    n.op = OpKind::Dropout;
    n.a = a;
    n.aux = rate;
    const Matrix& x = nodes_[a].value;
    n.mask = Matrix(x.rows(), x.cols(), 1.0);
    if (training && rate > 0.0) {
        // Inverted scaling: survivors carry 1/(1-rate) so inference is a
        // plain forward pass.
        const double keep_scale = 1.0 / (1.0 - rate);
        for (double& m : n.mask.raw()) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
    }
    n.value = collusion::hadamard(x, n.mask);
    return push(std::move(n));
}

NodeId Tape::spmm(const SparseMatrix& lhs, NodeId a) {
    Node n;
    n.op = OpKind::Spmm;
    n.a = a;
    n.sparse = &lhs;
    n.value = lhs.multiply(nodes_[a].value);
    return push(std::move(n));
}

void Tape::backward(NodeId loss) {
    Node& seed = nodes_[loss];
    if (seed.value.rows() != 1 || seed.value.cols() != 1)
        throw ContractError("backward: seed must be a 1x1 scalar");
    seed.grad(0, 0) = 1.0;

    for (NodeId id = loss + 1; id-- > 0;) {
        Node& n = nodes_[id];
        const Matrix& g = n.grad;
        switch (n.op) {
            case OpKind::Leaf:
                break;
            case OpKind::Matmul: {
                Node& na = nodes_[n.a];
                Node& nb = nodes_[n.b];
                na.grad = collusion::add(na.grad, collusion::matmul(g, transpose(nb.value)));
                nb.grad = collusion::add(nb.grad, collusion::matmul(transpose(na.value), g));
                break;
            }
            case OpKind::Add: {
                nodes_[n.a].grad = collusion::add(nodes_[n.a].grad, g);
                nodes_[n.b].grad = collusion::add(nodes_[n.b].grad, g);
                break;
            }
            case OpKind::AddRow: {
                nodes_[n.a].grad = collusion::add(nodes_[n.a].grad, g);
                Matrix& bg = nodes_[n.b].grad;
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) bg(0, j) += g(i, j);
                break;
            }
            case OpKind::Hadamard: {
                nodes_[n.a].grad =
                    collusion::add(nodes_[n.a].grad, collusion::hadamard(g, nodes_[n.b].value));
                nodes_[n.b].grad =
                    collusion::add(nodes_[n.b].grad, collusion::hadamard(g, nodes_[n.a].value));
                break;
            }
            case OpKind::Relu: {
                Matrix& ag = nodes_[n.a].grad;
                const Matrix& x = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (x.raw()[i] > 0.0) ag.raw()[i] += g.raw()[i];
                break;
            }
            case OpKind::SoftmaxRows: {
                Matrix& ag = nodes_[n.a].grad;
                const Matrix& p = n.value;
                for (std::size_t i = 0; i < p.rows(); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < p.cols(); ++j) dot += g(i, j) * p(i, j);
                    for (std::size_t j = 0; j < p.cols(); ++j)
                        ag(i, j) += p(i, j) * (g(i, j) - dot);
                }
                break;
            }
            case OpKind::Log: {
                Matrix& ag = nodes_[n.a].grad;
                const Matrix& x = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (x.raw()[i] > kLogClamp) ag.raw()[i] += g.raw()[i] / x.raw()[i];
                break;
            }
            case OpKind::ScaleConst: {
                nodes_[n.a].grad =
                    collusion::add(nodes_[n.a].grad, collusion::scale(g, n.aux));
                break;
            }
            case OpKind::ScaleNode: {
                const double c = nodes_[n.b].value(0, 0);
                nodes_[n.a].grad = collusion::add(nodes_[n.a].grad, collusion::scale(g, c));
                double acc = 0.0;
                const Matrix& x = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i) acc += g.raw()[i] * x.raw()[i];
                nodes_[n.b].grad(0, 0) += acc;
                break;
            }
            case OpKind::ColScale: {
                Matrix& ag = nodes_[n.a].grad;
                Matrix& dg = nodes_[n.b].grad;
                const Matrix& x = nodes_[n.a].value;
                const Matrix& d = nodes_[n.b].value;
                for (std::size_t i = 0; i < x.rows(); ++i)
                    for (std::size_t j = 0; j < x.cols(); ++j) {
                        ag(i, j) += g(i, j) * d(0, j);
                        dg(0, j) += g(i, j) * x(i, j);
                    }
                break;
            }
            case OpKind::Sum: {
                Matrix& ag = nodes_[n.a].grad;
                const double gv = g(0, 0);
                for (double& v : ag.raw()) v += gv;
                break;
            }
            case OpKind::Dropout: {
                nodes_[n.a].grad =
                    collusion::add(nodes_[n.a].grad, collusion::hadamard(g, n.mask));
                break;
            }
            case OpKind::Spmm: {
                // d/dA of S*A is S^T applied to the upstream gradient.
                Matrix& ag = nodes_[n.a].grad;
                const std::size_t f = g.cols();
                for (const SparseMatrix::Entry& e : n.sparse->entries()) {
                    const double* src = g.data() + e.row * f;
                    double* dst = ag.data() + e.col * f;
                    for (std::size_t j = 0; j < f; ++j) dst[j] += e.value * src[j];
                }
                break;
            }
        }
    }
}

}  // namespace collusion
