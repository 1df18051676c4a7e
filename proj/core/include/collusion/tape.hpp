#pragma once

#include <cstddef>
#include <vector>

#include "collusion/matrix.hpp"
#include "collusion/rng.hpp"
#include "collusion/sparse.hpp"

namespace collusion {

// Node handle into a Tape. Plain index; valid only for the tape that minted it.
using NodeId = std::size_t;

enum class OpKind {
    Leaf,
    Matmul,
    Add,
    AddRow,       // m x n plus a 1 x n bias row
    Hadamard,
    Relu,
    SoftmaxRows,
    Log,          // input clamped at 1e-12
    ScaleConst,
    ScaleNode,    // matrix times a 1 x 1 node
    ColScale,     // column j of input times entry j of a 1 x d node
    Sum,          // reduces to 1 x 1
    Dropout,
    Spmm,         // constant sparse left operand times node
};

// Define-by-run reverse-mode autodiff over dense matrices. The tape is
// rebuilt for every forward pass and confined to one thread.
class Tape {
public:
    NodeId leaf(Matrix value);
    // Leaf that never receives a gradient (masks, feature constants).
    NodeId constant(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId add_row(NodeId a, NodeId bias);
    NodeId hadamard(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId softmax_rows(NodeId a);
    NodeId log(NodeId a);
    NodeId scale(NodeId a, double c);
    NodeId scale_node(NodeId a, NodeId scalar);
    NodeId col_scale(NodeId a, NodeId diag);
    NodeId sum(NodeId a);
    // rate in [0, 1). Identity when training is false.
    NodeId dropout(NodeId a, double rate, Rng& rng, bool training);
    NodeId spmm(const SparseMatrix& lhs, NodeId a);

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    const Matrix& grad(NodeId id) const { return nodes_[id].grad; }

    // Seeds the 1x1 loss node with 1 and accumulates gradients into every
    // reachable leaf. Throws ContractError on a non-scalar seed.
    void backward(NodeId loss);

private:
    struct Node {
        OpKind op;
        NodeId a = 0;
        NodeId b = 0;
        bool has_b = false;
        bool wants_grad = true;
        double aux = 0.0;      // scale constant / dropout rate
        Matrix value;
        Matrix grad;
        Matrix mask;           // dropout keep mask, already scaled
        const SparseMatrix* sparse = nullptr;
    };

    NodeId push(Node n);
    std::vector<Node> nodes_;
};

static constexpr double kLogClamp = 1e-12;

}  // namespace collusion
