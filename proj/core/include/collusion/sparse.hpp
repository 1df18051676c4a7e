#pragma once

#include <cstddef>
#include <vector>

#include "collusion/matrix.hpp"

namespace collusion {

// Symmetric sparse matrix in sorted coordinate form. Used for the
// per-relation adjacencies; m stays small enough that CSR is unnecessary.
class SparseMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;
    SparseMatrix(std::size_t n, std::vector<Entry> entries);

    std::size_t dim() const { return n_; }
    const std::vector<Entry>& entries() const { return entries_; }

    // out = this * h (dense right operand).
    Matrix multiply(const Matrix& h) const;

    Matrix to_dense() const;

private:
    std::size_t n_ = 0;
    std::vector<Entry> entries_;  // sorted by (row, col)
};

}  // namespace collusion
