#include "collusion/sparse.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "collusion/errors.hpp"

namespace collusion {

SparseMatrix::SparseMatrix(std::size_t n, std::vector<Entry> entries)
    : n_(n), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (const Entry& e : entries_) {
        if (e.row >= n_ || e.col >= n_)
            throw DimensionError("sparse entry out of range for dim " + std::to_string(n_));
    }
}

Matrix SparseMatrix::multiply(const Matrix& h) const {
    if (h.rows() != n_)
        throw DimensionError("sparse multiply: " + std::to_string(n_) + " vs " +
                             std::to_string(h.rows()) + " rows");
    Matrix out(n_, h.cols());
    const std::size_t f = h.cols();
    for (const Entry& e : entries_) {
        const double* src = h.data() + e.col * f;
        double* dst = out.data() + e.row * f;
        for (std::size_t j = 0; j < f; ++j) dst[j] += e.value * src[j];
    }
    return out;
}

Matrix SparseMatrix::to_dense() const {
    Matrix out(n_, n_);
    for (const Entry& e : entries_) out(e.row, e.col) += e.value;
    return out;
}

}  // namespace collusion
