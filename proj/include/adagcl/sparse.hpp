#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "adagcl/common.hpp"

namespace adagcl {

// Row-compressed sparse matrix. Column indices are strictly ascending
// within each row.
template <class T>
struct SparseMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<std::int32_t> indptr;   // size rows+1
  std::vector<std::int32_t> indices;  // size nnz
  std::vector<T> values;              // size nnz

  std::int64_t nnz() const { return static_cast<std::int64_t>(indices.size()); }

  static SparseMatrix from_coo(std::int32_t rows, std::int32_t cols,
                               std::vector<std::int32_t> ri,
                               std::vector<std::int32_t> ci,
                               std::vector<T> vals) {
    if (ri.size() != ci.size() || ri.size() != vals.size())
      throw DataError("from_coo: length mismatch");
    const std::size_t n = ri.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ri[a] != ri[b] ? ri[a] < ri[b] : ci[a] < ci[b];
    });
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.indptr.assign(static_cast<std::size_t>(rows) + 1, 0);
    m.indices.resize(n);
    m.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t s = order[k];
      m.indices[k] = ci[s];
      m.values[k] = vals[s];
      m.indptr[static_cast<std::size_t>(ri[s]) + 1]++;
    }
    for (std::int32_t r = 0; r < rows; ++r) m.indptr[r + 1] += m.indptr[r];
    return m;
  }

  // Transposed copy; if perm != nullptr it receives, for each entry of the
  // transpose, the position of the same logical entry in *this.
  SparseMatrix transposed(std::vector<std::int32_t>* perm = nullptr) const {
    SparseMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.indptr.assign(static_cast<std::size_t>(cols) + 1, 0);
    t.indices.resize(indices.size());
    t.values.resize(values.size());
    if (perm) perm->resize(indices.size());
    for (std::int32_t c : indices) t.indptr[static_cast<std::size_t>(c) + 1]++;
    for (std::int32_t c = 0; c < cols; ++c) t.indptr[c + 1] += t.indptr[c];
    std::vector<std::int32_t> cursor(t.indptr.begin(), t.indptr.end() - 1);
    for (std::int32_t r = 0; r < rows; ++r) {
      for (std::int32_t k = indptr[r]; k < indptr[r + 1]; ++k) {
        const std::int32_t c = indices[k];
        const std::int32_t at = cursor[c]++;
        t.indices[at] = r;
        t.values[at] = values[k];
        if (perm) (*perm)[at] = k;
      }
    }
    return t;
  }

  std::vector<T> to_dense() const {
    std::vector<T> d(static_cast<std::size_t>(rows) * cols, T{0});
    for (std::int32_t r = 0; r < rows; ++r)
      for (std::int32_t k = indptr[r]; k < indptr[r + 1]; ++k)
        d[static_cast<std::size_t>(r) * cols + indices[k]] = values[k];
    return d;
  }

  static SparseMatrix identity(std::int32_t n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.indptr.resize(static_cast<std::size_t>(n) + 1);
    m.indices.resize(n);
    m.values.assign(n, T{1});
    for (std::int32_t i = 0; i <= n; ++i) m.indptr[i] = i;
    for (std::int32_t i = 0; i < n; ++i) m.indices[i] = i;
    return m;
  }
};

}  // namespace adagcl
