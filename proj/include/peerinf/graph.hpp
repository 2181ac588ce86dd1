#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/errors.hpp"

namespace peerinf {

/// Binary tie structure on n nodes. Stores both a dense bitmap (for O(1)
/// lookups) and row-wise neighbor lists (for sparse products). Self-ties are
/// rejected; undirected graphs are kept symmetric.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n, bool directed = false)
      : n_(n), directed_(directed), bits_(n * n, 0), rows_(n) {}

  std::size_t size() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }

  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }

  /// Adds tie i->j (and j->i when undirected). Idempotent.
  void add_edge(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_) throw DomainError("edge endpoint out of range");
    if (i == j) throw DomainError("self-ties are not allowed");
    set_one(i, j);
    if (!directed_) set_one(j, i);
  }

  /// Nodes j with A(i,j) = 1, in insertion order.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return rows_[i]; }
  std::size_t degree(std::size_t i) const { return rows_[i].size(); }

  /// Number of ties; each undirected tie counted once.
  std::size_t edge_count() const noexcept { return directed_ ? arcs_ : arcs_ / 2; }

  /// Sorted list of ties; (i,j) with i<j when undirected.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = directed_ ? 0 : i + 1; j < n_; ++j)
        if ((*this)(i, j)) out.emplace_back(i, j);
    return out;
  }

  /// y = A x, using the neighbor lists.
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != n_) throw ShapeError("A*x: length mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j : rows_[i]) s += x[static_cast<Eigen::Index>(j)];
      y[static_cast<Eigen::Index>(i)] = s;
    }
    return y;
  }

  /// Y = A X for a block of column vectors.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != n_) throw ShapeError("A*X: row mismatch");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j : rows_[i]) y.row(static_cast<Eigen::Index>(i)) += x.row(static_cast<Eigen::Index>(j));
    return y;
  }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j : rows_[i]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    return m;
  }

  bool operator==(const AdjacencyMatrix& o) const {
    return n_ == o.n_ && directed_ == o.directed_ && bits_ == o.bits_;
  }

 private:
  void set_one(std::size_t i, std::size_t j) {
    auto& b = bits_[i * n_ + j];
    if (b) return;
    b = 1;
    rows_[i].push_back(j);
    ++arcs_;
  }

  std::size_t n_ = 0;
  bool directed_ = false;
  std::size_t arcs_ = 0;
  std::vector<std::uint8_t> bits_;
  std::vector<std::vector<std::size_t>> rows_;
};

}  // namespace peerinf
