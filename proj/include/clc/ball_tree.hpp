#pragma once

#include <vector>

#include "clc/common.hpp"
#include "clc/numerics.hpp"

namespace clc {

// Exact metric-tree index over a fixed point set. Built once, then
// read-only; concurrent queries are safe.
class BallTree {
 public:
  struct Node {
    std::vector<double> center;
    double radius = 0.0;
    int left = -1;   // -1 for leaves
    int right = -1;
    std::vector<int> points;  // leaf payload, point ids
  };

  struct Neighbor {
    int id = -1;
    double distance = 0.0;
  };

  BallTree() = default;

  static BallTree build(const Matrix& keys, int leaf_size = 8);

  // Exact k nearest neighbors by Euclidean distance, ascending by
  // (distance, id). Matches brute force including tie handling.
  std::vector<Neighbor> knn(std::span<const double> query, int m) const;

  int point_count() const { return keys_.rows; }
  int depth() const;
  const std::vector<Node>& nodes() const { return nodes_; }
  const Matrix& keys() const { return keys_; }

 private:
  int build_node(std::vector<int>& ids, int lo, int hi);
  void search(int node, std::span<const double> query,
              std::vector<Neighbor>& heap, int m) const;

  Matrix keys_;
  int leaf_size_ = 8;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace clc
