#include "clc/ball_tree.hpp"

#include <algorithm>
#include <cmath>

namespace clc {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Strict (distance, id) ordering; the heap keeps its worst entry at the
// front under this comparator.
bool closer(const BallTree::Neighbor& a, const BallTree::Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

}  // namespace

BallTree BallTree::build(const Matrix& keys, int leaf_size) {
  if (keys.rows < 1) throw std::invalid_argument("BallTree: no points");
  BallTree t;
  t.keys_ = keys;
  t.leaf_size_ = std::max(1, leaf_size);
  std::vector<int> ids(keys.rows);
  for (int i = 0; i < keys.rows; ++i) ids[i] = i;
  t.root_ = t.build_node(ids, 0, keys.rows);
  return t;
}

int BallTree::build_node(std::vector<int>& ids, int lo, int hi) {
  Node node;
  const int d = keys_.cols;
  const int n = hi - lo;

  node.center.assign(d, 0.0);
  for (int i = lo; i < hi; ++i)
    for (int j = 0; j < d; ++j) node.center[j] += keys_(ids[i], j);
  for (double& c : node.center) c /= n;

  double max_d2 = 0.0;
  for (int i = lo; i < hi; ++i)
    max_d2 = std::max(max_d2, dist2(keys_.row(ids[i]), node.center));
  node.radius = std::sqrt(max_d2);

  bool leaf = n <= leaf_size_;
  if (!leaf) {
    // Farthest-pair seeds: a = farthest from centroid, b = farthest from a.
    int seed_a = ids[lo];
    double best = -1.0;
    for (int i = lo; i < hi; ++i) {
      double d2 = dist2(keys_.row(ids[i]), node.center);
      if (d2 > best) {
        best = d2;
        seed_a = ids[i];
      }
    }
    int seed_b = seed_a;
    best = -1.0;
    for (int i = lo; i < hi; ++i) {
      double d2 = dist2(keys_.row(ids[i]), keys_.row(seed_a));
      if (d2 > best) {
        best = d2;
        seed_b = ids[i];
      }
    }
    if (seed_b == seed_a) {
      leaf = true;  // all points coincide
    } else {
      auto nearer_a = [&](int id) {
        return dist2(keys_.row(id), keys_.row(seed_a)) <=
               dist2(keys_.row(id), keys_.row(seed_b));
      };
      int mid = static_cast<int>(std::stable_partition(ids.begin() + lo, ids.begin() + hi,
                                                       nearer_a) -
                                 ids.begin());
      if (mid == lo || mid == hi) {
        leaf = true;
      } else {
        int self = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        int left = build_node(ids, lo, mid);
        int right = build_node(ids, mid, hi);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
      }
    }
  }

  node.points.assign(ids.begin() + lo, ids.begin() + hi);
  std::sort(node.points.begin(), node.points.end());
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<BallTree::Neighbor> BallTree::knn(std::span<const double> query,
                                              int m) const {
  if (m < 1 || m > keys_.rows)
    throw std::invalid_argument("BallTree::knn: m out of range");
  if (static_cast<int>(query.size()) != keys_.cols)
    throw std::invalid_argument("BallTree::knn: query dimension mismatch");

  std::vector<Neighbor> heap;  // max-heap on (distance, id)
  heap.reserve(m + 1);
  search(root_, query, heap, m);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void BallTree::search(int ni, std::span<const double> query,
                      std::vector<Neighbor>& heap, int m) const {
  const Node& node = nodes_[ni];
  double dc = std::sqrt(dist2(query, node.center));
  if (static_cast<int>(heap.size()) == m &&
      dc - node.radius > heap.front().distance)
    return;  // triangle-inequality prune

  if (node.left < 0) {
    for (int id : node.points) {
      Neighbor cand{id, std::sqrt(dist2(query, keys_.row(id)))};
      if (static_cast<int>(heap.size()) < m) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }

  double dl = std::sqrt(dist2(query, nodes_[node.left].center));
  double dr = std::sqrt(dist2(query, nodes_[node.right].center));
  if (dl <= dr) {
    search(node.left, query, heap, m);
    search(node.right, query, heap, m);
  } else {
    search(node.right, query, heap, m);
    search(node.left, query, heap, m);
  }
}

int BallTree::depth() const {
  // Iterative depth over the implicit tree.
  struct Item {
    int node;
    int depth;
  };
  int best = 0;
  std::vector<Item> stack{{root_, 1}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    best = std::max(best, it.depth);
    const Node& n = nodes_[it.node];
    if (n.left >= 0) {
      stack.push_back({n.left, it.depth + 1});
      stack.push_back({n.right, it.depth + 1});
    }
  }
  return best;
}

}  // namespace clc
