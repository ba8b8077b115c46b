#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clc/common.hpp"
#include "clc/numerics.hpp"

namespace clc {

// Attention-queryable key/value store used as a retrieval accelerator.
// Mutation must be externally serialized; correctness never depends on a hit
// (the ball tree stays the source of truth).
class KvCache {
 public:
  explicit KvCache(std::size_t capacity = 300) : capacity_(capacity) {}

  struct Attended {
    std::vector<double> value;
    std::vector<double> weights;
  };

  std::size_t size() const { return keys_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return keys_.empty(); }

  // Inserts an entry; evicts down to capacity when over. Returns the clock
  // stamp assigned.
  std::uint64_t insert(std::vector<double> key, std::vector<double> value,
                       std::vector<int> result_ids);

  // Exact-match lookup: nearest stored key within `tol` Euclidean distance
  // that carries at least `min_results` ids. Bumps the entry's hit count.
  std::optional<std::vector<int>> lookup(std::span<const double> query,
                                         std::size_t min_results,
                                         double tol = 1e-6);

  // softmax(q K^T / sqrt(d_scale)) V. The scale dimension survives
  // compression so that weights are preserved.
  Attended attend(std::span<const double> query) const;

  // Projects keys and values onto their top target_dim principal directions
  // (uncentered, fit on current rows). Queries are projected with the stored
  // basis from then on.
  void compress(int target_dim);

  // Keeps the `keep` highest-relevance entries, relevance = hits +
  // 0.1 * recency rank; ties resolved toward the newer entry.
  void evict(std::size_t keep);

  const std::vector<std::vector<double>>& entry_keys() const { return keys_; }
  const std::vector<std::uint64_t>& hit_counts() const { return hits_; }
  const std::vector<std::uint64_t>& insert_clocks() const { return clocks_; }
  const std::vector<std::vector<int>>& result_ids() const { return results_; }
  int key_dim() const { return keys_.empty() ? pending_dim_ : static_cast<int>(keys_[0].size()); }
  bool compressed() const { return key_basis_.has_value(); }

  // Test hook: overwrite a hit counter.
  void set_hits(std::size_t entry, std::uint64_t hits) { hits_[entry] = hits; }

 private:
  std::vector<double> project_query(std::span<const double> q) const;
  double relevance(std::size_t i, const std::vector<std::size_t>& recency_rank) const;

  std::size_t capacity_;
  std::vector<std::vector<double>> keys_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<int>> results_;
  std::vector<std::uint64_t> hits_;
  std::vector<std::uint64_t> clocks_;
  std::uint64_t clock_ = 0;
  int scale_dim_ = 0;    // original key dim used for the attention temperature
  int pending_dim_ = 0;
  std::optional<Matrix> key_basis_;    // target_dim x d projections
  std::optional<Matrix> value_basis_;
};

}  // namespace clc
