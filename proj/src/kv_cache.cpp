#include "clc/kv_cache.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clc {

namespace {

// Top principal directions of the raw (uncentered) row space; preserves
// inner products exactly for rows inside the retained span.
Matrix uncentered_basis(const std::vector<std::vector<double>>& rows, int target_dim) {
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].size());
  Matrix second(d, d);
  for (const auto& r : rows)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) second(a, b) += r[a] * r[b] / n;
  EigResult eig = sym_eig(second);
  Matrix basis(target_dim, d);
  for (int c = 0; c < target_dim; ++c)
    for (int j = 0; j < d; ++j) basis(c, j) = eig.vectors(j, c);
  return basis;
}

std::vector<double> apply_basis(const Matrix& basis, std::span<const double> v) {
  std::vector<double> out(basis.rows, 0.0);
  for (int c = 0; c < basis.rows; ++c) {
    double s = 0.0;
    for (int j = 0; j < basis.cols; ++j) s += basis(c, j) * v[j];
    out[c] = s;
  }
  return out;
}

}  // namespace

std::uint64_t KvCache::insert(std::vector<double> key, std::vector<double> value,
                              std::vector<int> result_ids) {
  if (keys_.empty()) {
    pending_dim_ = static_cast<int>(key.size());
    if (scale_dim_ == 0) scale_dim_ = pending_dim_;
  }
  if (key_basis_) key = apply_basis(*key_basis_, key);
  if (value_basis_) value = apply_basis(*value_basis_, value);
  keys_.push_back(std::move(key));
  values_.push_back(std::move(value));
  results_.push_back(std::move(result_ids));
  hits_.push_back(0);
  clocks_.push_back(clock_++);
  if (keys_.size() > capacity_) evict(capacity_);
  return clocks_.back();
}

std::optional<std::vector<int>> KvCache::lookup(std::span<const double> query,
                                                std::size_t min_results,
                                                double tol) {
  if (keys_.empty()) return std::nullopt;
  std::vector<double> q(query.begin(), query.end());
  if (key_basis_) q = apply_basis(*key_basis_, q);

  int best = -1;
  double best_d2 = tol * tol;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (results_[i].size() < min_results) continue;
    double d2 = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      double d = q[j] - keys_[i][j];
      d2 += d * d;
    }
    if (d2 <= best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::nullopt;
  ++hits_[best];
  std::vector<int> out(results_[best].begin(), results_[best].begin() + min_results);
  return out;
}

KvCache::Attended KvCache::attend(std::span<const double> query) const {
  if (keys_.empty()) throw EmptyCacheError("kv_attend: cache is empty");
  std::vector<double> q(query.begin(), query.end());
  if (key_basis_) q = apply_basis(*key_basis_, q);
  if (q.size() != keys_[0].size())
    throw std::invalid_argument("kv_attend: query dimension mismatch");

  const int n = static_cast<int>(keys_.size());
  Matrix logits(1, n);
  double scale = 1.0 / std::sqrt(static_cast<double>(scale_dim_));
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * keys_[i][j];
    logits(0, i) = dot * scale;
  }
  Matrix w = softmax_rows(logits, 1.0);

  Attended out;
  out.weights.assign(w.data.begin(), w.data.end());
  out.value.assign(values_[0].size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < out.value.size(); ++j)
      out.value[j] += out.weights[i] * values_[i][j];
  return out;
}

void KvCache::compress(int target_dim) {
  if (keys_.empty()) throw EmptyCacheError("kv_compress: cache is empty");
  const int dk = static_cast<int>(keys_[0].size());
  const int dv = static_cast<int>(values_[0].size());
  if (target_dim < 1 || target_dim >= dk || target_dim >= dv)
    throw std::invalid_argument("kv_compress: target dim must be below current dims");

  Matrix kb = uncentered_basis(keys_, target_dim);
  Matrix vb = uncentered_basis(values_, target_dim);
  for (auto& k : keys_) k = apply_basis(kb, k);
  for (auto& v : values_) v = apply_basis(vb, v);

  if (key_basis_) {
    // Chain with any earlier projection so later queries need one step.
    key_basis_ = matmul(kb, *key_basis_);
    value_basis_ = matmul(vb, *value_basis_);
  } else {
    key_basis_ = std::move(kb);
    value_basis_ = std::move(vb);
  }
}

double KvCache::relevance(std::size_t i,
                          const std::vector<std::size_t>& recency_rank) const {
  return static_cast<double>(hits_[i]) + 0.1 * static_cast<double>(recency_rank[i]);
}

void KvCache::evict(std::size_t keep) {
  if (keep == 0) throw std::invalid_argument("kv_evict: keep must be positive");
  if (keep >= keys_.size()) return;

  std::vector<std::size_t> order(keys_.size());
  std::iota(order.begin(), order.end(), 0);
  // Recency rank: 0 = oldest insert.
  std::vector<std::size_t> by_clock = order;
  std::sort(by_clock.begin(), by_clock.end(),
            [&](std::size_t a, std::size_t b) { return clocks_[a] < clocks_[b]; });
  std::vector<std::size_t> rank(keys_.size());
  for (std::size_t r = 0; r < by_clock.size(); ++r) rank[by_clock[r]] = r;

  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double ra = relevance(a, rank), rb = relevance(b, rank);
    if (ra != rb) return ra > rb;
    return clocks_[a] > clocks_[b];  // ties: newer wins
  });
  order.resize(keep);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return clocks_[a] < clocks_[b]; });

  std::vector<std::vector<double>> nk, nv;
  std::vector<std::vector<int>> nr;
  std::vector<std::uint64_t> nh, nc;
  for (std::size_t i : order) {
    nk.push_back(std::move(keys_[i]));
    nv.push_back(std::move(values_[i]));
    nr.push_back(std::move(results_[i]));
    nh.push_back(hits_[i]);
    nc.push_back(clocks_[i]);
  }
  keys_ = std::move(nk);
  values_ = std::move(nv);
  results_ = std::move(nr);
  hits_ = std::move(nh);
  clocks_ = std::move(nc);
}

}  // namespace clc
