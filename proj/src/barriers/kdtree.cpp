#include "ssp/barriers/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace ssp::barriers {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance_sq < b.distance_sq || (a.distance_sq == b.distance_sq && a.index < b.index);
}

// Keeps `best` sorted and at most k long.
void offer(std::vector<Neighbor>& best, int k, Neighbor cand) {
  if (static_cast<int>(best.size()) == k && !closer(cand, best.back())) return;
  auto pos = std::upper_bound(best.begin(), best.end(), cand, closer);
  best.insert(pos, cand);
  if (static_cast<int>(best.size()) > k) best.pop_back();
}

}  // namespace

KdTree::KdTree(std::vector<Vec> points, int leaf_size) : points_(std::move(points)) {
  if (points_.empty()) return;
  dim_ = static_cast<int>(points_.front().size());
  for (const auto& p : points_) require_dims("kdtree point", p.size(), dim_);
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  root_ = build(0, static_cast<int>(points_.size()), std::max(leaf_size, 1));
}

int KdTree::build(int begin, int end, int leaf_size) {
  NodeData node;
  node.begin = begin;
  node.end = end;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size) return id;

  Vec lo = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
  Vec hi = lo;
  for (int i = begin; i < end; ++i) {
    const Vec& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Eigen::Index axis = 0;
  const double spread = (hi - lo).maxCoeff(&axis);
  if (spread <= 0.0) return id;  // all points identical

  const int mid = begin + (end - begin) / 2;
  const auto ax = axis;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double va = points_[static_cast<std::size_t>(a)](ax);
                     const double vb = points_[static_cast<std::size_t>(b)](ax);
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])](ax);
  const int left = build(begin, mid, leaf_size);
  const int right = build(mid, end, leaf_size);
  nodes_[static_cast<std::size_t>(id)].axis = static_cast<int>(ax);
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(int node_id, const Vec& q, int k, std::vector<Neighbor>& best) const {
  const NodeData& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[static_cast<std::size_t>(i)];
      offer(best, k, Neighbor{idx, (points_[static_cast<std::size_t>(idx)] - q).squaredNorm()});
    }
    return;
  }
  // Left holds coordinates <= split, right holds coordinates >= split.
  const double diff = q(node.axis) - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, q, k, best);
  if (static_cast<int>(best.size()) < k || diff * diff <= best.back().distance_sq) {
    search(far, q, k, best);
  }
}

Neighbor KdTree::nearest(const Vec& query) const {
  const auto res = k_nearest(query, 1);
  return res.front();
}

std::vector<Neighbor> KdTree::k_nearest(const Vec& query, int k) const {
  if (points_.empty()) throw std::invalid_argument("kdtree: empty point set");
  require_dims("kdtree query", query.size(), dim_);
  k = std::min<int>(std::max(k, 1), static_cast<int>(points_.size()));
  std::vector<Neighbor> best;
  best.reserve(static_cast<std::size_t>(k) + 1);
  search(root_, query, k, best);
  return best;
}

std::vector<Neighbor> linear_scan_k_nearest(const std::vector<Vec>& points, const Vec& query, int k) {
  if (points.empty()) throw std::invalid_argument("linear scan: empty point set");
  k = std::min<int>(std::max(k, 1), static_cast<int>(points.size()));
  std::vector<Neighbor> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    offer(best, k, Neighbor{static_cast<int>(i), (points[i] - query).squaredNorm()});
  }
  return best;
}

}  // namespace ssp::barriers
