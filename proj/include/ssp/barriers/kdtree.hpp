#pragma once

#include "ssp/linalg_ad/types.hpp"

#include <vector>

namespace ssp::barriers {

struct Neighbor {
  int index = -1;
  double distance_sq = 0.0;
};

// Exact nearest-neighbour index over a fixed point set. Ties are broken by
// the lowest original index, so results match a linear scan exactly.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec> points, int leaf_size = 8);

  Neighbor nearest(const Vec& query) const;
  // Sorted by (distance, index).
  std::vector<Neighbor> k_nearest(const Vec& query, int k) const;

  std::size_t size() const { return points_.size(); }
  int dim() const { return dim_; }
  const Vec& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

 private:
  struct NodeData {
    int begin = 0;
    int end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end, int leaf_size);
  void search(int node, const Vec& q, int k, std::vector<Neighbor>& heap) const;

  std::vector<Vec> points_;
  std::vector<int> order_;
  std::vector<NodeData> nodes_;
  int dim_ = 0;
  int root_ = -1;
};

// Reference linear scan with the same tie-breaking.
std::vector<Neighbor> linear_scan_k_nearest(const std::vector<Vec>& points, const Vec& query, int k);

}  // namespace ssp::barriers
