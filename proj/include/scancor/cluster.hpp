#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "scancor/similarity.hpp"

namespace scancor {

/// One agglomeration step. Nodes 0..n-1 are the leaves in matrix order;
/// merge k creates node n+k. left always belongs to the cluster with the
/// smaller key (a cluster's key is its minimum member address).
struct Merge {
  int left;
  int right;
  double distance;
};

struct Dendrogram {
  std::vector<IpAddress> leaves;
  std::vector<Merge> merges;  // distances are non-decreasing
};

/// Average-linkage agglomeration on d = 1 - sim. Among pairs at the same
/// minimal distance the one whose (smaller key, larger key) is
/// lexicographically least merges first, which pins down the tree for any
/// input order.
Dendrogram upgma(const SimilarityMatrix& m);

struct ClusterCut {
  std::vector<IpAddress> members;    // sorted
  double max_internal_distance = 0;  // 0 for singletons
};

/// Applies exactly the merges with distance <= 1 - t and returns the leaf
/// partition, ordered by smallest member. t above 1 yields all singletons.
std::vector<ClusterCut> cut_clusters(const Dendrogram& dg, double t);
std::vector<std::vector<IpAddress>> cut(const Dendrogram& dg, double t);

/// A correlated group of scanners.
struct Campaign {
  std::vector<IpAddress> members;   // sorted
  double formation_similarity = 1;  // weakest link that formed the group
};

struct CampaignExtraction {
  std::vector<Campaign> campaigns;    // larger first, then smallest member
  std::vector<IpAddress> standalone;  // sorted
  uint64_t distributed_scanners = 0;
  double distributed_fraction = 0;
};

CampaignExtraction extract_campaigns(std::span<const ClusterCut> clusters,
                                     size_t min_size = 2);

/// Cluster count at each threshold, computed from the sorted merge list.
std::vector<std::pair<double, size_t>> sweep_threshold(
    const Dendrogram& dg, std::span<const double> t_grid);

/// Merge list as "left\tright\tdistance" rows.
void write_dendrogram_tsv(std::ostream& out, const Dendrogram& dg);

}  // namespace scancor
