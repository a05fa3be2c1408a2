#pragma once

#include "hts/panel.hpp"
#include "hts/represent.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace hts {

struct Partition {
    int k = 0;
    std::vector<int> labels;  // 1..k per point, clusters numbered by medoid index
    std::vector<int> medoids; // ascending
    double cost = 0.0;        // total distance to assigned medoids
    double asw = 0.0;
    std::vector<double> cost_history; // after BUILD, then after each accepted swap
};

/// Partitioning around medoids: greedy BUILD then best-improvement SWAP until
/// no swap lowers the cost. Ties go to the lowest index. 2 <= k <= m - 1.
Partition pam(const Eigen::MatrixXd& d, int k);

/// Per-point silhouette widths; members of singleton clusters get 0.
std::vector<double> silhouettes(const Eigen::MatrixXd& d, const std::vector<int>& labels);
double average_silhouette(const Eigen::MatrixXd& d, const std::vector<int>& labels);

/// pam for k = 2..k_max, keeping the largest ASW (ties to the smaller k).
Partition select_k_by_asw(const Eigen::MatrixXd& d, int k_max);
int default_k_max(int m);

struct MergeTree {
    struct Node {
        int left = -1;
        int right = -1;
        double height = 0.0;
        std::vector<int> members; // sorted leaf indices
    };
    int leaves = 0;
    // Leaves first (0..m-1), then internal nodes in merge order; the last
    // node is the root.
    std::vector<Node> nodes;
};

/// Agglomerative clustering with Ward linkage, Lance-Williams updates on
/// squared distances. Heights are square roots of the merge criterion.
MergeTree ward_tree(const Eigen::MatrixXd& d);

Grouping grouping_from_partition(const Partition& p);
Grouping grouping_from_tree(const MergeTree& t);

/// Rows of all groupings stacked, first occurrence of each row kept.
Grouping grouped_hierarchy(const std::vector<Grouping>& groupings);

/// Member sets to a grouping: sets of size 1 or m are dropped, duplicates
/// removed (first kept).
Grouping grouping_from_sets(const std::vector<std::vector<int>>& sets, int m);

enum class DistanceKind { euclidean, dtw };
enum class ClusterAlgo { medoids, hierarchical };

struct ClusterApproach {
    std::string name;
    RepKind representation;
    DistanceKind distance;
    ClusterAlgo algorithm;
};

/// The twelve clustering approaches. TS = raw series, ER = in-sample errors,
/// a trailing F = their feature vectors; EUC inputs are PCA-reduced, DTW
/// inputs are the standardized series.
const std::vector<ClusterApproach>& cluster_approaches();
bool is_cluster_approach(const std::string& name);
const ClusterApproach& find_cluster_approach(const std::string& name);

struct ClusterOptions {
    double pca_threshold = 0.8;
    int k_max = 0; // 0 -> default_k_max(m)
    int threads = 1;
};

/// Distance matrix for one representation/distance pair. `bottom` and
/// `residuals` are T x m.
Eigen::MatrixXd approach_distance(RepKind rep, DistanceKind dist, const Eigen::MatrixXd& bottom,
                                  const Eigen::MatrixXd& residuals, int s, const ClusterOptions& opt);

Grouping grouping_from_distance(const Eigen::MatrixXd& d, ClusterAlgo algo, const ClusterOptions& opt);

/// Groupings for the named approaches; representations and distance matrices
/// shared between approaches are computed once.
std::map<std::string, Grouping> cluster_groupings(const std::vector<std::string>& names, const Eigen::MatrixXd& bottom,
                                                  const Eigen::MatrixXd& residuals, int s, const ClusterOptions& opt);

} // namespace hts
