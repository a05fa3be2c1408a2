#include "hts/cluster.hpp"

#include "hts/distance.hpp"
#include "hts/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace hts {

namespace {

void check_distance(const Eigen::MatrixXd& d) {
    if (d.rows() != d.cols()) {
        throw ArgumentError("distance matrix must be square");
    }
    if (!d.allFinite()) {
        throw ArgumentError("distance matrix has non-finite entries");
    }
}

double total_cost(const Eigen::MatrixXd& d, const std::vector<int>& medoids) {
    double cost = 0.0;
    for (Eigen::Index j = 0; j < d.rows(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int h : medoids) {
            best = std::min(best, d(j, h));
        }
        cost += best;
    }
    return cost;
}

} // namespace

Partition pam(const Eigen::MatrixXd& d, int k) {
    check_distance(d);
    const int m = static_cast<int>(d.rows());
    if (k < 2 || k > m - 1) {
        throw ArgumentError("pam: k = " + std::to_string(k) + " outside 2.." + std::to_string(m - 1));
    }
    std::vector<char> is_medoid(static_cast<size_t>(m), 0);
    std::vector<int> medoids;

    // BUILD
    {
        int first = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double s = d.row(i).sum();
            if (s < best) {
                best = s;
                first = i;
            }
        }
        medoids.push_back(first);
        is_medoid[static_cast<size_t>(first)] = 1;
    }
    Eigen::VectorXd nearest = d.col(medoids[0]);
    while (static_cast<int>(medoids.size()) < k) {
        int pick = -1;
        double best_gain = -1.0;
        for (int i = 0; i < m; ++i) {
            if (is_medoid[static_cast<size_t>(i)]) {
                continue;
            }
            double gain = 0.0;
            for (int j = 0; j < m; ++j) {
                gain += std::max(nearest(j) - d(j, i), 0.0);
            }
            if (gain > best_gain) {
                best_gain = gain;
                pick = i;
            }
        }
        medoids.push_back(pick);
        is_medoid[static_cast<size_t>(pick)] = 1;
        nearest = nearest.cwiseMin(d.col(pick));
    }
    std::sort(medoids.begin(), medoids.end());

    Partition p;
    p.k = k;
    p.cost = total_cost(d, medoids);
    p.cost_history.push_back(p.cost);

    // SWAP
    for (int iter = 0; iter < 10000; ++iter) {
        // Nearest and second-nearest medoid distance per point.
        std::vector<double> d1(static_cast<size_t>(m), std::numeric_limits<double>::infinity());
        std::vector<double> d2(static_cast<size_t>(m), std::numeric_limits<double>::infinity());
        std::vector<int> near(static_cast<size_t>(m), -1);
        for (int j = 0; j < m; ++j) {
            for (int h : medoids) {
                const double v = d(j, h);
                if (v < d1[static_cast<size_t>(j)]) {
                    d2[static_cast<size_t>(j)] = d1[static_cast<size_t>(j)];
                    d1[static_cast<size_t>(j)] = v;
                    near[static_cast<size_t>(j)] = h;
                } else if (v < d2[static_cast<size_t>(j)]) {
                    d2[static_cast<size_t>(j)] = v;
                }
            }
        }
        double best_delta = -1e-12 * (1.0 + p.cost);
        int out_pos = -1;
        int in = -1;
        for (size_t pos = 0; pos < medoids.size(); ++pos) {
            const int h = medoids[pos];
            for (int i = 0; i < m; ++i) {
                if (is_medoid[static_cast<size_t>(i)]) {
                    continue;
                }
                double delta = 0.0;
                for (int j = 0; j < m; ++j) {
                    const auto uj = static_cast<size_t>(j);
                    const double keep = near[uj] == h ? d2[uj] : d1[uj];
                    delta += std::min(keep, d(j, i)) - d1[uj];
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    out_pos = static_cast<int>(pos);
                    in = i;
                }
            }
        }
        if (out_pos < 0) {
            break;
        }
        is_medoid[static_cast<size_t>(medoids[static_cast<size_t>(out_pos)])] = 0;
        is_medoid[static_cast<size_t>(in)] = 1;
        medoids[static_cast<size_t>(out_pos)] = in;
        std::sort(medoids.begin(), medoids.end());
        p.cost = total_cost(d, medoids);
        p.cost_history.push_back(p.cost);
    }

    p.medoids = medoids;
    p.labels.assign(static_cast<size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
        int label = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const int h = medoids[static_cast<size_t>(c)];
            if (h == j) {
                label = c;
                break;
            }
            if (d(j, h) < best) {
                best = d(j, h);
                label = c;
            }
        }
        p.labels[static_cast<size_t>(j)] = label + 1;
    }
    p.asw = average_silhouette(d, p.labels);
    return p;
}

std::vector<double> silhouettes(const Eigen::MatrixXd& d, const std::vector<int>& labels) {
    check_distance(d);
    const int m = static_cast<int>(d.rows());
    if (static_cast<int>(labels.size()) != m) {
        throw ArgumentError("silhouette: label count does not match distance matrix");
    }
    const int k = *std::max_element(labels.begin(), labels.end());
    std::vector<int> size(static_cast<size_t>(k + 1), 0);
    for (int l : labels) {
        ++size[static_cast<size_t>(l)];
    }
    std::vector<double> out(static_cast<size_t>(m), 0.0);
    std::vector<double> sums(static_cast<size_t>(k + 1));
    for (int i = 0; i < m; ++i) {
        const int own = labels[static_cast<size_t>(i)];
        if (size[static_cast<size_t>(own)] < 2) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (int j = 0; j < m; ++j) {
            if (j != i) {
                sums[static_cast<size_t>(labels[static_cast<size_t>(j)])] += d(i, j);
            }
        }
        const double a = sums[static_cast<size_t>(own)] / (size[static_cast<size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 1; c <= k; ++c) {
            if (c != own && size[static_cast<size_t>(c)] > 0) {
                b = std::min(b, sums[static_cast<size_t>(c)] / size[static_cast<size_t>(c)]);
            }
        }
        if (!std::isfinite(b)) {
            continue; // a single cluster has no silhouette
        }
        const double scale = std::max(a, b);
        out[static_cast<size_t>(i)] = scale > 0.0 ? (b - a) / scale : 0.0;
    }
    return out;
}

double average_silhouette(const Eigen::MatrixXd& d, const std::vector<int>& labels) {
    const auto s = silhouettes(d, labels);
    double sum = 0.0;
    for (double v : s) {
        sum += v;
    }
    return s.empty() ? 0.0 : sum / static_cast<double>(s.size());
}

int default_k_max(int m) {
    return std::min(10, m - 1);
}

Partition select_k_by_asw(const Eigen::MatrixXd& d, int k_max) {
    const int m = static_cast<int>(d.rows());
    if (k_max < 2 || k_max > m - 1) {
        throw ArgumentError("select_k_by_asw: k_max = " + std::to_string(k_max) + " outside 2.." +
                            std::to_string(m - 1));
    }
    Partition best = pam(d, 2);
    for (int k = 3; k <= k_max; ++k) {
        Partition p = pam(d, k);
        if (p.asw > best.asw) {
            best = std::move(p);
        }
    }
    return best;
}

MergeTree ward_tree(const Eigen::MatrixXd& d) {
    check_distance(d);
    const int m = static_cast<int>(d.rows());
    if (m < 2) {
        throw ArgumentError("ward_tree needs at least two points");
    }
    MergeTree tree;
    tree.leaves = m;
    tree.nodes.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        tree.nodes[static_cast<size_t>(i)].members = {i};
    }
    Eigen::MatrixXd d2 = d.cwiseAbs2();
    std::vector<int> node(static_cast<size_t>(m));
    std::vector<double> size(static_cast<size_t>(m), 1.0);
    std::vector<char> active(static_cast<size_t>(m), 1);
    for (int i = 0; i < m; ++i) {
        node[static_cast<size_t>(i)] = i;
    }

    for (int step = 0; step < m - 1; ++step) {
        int bi = -1;
        int bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (!active[static_cast<size_t>(i)]) {
                continue;
            }
            for (int j = i + 1; j < m; ++j) {
                if (active[static_cast<size_t>(j)] && d2(i, j) < best) {
                    best = d2(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        MergeTree::Node merged;
        merged.left = node[static_cast<size_t>(bi)];
        merged.right = node[static_cast<size_t>(bj)];
        merged.height = std::sqrt(std::max(best, 0.0));
        const auto& a = tree.nodes[static_cast<size_t>(merged.left)].members;
        const auto& b = tree.nodes[static_cast<size_t>(merged.right)].members;
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged.members));
        tree.nodes.push_back(std::move(merged));

        const double ni = size[static_cast<size_t>(bi)];
        const double nj = size[static_cast<size_t>(bj)];
        for (int k = 0; k < m; ++k) {
            if (!active[static_cast<size_t>(k)] || k == bi || k == bj) {
                continue;
            }
            const double nk = size[static_cast<size_t>(k)];
            const double v = ((ni + nk) * d2(bi, k) + (nj + nk) * d2(bj, k) - nk * best) / (ni + nj + nk);
            d2(bi, k) = d2(k, bi) = v;
        }
        size[static_cast<size_t>(bi)] = ni + nj;
        active[static_cast<size_t>(bj)] = 0;
        node[static_cast<size_t>(bi)] = static_cast<int>(tree.nodes.size()) - 1;
    }
    return tree;
}

Grouping grouping_from_sets(const std::vector<std::vector<int>>& sets, int m) {
    std::vector<Eigen::RowVectorXd> rows;
    std::set<std::vector<int>> seen;
    for (const auto& raw : sets) {
        std::vector<int> s = raw;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (s.size() <= 1 || static_cast<int>(s.size()) >= m) {
            continue;
        }
        if (!seen.insert(s).second) {
            continue;
        }
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
        for (int j : s) {
            if (j < 0 || j >= m) {
                throw ArgumentError("member index out of range");
            }
            row(j) = 1.0;
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        return Grouping(m);
    }
    Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), m);
    for (size_t r = 0; r < rows.size(); ++r) {
        c.row(static_cast<Eigen::Index>(r)) = rows[r];
    }
    return Grouping(std::move(c));
}

Grouping grouping_from_partition(const Partition& p) {
    const int m = static_cast<int>(p.labels.size());
    std::vector<std::vector<int>> sets(static_cast<size_t>(p.k));
    for (int j = 0; j < m; ++j) {
        const int l = p.labels[static_cast<size_t>(j)];
        if (l < 1 || l > p.k) {
            throw ArgumentError("partition label outside 1..k");
        }
        sets[static_cast<size_t>(l - 1)].push_back(j);
    }
    return grouping_from_sets(sets, m);
}

Grouping grouping_from_tree(const MergeTree& t) {
    std::vector<std::vector<int>> sets;
    // Internal nodes except the root.
    for (size_t i = static_cast<size_t>(t.leaves); i + 1 < t.nodes.size(); ++i) {
        sets.push_back(t.nodes[i].members);
    }
    return grouping_from_sets(sets, t.leaves);
}

Grouping grouped_hierarchy(const std::vector<Grouping>& groupings) {
    if (groupings.empty()) {
        throw ArgumentError("grouped hierarchy needs at least one grouping");
    }
    const int m = groupings.front().m();
    std::vector<std::vector<int>> sets;
    for (const auto& g : groupings) {
        if (g.m() != m) {
            throw ArgumentError("grouped hierarchy: groupings cover different numbers of bottom series");
        }
        for (int r = 0; r < g.rows(); ++r) {
            sets.push_back(g.members(r));
        }
    }
    return grouping_from_sets(sets, m);
}

const std::vector<ClusterApproach>& cluster_approaches() {
    using R = RepKind;
    using D = DistanceKind;
    using A = ClusterAlgo;
    static const std::vector<ClusterApproach> list{
        {"TS-EUC-ME", R::raw, D::euclidean, A::medoids},
        {"ER-EUC-ME", R::residual, D::euclidean, A::medoids},
        {"TSF-EUC-ME", R::raw_features, D::euclidean, A::medoids},
        {"ERF-EUC-ME", R::residual_features, D::euclidean, A::medoids},
        {"TS-EUC-HC", R::raw, D::euclidean, A::hierarchical},
        {"ER-EUC-HC", R::residual, D::euclidean, A::hierarchical},
        {"TSF-EUC-HC", R::raw_features, D::euclidean, A::hierarchical},
        {"ERF-EUC-HC", R::residual_features, D::euclidean, A::hierarchical},
        {"TS-DTW-ME", R::raw, D::dtw, A::medoids},
        {"TS-DTW-HC", R::raw, D::dtw, A::hierarchical},
        {"ER-DTW-ME", R::residual, D::dtw, A::medoids},
        {"ER-DTW-HC", R::residual, D::dtw, A::hierarchical},
    };
    return list;
}

bool is_cluster_approach(const std::string& name) {
    const auto& list = cluster_approaches();
    return std::any_of(list.begin(), list.end(), [&](const ClusterApproach& a) { return a.name == name; });
}

const ClusterApproach& find_cluster_approach(const std::string& name) {
    for (const auto& a : cluster_approaches()) {
        if (a.name == name) {
            return a;
        }
    }
    throw ConfigError("unknown clustering approach '" + name + "'");
}

Eigen::MatrixXd approach_distance(RepKind rep, DistanceKind dist, const Eigen::MatrixXd& bottom,
                                  const Eigen::MatrixXd& residuals, int s, const ClusterOptions& opt) {
    const bool on_errors = rep == RepKind::residual || rep == RepKind::residual_features;
    const Representation r = build_representation(rep, on_errors ? residuals : bottom, s, opt.threads);
    if (dist == DistanceKind::dtw) {
        if (is_feature_kind(rep)) {
            throw ConfigError("DTW is not defined on feature representations");
        }
        return dtw_matrix(r.data, opt.threads);
    }
    return euclidean_matrix(pca_reduce(r.data, opt.pca_threshold));
}

Grouping grouping_from_distance(const Eigen::MatrixXd& d, ClusterAlgo algo, const ClusterOptions& opt) {
    const int m = static_cast<int>(d.rows());
    if (algo == ClusterAlgo::hierarchical) {
        return grouping_from_tree(ward_tree(d));
    }
    if (m < 3) {
        throw ArgumentError("k-medoids needs at least three bottom series");
    }
    const int k_max = opt.k_max > 0 ? std::min(opt.k_max, m - 1) : default_k_max(m);
    return grouping_from_partition(select_k_by_asw(d, k_max));
}

std::map<std::string, Grouping> cluster_groupings(const std::vector<std::string>& names, const Eigen::MatrixXd& bottom,
                                                  const Eigen::MatrixXd& residuals, int s, const ClusterOptions& opt) {
    std::map<std::pair<RepKind, DistanceKind>, Eigen::MatrixXd> distances;
    std::map<std::string, Grouping> out;
    for (const auto& name : names) {
        const auto& a = find_cluster_approach(name);
        const auto key = std::make_pair(a.representation, a.distance);
        auto it = distances.find(key);
        if (it == distances.end()) {
            it = distances.emplace(key, approach_distance(a.representation, a.distance, bottom, residuals, s, opt)).first;
        }
        out.emplace(name, grouping_from_distance(it->second, a.algorithm, opt));
    }
    return out;
}

} // namespace hts
