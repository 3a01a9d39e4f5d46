#ifndef COVDEN_LINKAGE_HPP
#define COVDEN_LINKAGE_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include "covden/types.hpp"

namespace covden {

enum class Linkage { average, single };

/// Internal node of a dendrogram. Children use the scipy numbering: ids below
/// the leaf count are leaves, id `leaf_count + k` is the k-th merge.
struct DendrogramNode {
    Index left;
    Index right;
    double height;
    std::vector<Index> members;  // sorted leaf indices
};

struct Dendrogram {
    Index leaf_count = 0;
    std::vector<DendrogramNode> nodes;  // in merge order; the last one is the root

    /// Height of the lowest common ancestor of every leaf pair; zero diagonal.
    Matrix cophenetic() const {
        Matrix d = Matrix::Zero(leaf_count, leaf_count);
        for (const DendrogramNode& node : nodes) {
            const auto& a = members_of(node.left);
            const auto& b = members_of(node.right);
            for (Index i : a) {
                for (Index j : b) {
                    d(i, j) = node.height;
                    d(j, i) = node.height;
                }
            }
        }
        return d;
    }

    std::vector<Index> members_of(Index id) const {
        if (id < leaf_count) return {id};
        return nodes[static_cast<std::size_t>(id - leaf_count)].members;
    }
};

/// Agglomerative clustering on a symmetric distance matrix.
///
/// Distances between merged clusters follow the Lance-Williams recurrence
/// (size-weighted mean for average linkage, minimum for single linkage). Each
/// step merges the closest pair of active clusters; ties go to the
/// lexicographically lowest (i, j) of the current cluster slots, where a merged
/// cluster takes the lower of its two slots.
inline Dendrogram build_dendrogram(const Matrix& distance, Linkage linkage) {
    const Index p = distance.rows();
    if (p != distance.cols()) throw InvalidParameter("build_dendrogram: distance matrix must be square");
    if (p == 0) throw InvalidParameter("build_dendrogram: empty distance matrix");

    Matrix d = distance;
    std::vector<bool> active(static_cast<std::size_t>(p), true);
    std::vector<Index> node_id(static_cast<std::size_t>(p));
    std::vector<Index> size(static_cast<std::size_t>(p), 1);
    std::vector<double> height_of(static_cast<std::size_t>(p), 0.0);
    for (Index i = 0; i < p; ++i) node_id[static_cast<std::size_t>(i)] = i;

    Dendrogram tree;
    tree.leaf_count = p;
    tree.nodes.reserve(static_cast<std::size_t>(p > 0 ? p - 1 : 0));

    for (Index step = 0; step + 1 < p; ++step) {
        Index bi = -1;
        Index bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < p; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (Index j = i + 1; j < p; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (d(i, j) < best || bi < 0) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const auto ui = static_cast<std::size_t>(bi);
        const auto uj = static_cast<std::size_t>(bj);

        DendrogramNode node;
        node.left = node_id[ui];
        node.right = node_id[uj];
        node.height = std::max({best, height_of[ui], height_of[uj]});
        node.members = tree.members_of(node.left);
        const auto right = tree.members_of(node.right);
        node.members.insert(node.members.end(), right.begin(), right.end());
        std::sort(node.members.begin(), node.members.end());
        tree.nodes.push_back(std::move(node));

        const double ni = static_cast<double>(size[ui]);
        const double nj = static_cast<double>(size[uj]);
        for (Index k = 0; k < p; ++k) {
            if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
            const double merged = linkage == Linkage::average ? (ni * d(bi, k) + nj * d(bj, k)) / (ni + nj)
                                                              : std::min(d(bi, k), d(bj, k));
            d(bi, k) = merged;
            d(k, bi) = merged;
        }
        active[uj] = false;
        size[ui] += size[uj];
        height_of[ui] = tree.nodes.back().height;
        node_id[ui] = p + step;
    }
    return tree;
}

}  // namespace covden

#endif  // COVDEN_LINKAGE_HPP
