#pragma once

// Dense reference for the defect-adjusted distance: explicit edges plus Floyd-Warshall.

#include <Eigen/Dense>

#include <andlab/geometry.hpp>

#include <cmath>
#include <vector>

namespace oracle {

using namespace andlab;

// Floyd-Warshall on the explicit multigraph; negative edges built by brute force.
inline Eigen::MatrixXd defect_distances(const DyadicSquare& Q, const std::vector<DyadicSquare>& defects, double L3,
                                        bool* negative_cycle = nullptr) {
    const SiteSet s = Q.sites();
    const auto n = Eigen::Index(s.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) d(a, b) = distance(s[std::size_t(a)], s[std::size_t(b)]);
    for (const auto& D : defects) {
        std::vector<Eigen::Index> src, dst;
        for (Eigen::Index a = 0; a < n; ++a) {
            const Site p = s[std::size_t(a)];
            double to_out = INFINITY, to_in = INFINITY;
            for (Site q : s) {
                if (!D.contains(q)) to_out = std::min(to_out, distance(p, q));
                else to_in = std::min(to_in, distance(p, q));
            }
            if (D.contains(p) && to_out >= D.side() / 8.0) src.push_back(a);
            if (!D.contains(p) && to_in == 1.0) dst.push_back(a);
        }
        for (auto a : src)
            for (auto b : dst) d(a, b) = std::min(d(a, b), -L3);
    }
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b)
                if (d(a, k) + d(k, b) < d(a, b)) d(a, b) = d(a, k) + d(k, b);
    if (negative_cycle) {
        *negative_cycle = false;
        for (Eigen::Index a = 0; a < n; ++a) *negative_cycle = *negative_cycle || d(a, a) < 0;
    }
    return d;
}

}  // namespace oracle
