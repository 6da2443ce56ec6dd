#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "operator.hpp"
#include "potential.hpp"
#include "sparse.hpp"

namespace andlab {

// Closed integer box [x0, x1] x [y0, y1].
struct Box {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

    static Box of(const DyadicSquare& q) {
        return {q.corner.x, q.corner.y, q.corner.x + q.side() - 1, q.corner.y + q.side() - 1};
    }
    static Box of(Site p) { return {p.x, p.y, p.x, p.y}; }
    bool empty() const { return x1 < x0 || y1 < y0; }
    bool contains(Site p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool contains(const Box& b) const { return b.x0 >= x0 && b.x1 <= x1 && b.y0 >= y0 && b.y1 <= y1; }
};

inline double box_distance(const Box& a, const Box& b) {
    const int dx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
    const int dy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
    return std::hypot(double(dx), double(dy));
}

// dist(inner, Q \ Qp) for inner inside Qp inside Q; infinite when Qp = Q.
// The nearest outside site always sits straight across one side of Qp.
inline double gap_to_complement(const Box& inner, const Box& Qp, const Box& Q) {
    double best = std::numeric_limits<double>::infinity();
    if (Q.x0 < Qp.x0) best = std::min(best, double(inner.x0 - Qp.x0 + 1));
    if (Q.x1 > Qp.x1) best = std::min(best, double(Qp.x1 - inner.x1 + 1));
    if (Q.y0 < Qp.y0) best = std::min(best, double(inner.y0 - Qp.y0 + 1));
    if (Q.y1 > Qp.y1) best = std::min(best, double(Qp.y1 - inner.y1 + 1));
    return best;
}

// Directed distance on Q with edges x -> y of weight |x - y| and, for each
// defect square D, edges a -> b of weight -L3 from every a in D with
// dist(a, Q \ D) >= side(D)/8 ("sources") to every b outside D at distance 1
// from D ("exits"). Euclidean-only stretches collapse to single hops, so
// shortest paths only need the K defects as hubs.
class DefectGraph {
public:
    DefectGraph(const DyadicSquare& Q, std::vector<DyadicSquare> defects, double L3)
        : Q_(Q), defects_(std::move(defects)), L3_(L3) {
        require(L3 >= 0.0, "defect edge weight L3 must be nonnegative");
        const Box q = Box::of(Q);
        for (std::size_t k = 0; k < defects_.size(); ++k) {
            require(Q.contains(defects_[k]), "defect squares must lie in Q");
            for (std::size_t l = 0; l < k; ++l)
                require(!defects_[k].intersects(defects_[l]), "defect squares must be disjoint");
            const Box d = Box::of(defects_[k]);
            // sources: a box, since the gap is a minimum of one-sided distances
            const double need = defects_[k].side() / 8.0;
            Box src = d;
            const int m = int(std::ceil(need)) - 1;  // gap = offset + 1 >= need
            if (q.x0 < d.x0) src.x0 = d.x0 + m;
            if (q.x1 > d.x1) src.x1 = d.x1 - m;
            if (q.y0 < d.y0) src.y0 = d.y0 + m;
            if (q.y1 > d.y1) src.y1 = d.y1 - m;
            if (d.x0 == q.x0 && d.x1 == q.x1 && d.y0 == q.y0 && d.y1 == q.y1) src = Box{0, 0, -1, -1};  // D = Q
            sources_.push_back(src);
            std::vector<Box> ex;
            if (q.x0 < d.x0) ex.push_back({d.x0 - 1, d.y0, d.x0 - 1, d.y1});
            if (q.x1 > d.x1) ex.push_back({d.x1 + 1, d.y0, d.x1 + 1, d.y1});
            if (q.y0 < d.y0) ex.push_back({d.x0, d.y0 - 1, d.x1, d.y0 - 1});
            if (q.y1 > d.y1) ex.push_back({d.x0, d.y1 + 1, d.x1, d.y1 + 1});
            exits_.push_back(std::move(ex));
        }
        build_hubs();
    }

    const DyadicSquare& square() const { return Q_; }
    const std::vector<DyadicSquare>& defects() const { return defects_; }
    double L3() const { return L3_; }
    const Box& sources(std::size_t k) const { return sources_[k]; }
    const std::vector<Box>& exits(std::size_t k) const { return exits_[k]; }
    bool active(std::size_t k) const { return !sources_[k].empty() && !exits_[k].empty(); }

    double dist_to_sources(Site x, std::size_t k) const {
        return sources_[k].empty() ? kInf : box_distance(Box::of(x), sources_[k]);
    }
    double dist_from_exits(std::size_t k, Site y) const {
        double best = kInf;
        for (const Box& b : exits_[k]) best = std::min(best, box_distance(b, Box::of(y)));
        return best;
    }

    double operator()(Site x, Site y) const {
        double best = distance(x, y);
        const std::size_t K = defects_.size();
        for (std::size_t k = 0; k < K; ++k) {
            if (!active(k)) continue;
            const double into = dist_to_sources(x, k);
            for (std::size_t k2 = 0; k2 < K; ++k2) {
                if (!active(k2) || !std::isfinite(closure_(Eigen::Index(k), Eigen::Index(k2)))) continue;
                best = std::min(best, into + closure_(Eigen::Index(k), Eigen::Index(k2)) - L3_ + dist_from_exits(k2, y));
            }
        }
        return best;
    }

    Eigen::MatrixXd matrix() const {
        const SiteSet s = Q_.sites();
        const auto n = Eigen::Index(s.size());
        Eigen::MatrixXd d(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) d(a, b) = (*this)(s[std::size_t(a)], s[std::size_t(b)]);
        return d;
    }

    // hub-path closure: cheapest chain of jumps k -> ... -> k2 ending at the sources of k2
    const Eigen::MatrixXd& closure() const { return closure_; }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    void build_hubs() {
        const auto K = Eigen::Index(defects_.size());
        // W(k, k2) = -L3 + dist(exits_k, sources_k2): jump out of k, walk to k2
        Eigen::MatrixXd W = Eigen::MatrixXd::Constant(K, K, kInf);
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index k2 = 0; k2 < K; ++k2) {
                if (!active(std::size_t(k)) || !active(std::size_t(k2))) continue;
                double best = kInf;
                for (const Box& b : exits_[std::size_t(k)]) best = std::min(best, box_distance(b, sources_[std::size_t(k2)]));
                W(k, k2) = best - L3_;
            }
        // Floyd-Warshall with the empty path at cost 0
        closure_ = W;
        for (Eigen::Index k = 0; k < K; ++k) closure_(k, k) = std::min(0.0, closure_(k, k));
        for (Eigen::Index via = 0; via < K; ++via)
            for (Eigen::Index a = 0; a < K; ++a)
                for (Eigen::Index b = 0; b < K; ++b)
                    if (closure_(a, via) + closure_(via, b) < closure_(a, b)) closure_(a, b) = closure_(a, via) + closure_(via, b);
        for (Eigen::Index k = 0; k < K; ++k) {
            double cyc = kInf;
            for (Eigen::Index k2 = 0; k2 < K; ++k2) cyc = std::min(cyc, closure_(k, k2) + W(k2, k));
            if (cyc < 0.0) {
                const auto& d = defects_[std::size_t(k)];
                throw NegativeCycle("negative cycle through the defect at (" + std::to_string(d.corner.x) + ", " +
                                    std::to_string(d.corner.y) + ") side " + std::to_string(d.side()) +
                                    ": weight " + std::to_string(cyc) + " with L3 = " + std::to_string(L3_) +
                                    "; L3 is too large for the defect side");
            }
        }
    }

    DyadicSquare Q_;
    std::vector<DyadicSquare> defects_;
    double L3_;
    std::vector<Box> sources_;
    std::vector<std::vector<Box>> exits_;
    Eigen::MatrixXd closure_;
};

inline DefectGraph defect_distance(const DyadicSquare& Q, const std::vector<DyadicSquare>& defects, double L3) {
    return DefectGraph(Q, defects, L3);
}

// Largest |x - y| - d(x, y) over Q, divided by K L2: the constant the lower bound needs.
inline double defect_distance_constant(const DefectGraph& g) {
    if (g.defects().empty()) return 0.0;
    const SiteSet s = g.square().sites();
    double worst = 0.0;
    for (Site x : s)
        for (Site y : s) worst = std::max(worst, distance(x, y) - g(x, y));
    return worst / (double(g.defects().size()) * g.defects().front().side());
}

struct MultiscaleParams {
    double eps = 0.1;
    double delta = 0.05;
    std::array<double, 7> L{};  // L0..L6
    double m = 0.0;             // decay rate claimed on good squares
    double L3 = 0.0;            // defect edge weight for the self-bound report (defaults to L[3])
};

struct MultiscaleVerdict {
    bool scales_ordered = false;   // L0 >= ... >= L6 and L_k^{1-eps} >= L_{k+1}
    bool rate_ok = false;          // 1 >= m >= 2 L5^{-delta}
    bool defects_ok = true;        // ||R_{Q'_k}|| <= e^{L4}
    double worst_defect_log_norm = -std::numeric_limits<double>::infinity();
    bool good_ok = true;           // |R_{Q''}(y,z)| <= e^{L6 - m|y-z|}
    double worst_good_margin = std::numeric_limits<double>::infinity();
    double m_tilde = 0.0;
    double margin = std::numeric_limits<double>::infinity();  // min of L1 - m~|x-y| - log|R_Q(x,y)|
    bool conclusion_holds = false;
    double log_alpha = 0.0;        // log max e^{m~ d(x,y)} |R_Q(x,y)|
    double self_bound_C = 0.0;     // smallest C with alpha <= e^{C L2} + alpha/2, i.e. log(alpha/2)/L2
    long covered_by_defect = 0;
    long covered_by_good = 0;
};

// Checks the hypotheses that can be checked on one instance, then compares the
// conclusion against the computed R_Q. A site covered by neither a defect nor
// a good square (with the 1/8 margin) is a precondition failure.
inline MultiscaleVerdict multiscale_propagation_check(const DyadicSquare& Q, const PotentialField& V, double lambda_bar,
                                                      const std::vector<DyadicSquare>& defects,
                                                      const std::vector<DyadicSquare>& good_squares,
                                                      const MultiscaleParams& p) {
    MultiscaleVerdict out;
    const auto& L = p.L;
    out.scales_ordered = true;
    for (int k = 0; k + 1 < 7; ++k)
        out.scales_ordered = out.scales_ordered && L[std::size_t(k)] >= L[std::size_t(k + 1)] &&
                             std::pow(L[std::size_t(k)], 1.0 - p.eps) >= L[std::size_t(k + 1)];
    out.rate_ok = p.m <= 1.0 && p.m >= 2.0 * std::pow(L[5], -p.delta);
    out.m_tilde = p.m - std::pow(L[5], -p.delta);

    const Box q = Box::of(Q);
    for (const auto& d : defects)
        require(Q.contains(d) && double(d.side()) == L[2], "defects must be L2-squares inside Q");
    for (const auto& g : good_squares)
        require(Q.contains(g) && double(g.side()) == L[5], "good squares must be L5-squares inside Q");

    // coverage (7a)/(7b)
    for (Site x : Q.sites()) {
        bool ok = false;
        for (const auto& d : defects)
            if (d.contains(x) && gap_to_complement(Box::of(x), Box::of(d), q) >= d.side() / 8.0) {
                ok = true;
                ++out.covered_by_defect;
                break;
            }
        if (ok) continue;
        for (const auto& g : good_squares)
            if (g.contains(x) && gap_to_complement(Box::of(x), Box::of(g), q) >= g.side() / 8.0) {
                ok = true;
                ++out.covered_by_good;
                break;
            }
        if (!ok)
            throw PreconditionError("coverage gap at (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
    }

    for (const auto& d : defects) {
        const auto H = assemble_hq(d, V);
        const Spectrum sp = eigendecompose(H, false);
        const double gap = (sp.eigenvalues.array() - lambda_bar).abs().minCoeff();
        const double log_norm = -std::log(gap);
        out.worst_defect_log_norm = std::max(out.worst_defect_log_norm, log_norm);
        out.defects_ok = out.defects_ok && log_norm <= L[4];
    }
    for (const auto& g : good_squares) {
        const ResolventMatrix R = resolvent(assemble_hq(g, V), lambda_bar);
        for (Eigen::Index a = 0; a < R.entries.rows(); ++a)
            for (Eigen::Index b = 0; b < R.entries.cols(); ++b) {
                const double dist = distance(R.sites[std::size_t(a)], R.sites[std::size_t(b)]);
                const double mg = L[6] - p.m * dist - std::log(std::abs(R.entries(a, b)));
                out.worst_good_margin = std::min(out.worst_good_margin, mg);
            }
    }
    out.good_ok = out.worst_good_margin >= 0.0;

    // R_Q by columns in blocks, never stored whole
    const SiteSet sites = Q.sites();
    const SparseResolvent solver(sparse_hamiltonian(sites, V), lambda_bar);
    const DefectGraph graph(Q, defects, p.L3 > 0.0 ? p.L3 : L[3]);
    double log_alpha = -std::numeric_limits<double>::infinity();
    const auto n = Eigen::Index(sites.size());
    for (Eigen::Index y = 0; y < n; ++y) {
        const Eigen::VectorXd col = solver.column(y);
        const Site sy = sites[std::size_t(y)];
        for (Eigen::Index x = 0; x < n; ++x) {
            const Site sx = sites[std::size_t(x)];
            const double lr = std::log(std::abs(col(x)));
            out.margin = std::min(out.margin, L[1] - out.m_tilde * distance(sx, sy) - lr);
            log_alpha = std::max(log_alpha, out.m_tilde * graph(sx, sy) + lr);
        }
    }
    out.conclusion_holds = out.margin >= 0.0;
    out.log_alpha = log_alpha;
    out.self_bound_C = (log_alpha - std::log(2.0)) / L[2];
    return out;
}

struct CoverResult {
    int L3 = 0;
    std::vector<DyadicSquare> cover;  // exactly K disjoint squares
    std::vector<int> owner;           // owner[k]: index of the cover square holding inner square k
    int merges = 0;
};

// dist(inner, Q \ cover) >= side(cover)/8 with inner inside cover.
inline bool cover_property(const DyadicSquare& Q, const DyadicSquare& inner, const DyadicSquare& cover) {
    return cover.contains(inner) && Q.contains(cover) &&
           gap_to_complement(Box::of(inner), Box::of(cover), Box::of(Q)) >= cover.side() / 8.0;
}

// Start with L1-squares centred on the inner squares (clamped into Q). While two
// intersect, merge their groups and quadruple the side; every group's bounding
// box stays below half the side, which keeps the 1/8 margin. At most K - 1
// merges, so alpha >= 4^{K-1} suffices; the precondition asks for alpha >= C^K.
inline CoverResult cover_disjointify(const DyadicSquare& Q, const std::vector<DyadicSquare>& inner, int K, int alpha,
                                     int L1, double C = 8.0) {
    require(K >= 1 && int(inner.size()) <= K, "need 1 <= #inner squares <= K");
    require(alpha >= 1 && (alpha & (alpha - 1)) == 0, "alpha must be a dyadic integer");
    require(double(alpha) >= std::pow(C, K), "alpha must be at least C^K");
    require(L1 >= 1 && (L1 & (L1 - 1)) == 0, "L1 must be dyadic");
    require(double(Q.side()) >= double(alpha) * L1, "need L0 >= alpha L1");
    for (const auto& s : inner) {
        require(Q.contains(s), "inner squares must lie in Q");
        require(s.side() == inner.front().side(), "inner squares must share one side length");
        require(double(alpha) * s.side() <= L1, "need L1 >= alpha L2");
    }
    const Box q = Box::of(Q);
    std::vector<std::vector<int>> groups;
    for (int k = 0; k < int(inner.size()); ++k) groups.push_back({k});
    CoverResult out;
    out.L3 = L1;
    auto place = [&](const std::vector<int>& g, int side) {
        Box bb = Box::of(inner[std::size_t(g.front())]);
        for (int k : g) {
            const Box b = Box::of(inner[std::size_t(k)]);
            bb = {std::min(bb.x0, b.x0), std::min(bb.y0, b.y0), std::max(bb.x1, b.x1), std::max(bb.y1, b.y1)};
        }
        // centre of the bounding box, then clamp into Q
        int cx = (bb.x0 + bb.x1 + 1) / 2 - side / 2, cy = (bb.y0 + bb.y1 + 1) / 2 - side / 2;
        cx = std::clamp(cx, q.x0, q.x1 + 1 - side);
        cy = std::clamp(cy, q.y0, q.y1 + 1 - side);
        return square_at(cx, cy, side);
    };
    while (true) {
        if (double(out.L3) > double(alpha) * L1 || out.L3 > Q.side())
            throw GeometryError("cover scale " + std::to_string(out.L3) + " exceeds alpha L1 = " +
                                std::to_string(alpha * L1) + " or the side of Q");
        out.cover.clear();
        for (const auto& g : groups) out.cover.push_back(place(g, out.L3));
        bool merged = false;
        for (std::size_t a = 0; a < groups.size() && !merged; ++a)
            for (std::size_t b = a + 1; b < groups.size() && !merged; ++b)
                if (out.cover[a].intersects(out.cover[b])) {
                    groups[a].insert(groups[a].end(), groups[b].begin(), groups[b].end());
                    groups.erase(groups.begin() + long(b));
                    merged = true;
                }
        if (!merged) break;
        ++out.merges;
        out.L3 *= 4;
    }
    out.owner.assign(inner.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int k : groups[g]) out.owner[std::size_t(k)] = int(g);
    // pad with further disjoint squares up to K
    const int step = std::max(1, out.L3 / 8);
    for (int y = q.y0; int(out.cover.size()) < K && y + out.L3 - 1 <= q.y1; y += step)
        for (int x = q.x0; int(out.cover.size()) < K && x + out.L3 - 1 <= q.x1; x += step) {
            const DyadicSquare cand = square_at(x, y, out.L3);
            bool free = true;
            for (const auto& c : out.cover) free = free && !c.intersects(cand);
            if (free) out.cover.push_back(cand);
        }
    if (int(out.cover.size()) < K)
        throw GeometryError("no room for " + std::to_string(K) + " disjoint squares of side " + std::to_string(out.L3));
    return out;
}

}  // namespace andlab
