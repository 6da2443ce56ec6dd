#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "geometry.hpp"
#include "operator.hpp"
#include "potential.hpp"
#include "sparse.hpp"

namespace andlab {

struct GriResult {
    double exact_residual = 0.0;
    double scale = 0.0;         // max |R_Q(., y)|, a lower bound for the largest entry of R_Q
    double rq_xy = 0.0;
    double rqp_xy = 0.0;
    double boundary_sum = 0.0;
    Site u{}, v{};              // boundary pair with the largest |R_Q'(x,u) R_Q(v,y)|
    double witness_term = 0.0;  // that product, in absolute value
    double bound_rhs = 0.0;     // |R_Q'(x,y)| + |Q| witness_term
    bool bound_holds = false;
    long boundary_pairs = 0;
};

// R_Q(x,y) = R_Q'(x,y) + sum over u in Q', v in Q \ Q', |u - v| = 1 of R_Q'(x,u) R_Q(v,y).
// Only the column of R_Q at y and the column of R_Q' at x are formed.
inline GriResult gri_decompose(const SiteSet& Q, const SiteSet& Qp, const PotentialField& V, double lambda_bar,
                               Site x, Site y) {
    require(Qp.subset_of(Q), "Q' must be a subset of Q");
    require(Qp.contains(x), "x must lie in Q'");
    require(Q.contains(y), "y must lie in Q");
    const SparseResolvent big(sparse_hamiltonian(Q, V), lambda_bar);
    const Eigen::VectorXd col_y = big.column(Q.index_of(y));
    GriResult out;
    out.rq_xy = col_y(Q.index_of(x));
    out.scale = col_y.cwiseAbs().maxCoeff();
    if (Qp.size() == Q.size()) {
        // same operator: the identity has no boundary terms
        out.rqp_xy = out.rq_xy;
    } else {
        const SparseResolvent small(sparse_hamiltonian(Qp, V), lambda_bar);
        const Eigen::VectorXd col_x = small.column(Qp.index_of(x));  // R_Q'(u, x) = R_Q'(x, u)
        const long iy = Qp.index_of(y);
        out.rqp_xy = iy >= 0 ? col_x(iy) : 0.0;
        for (std::size_t a = 0; a < Qp.size(); ++a) {
            const Site u = Qp[a];
            for (Site d : kNeighbourOffsets) {
                const Site v = u + d;
                if (Qp.contains(v)) continue;
                const long iv = Q.index_of(v);
                if (iv < 0) continue;
                const double term = col_x(long(a)) * col_y(iv);
                out.boundary_sum += term;
                ++out.boundary_pairs;
                if (std::abs(term) >= out.witness_term) {
                    out.witness_term = std::abs(term);
                    out.u = u;
                    out.v = v;
                }
            }
        }
    }
    out.exact_residual = std::abs(out.rq_xy - out.rqp_xy - out.boundary_sum);
    out.bound_rhs = std::abs(out.rqp_xy) + double(Q.size()) * out.witness_term;
    out.bound_holds = std::abs(out.rq_xy) <= out.bound_rhs * (1.0 + 1e-12) + 1e-300;
    return out;
}

struct ContinuityVerdict {
    bool ordering_ok = false;       // alpha > beta > 0
    bool decay_ok = false;          // |R_lambda(x,y)| <= e^{alpha - beta |x-y|}
    bool radius_ok = false;         // |lambda' - lambda| < c beta |Q|^{-1} e^{-alpha}
    bool hypotheses_met = false;
    double radius = 0.0;
    double contraction = 0.0;       // ||R_lambda||_2 |lambda' - lambda|
    bool contraction_ok = false;    // contraction <= 1/2
    bool conclusion_holds = false;  // |R_lambda'(x,y)| <= 2 e^{alpha - beta |x-y|}
    bool singular_at_lambda_prime = false;
    double worst_ratio = 0.0;       // max |R_lambda'(x,y)| e^{beta |x-y| - alpha}
    double worst_decay_ratio = 0.0; // same for R_lambda
};

// Largest entrywise ratio |R(x,y)| / e^{alpha - beta |x-y|}.
inline double decay_ratio(const Eigen::MatrixXd& R, const SiteSet& sites, double alpha, double beta) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < R.rows(); ++a)
        for (Eigen::Index b = 0; b < R.cols(); ++b) {
            const double d = distance(sites[std::size_t(a)], sites[std::size_t(b)]);
            worst = std::max(worst, std::abs(R(a, b)) * std::exp(beta * d - alpha));
        }
    return worst;
}

inline ContinuityVerdict resolvent_continuity_check(const HamiltonianMatrix& H, double lambda, double lambda_prime,
                                                    double alpha, double beta, double c = 0.25) {
    ContinuityVerdict out;
    const double size = double(H.size());
    require(size > 0, "empty operator");
    out.ordering_ok = alpha > beta && beta > 0;
    out.radius = c * beta / size * std::exp(-alpha);
    out.radius_ok = std::abs(lambda_prime - lambda) < out.radius;
    const ResolventMatrix R = resolvent(H, lambda);
    out.worst_decay_ratio = decay_ratio(R.entries, H.sites, alpha, beta);
    out.decay_ok = out.worst_decay_ratio <= 1.0 + 1e-12;  // exp vs log rounding on certified intercepts
    out.hypotheses_met = out.ordering_ok && out.radius_ok && out.decay_ok;
    const Spectrum sp = eigendecompose(H.entries, H.sites, false);
    const double gap = (sp.eigenvalues.array() - lambda).abs().minCoeff();
    out.contraction = std::abs(lambda_prime - lambda) / gap;
    out.contraction_ok = out.contraction <= 0.5;
    try {
        const ResolventMatrix Rp = resolvent(H, lambda_prime);
        out.worst_ratio = decay_ratio(Rp.entries, H.sites, alpha, beta);
        out.conclusion_holds = out.worst_ratio <= 2.0;
    } catch (const NearSingular&) {
        out.singular_at_lambda_prime = true;
        out.worst_ratio = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace andlab
