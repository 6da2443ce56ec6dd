#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "operator.hpp"

namespace andlab {

struct CrudeContinuationResult {
    DyadicSquare found_square;
    double ratio_log = 0.0;     // log(||psi||_{Q'} / ||psi||_Q)
    double bound_log = 0.0;     // -C_K L'
    bool bound_holds = false;
    bool hypotheses_met = false;  // L >= C_K L'
};

// Among L'-squares Q' with 2Q' inside Q and off every defect, the one where
// psi is largest. `side_prime` is required when there are no defects.
inline CrudeContinuationResult crude_continuation_check(const DyadicSquare& Q,
                                                        const std::vector<DyadicSquare>& defects,
                                                        const Eigen::VectorXd& psi,
                                                        std::optional<int> side_prime = std::nullopt,
                                                        double C_K = 16.0) {
    require(psi.size() == Q.area(), "field must have one value per site of Q");
    int Lp = side_prime.value_or(defects.empty() ? 0 : defects.front().side());
    require(Lp >= 1, "side of the sought squares is required without defects");
    for (const auto& d : defects) require(d.side() == Lp, "defect squares must share one side length");
    const int L = Q.side();
    const double full = psi.cwiseAbs().maxCoeff();
    if (!(full > 0.0)) throw PreconditionError("zero eigenvector");

    CrudeContinuationResult res;
    res.hypotheses_met = L >= C_K * Lp;
    res.bound_log = -C_K * Lp;
    const int lg = std::countr_zero(unsigned(Lp));
    double best = -1.0;
    for (int y0 = Q.corner.y; y0 + Lp <= Q.corner.y + L; ++y0)
        for (int x0 = Q.corner.x; x0 + Lp <= Q.corner.x + L; ++x0) {
            const DyadicSquare q{{x0, y0}, lg};
            const DyadicSquare q2 = q.doubled();
            if (!Q.contains(q2)) continue;
            bool clear = true;
            for (const auto& d : defects) clear = clear && !q2.intersects(d);
            if (!clear) continue;
            double mx = 0.0;
            for (int y = y0; y < y0 + Lp; ++y)
                for (int x = x0; x < x0 + Lp; ++x)
                    mx = std::max(mx, std::abs(psi((y - Q.corner.y) * L + (x - Q.corner.x))));
            if (mx > best) best = mx, res.found_square = q;
        }
    if (best < 0.0) throw GeometryError("no square Q' with 2Q' inside Q and away from the defects");
    res.ratio_log = best > 0.0 ? std::log(best / full) : -std::numeric_limits<double>::infinity();
    res.bound_holds = res.ratio_log >= res.bound_log;
    return res;
}

inline CrudeContinuationResult crude_continuation_check(const DyadicSquare& Q,
                                                        const std::vector<DyadicSquare>& defects,
                                                        const Spectrum& spec, Eigen::Index eigenindex,
                                                        std::optional<int> side_prime = std::nullopt,
                                                        double C_K = 16.0) {
    require(spec.eigenvectors.cols() > eigenindex && eigenindex >= 0, "eigenvector index out of range");
    require(spec.sites == Q.sites(), "spectrum must belong to H_Q");
    return crude_continuation_check(Q, defects, Eigen::VectorXd(spec.eigenvectors.col(eigenindex)), side_prime, C_K);
}

// |{x in Q : |psi(x)| >= e^threshold_log ||psi||_{half Q}}| with psi indexed like Q.sites().
inline long uc_support_count(const DyadicSquare& Q, const Eigen::VectorXd& psi, double threshold_log) {
    require(psi.size() == Q.area(), "field must have one value per site of Q");
    const auto half = Q.halved();
    const int L = Q.side();
    double ref = 0.0;
    for (int y = half.corner.y; y < half.corner.y + half.side(); ++y)
        for (int x = half.corner.x; x < half.corner.x + half.side(); ++x)
            ref = std::max(ref, std::abs(psi((y - Q.corner.y) * L + (x - Q.corner.x))));
    if (ref == 0.0) throw PreconditionError("field vanishes on the half square");
    const double cut = std::exp(threshold_log) * ref;
    long c = 0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) c += std::abs(psi(i)) >= cut ? 1 : 0;
    return c;
}

}  // namespace andlab
