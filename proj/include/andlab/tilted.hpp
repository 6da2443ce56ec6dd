#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "potential.hpp"

namespace andlab {

// Local coordinates of a tilted rectangle R_{[s0, s0+a-1], [t0, t0+b-1]}:
// i = s - s0 + 1 in [1, a], j = t - t0 + 1 in [1, b]. A pair (i, j) is a
// lattice site iff i - j + parity is even.
struct TiltedFrame {
    long s0 = 1, t0 = 1;
    int a = 0, b = 0;
    int parity = 0;

    explicit TiltedFrame(const TiltedRectangle& r) {
        require(r.bounded(), "region must be bounded");
        s0 = r.s_interval.lo;
        t0 = r.t_interval.lo;
        a = int(r.s_interval.size());
        b = int(r.t_interval.size());
        parity = int(((s0 - t0) % 2 + 2) % 2);
    }
    TiltedFrame() = default;

    bool valid(int i, int j) const { return ((i - j + parity) & 1) == 0; }
    Site site(int i, int j) const { return Site::from_st(int(s0 + i - 1), int(t0 + j - 1)); }
    int i_of(Site p) const { return int(p.s() - s0 + 1); }
    int j_of(Site p) const { return int(p.t() - t0 + 1); }
    bool inside(int i, int j) const { return i >= 1 && i <= a && j >= 1 && j <= b; }
    bool on_west_boundary(int i, int j) const { return inside(i, j) && (i <= 2 || j <= 2); }
    TiltedRectangle rect() const { return tilted(s0, s0 + a - 1, t0, t0 + b - 1); }
};

// The west boundary R_{[s0, s0+1], J} u R_{I, [t0, t0+1]} of a tilted rectangle.
inline SiteSet west_boundary_sites(const TiltedRectangle& r) {
    const TiltedFrame f(r);
    std::vector<Site> out;
    for (int i = 1; i <= f.a; ++i)
        for (int j = 1; j <= f.b; ++j)
            if (f.valid(i, j) && f.on_west_boundary(i, j)) out.push_back(f.site(i, j));
    return SiteSet(std::move(out));
}

struct WestBoundaryData {
    TiltedRectangle rect;
    std::map<Site, double> values;

    template <class Fn>
    static WestBoundaryData from_function(const TiltedRectangle& r, Fn&& fn) {
        WestBoundaryData w{r, {}};
        for (const Site& p : west_boundary_sites(r)) w.values[p] = fn(p);
        return w;
    }

    void validate() const {
        const auto dom = west_boundary_sites(rect);
        require(values.size() == dom.size(), "boundary data must cover exactly the west boundary");
        for (const auto& [p, v] : values) require(dom.contains(p), "boundary data outside the west boundary");
    }
};

// Solution of H psi = lambda psi on a tilted rectangle. Values are stored as
// mantissas with one power-of-two exponent per s-row, so psi(i, j) = mant * 2^row_exp[i].
struct TiltedField {
    TiltedFrame frame;
    double lambda = 0.0;
    std::vector<double> mant;       // a * b, row-major in i
    std::vector<int> row_exp;       // a + 1, index 0 unused
    std::vector<double> potential;  // V on the grid; NaN where not needed
    double residual = 0.0;          // max interior |H psi - lambda psi| / max(1, ||psi||_inf)

    double& m(int i, int j) { return mant[std::size_t(i - 1) * std::size_t(frame.b) + std::size_t(j - 1)]; }
    double m(int i, int j) const { return mant[std::size_t(i - 1) * std::size_t(frame.b) + std::size_t(j - 1)]; }
    double V(int i, int j) const { return potential[std::size_t(i - 1) * std::size_t(frame.b) + std::size_t(j - 1)]; }

    // Value in plain double arithmetic; may overflow to +-inf on long rectangles.
    double value(int i, int j) const { return std::ldexp(m(i, j), row_exp[std::size_t(i)]); }
    double value(Site p) const { return value(frame.i_of(p), frame.j_of(p)); }
    // Value expressed in the exponent frame of row `base_row`.
    double scaled(int i, int j, int base_row) const {
        return std::ldexp(m(i, j), row_exp[std::size_t(i)] - row_exp[std::size_t(base_row)]);
    }
    double log_abs(int i, int j) const {
        const double v = std::abs(m(i, j));
        return v == 0.0 ? -std::numeric_limits<double>::infinity()
                        : std::log(v) + row_exp[std::size_t(i)] * std::numbers::ln2;
    }

    // log of the sup norm over the rectangle, or over the west boundary only.
    double log_sup(bool boundary_only = false) const {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= frame.a; ++i)
            for (int j = 1; j <= frame.b; ++j)
                if (frame.valid(i, j) && (!boundary_only || frame.on_west_boundary(i, j)))
                    best = std::max(best, log_abs(i, j));
        return best;
    }

    std::vector<Site> sites() const {
        std::vector<Site> out;
        for (int i = 1; i <= frame.a; ++i)
            for (int j = 1; j <= frame.b; ++j)
                if (frame.valid(i, j)) out.push_back(frame.site(i, j));
        return out;
    }
};

namespace detail {

inline void normalise_row(TiltedField& f, int i) {
    double mx = 0.0;
    for (int j = 1; j <= f.frame.b; ++j) mx = std::max(mx, std::abs(f.m(i, j)));
    if (mx == 0.0 || !std::isfinite(mx)) return;
    int e;
    std::frexp(mx, &e);
    if (e > 256 || e < -256) {
        for (int j = 1; j <= f.frame.b; ++j) f.m(i, j) = std::ldexp(f.m(i, j), -e);
        f.row_exp[std::size_t(i)] += e;
    }
}

inline void interior_residual(TiltedField& f) {
    const auto& fr = f.frame;
    const double log_norm = std::max(0.0, f.log_sup());
    double worst = 0.0;
    for (int i = 2; i <= fr.a - 1; ++i)
        for (int j = 2; j <= fr.b - 1; ++j) {
            if (!fr.valid(i, j)) continue;
            double r = (4.0 + f.V(i, j) - f.lambda) * f.m(i, j);
            for (auto [di, dj] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}})
                r -= f.scaled(i + di, j + dj, i);
            const double rel = std::abs(r) == 0.0
                                   ? 0.0
                                   : std::exp(std::log(std::abs(r)) + f.row_exp[std::size_t(i)] * std::numbers::ln2 - log_norm);
            worst = std::max(worst, rel);
        }
    f.residual = worst;
}

// Shared recursion. `source` (optional) adds -source(i-1, j-1) in the frame of row i-1.
template <class Source>
TiltedField extend(const TiltedFrame& fr, const PotentialField& V, double lambda,
                   const std::map<Site, double>& boundary, Source&& source) {
    require(fr.a >= 3 && fr.b >= 3, "tilted rectangle needs a, b >= 3");
    TiltedField f;
    f.frame = fr;
    f.lambda = lambda;
    const std::size_t n = std::size_t(fr.a) * std::size_t(fr.b);
    f.mant.assign(n, 0.0);
    f.row_exp.assign(std::size_t(fr.a) + 1, 0);
    f.potential.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (int i = 1; i <= fr.a; ++i)
        for (int j = 1; j <= fr.b; ++j)
            if (fr.valid(i, j) && (i < fr.a && j < fr.b))
                f.potential[std::size_t(i - 1) * std::size_t(fr.b) + std::size_t(j - 1)] = V(fr.site(i, j));
    for (const auto& [p, v] : boundary) f.m(fr.i_of(p), fr.j_of(p)) = v;
    for (int i = 1; i <= 2; ++i) normalise_row(f, i);
    for (int i = 3; i <= fr.a; ++i) {
        const int e = f.row_exp[std::size_t(i - 1)];
        f.row_exp[std::size_t(i)] = e;
        for (int j = 1; j <= 2; ++j) f.m(i, j) = std::ldexp(f.m(i, j), -e);
        for (int j = 3; j <= fr.b; ++j) {
            if (!fr.valid(i, j)) continue;
            double v = (4.0 + f.V(i - 1, j - 1) - lambda) * f.m(i - 1, j - 1) - f.scaled(i - 2, j, i - 1) -
                       f.m(i, j - 2) - f.scaled(i - 2, j - 2, i - 1);
            v -= source(f, i - 1, j - 1);
            f.m(i, j) = v;
        }
        normalise_row(f, i);
    }
    return f;
}

}  // namespace detail

// Unique solution of H psi = lambda psi on the interior R_{[2,a-1],[2,b-1]}
// (local coordinates) with the prescribed west-boundary values.
inline TiltedField extend_from_west(const WestBoundaryData& boundary, const PotentialField& V,
                                    double lambda) {
    boundary.validate();
    auto f = detail::extend(TiltedFrame(boundary.rect), V, lambda, boundary.values,
                            [](const TiltedField&, int, int) { return 0.0; });
    detail::interior_residual(f);
    return f;
}

// d psi / d lambda for fixed boundary data: zero on the boundary and
// phi_{s,t} = (4+V-lambda) phi_{s-1,t-1} - psi_{s-1,t-1} - phi_{s-2,t} - phi_{s,t-2} - phi_{s-2,t-2}.
inline TiltedField lambda_derivative_field(const WestBoundaryData& boundary, const PotentialField& V,
                                           double lambda) {
    const auto psi = extend_from_west(boundary, V, lambda);
    return detail::extend(TiltedFrame(boundary.rect), V, lambda, {},
                          [&psi](const TiltedField& phi, int i, int j) {
                              // psi(i, j) in the frame of phi's row i
                              return std::ldexp(psi.m(i, j), psi.row_exp[std::size_t(i)] - phi.row_exp[std::size_t(i)]);
                          });
}

struct GrowthReport {
    double measured_log_ratio = 0.0;
    double bound_log = 0.0;
    bool ok = false;
};

inline GrowthReport growth_bound_check(const TiltedField& f, double C = 10.0) {
    const double lb = f.log_sup(true);
    if (!std::isfinite(lb)) throw PreconditionError("growth check needs nonzero boundary data");
    GrowthReport g;
    g.measured_log_ratio = f.log_sup() - lb;
    g.bound_log = C * f.frame.b * std::log(double(f.frame.a));
    g.ok = g.measured_log_ratio <= g.bound_log;
    return g;
}

struct SensitivityReport {
    double sup_diff = 0.0;
    double bound = 0.0;
    double log_sup_diff = -std::numeric_limits<double>::infinity();
    double log_bound = -std::numeric_limits<double>::infinity();
    bool ok = true;
};

inline SensitivityReport lambda_sensitivity(const WestBoundaryData& boundary, const PotentialField& V,
                                            double lambda0, double lambda1, double C = 10.0) {
    const auto f0 = extend_from_west(boundary, V, lambda0);
    const auto f1 = extend_from_west(boundary, V, lambda1);
    SensitivityReport r;
    const auto& fr = f0.frame;
    for (int i = 1; i <= fr.a; ++i)
        for (int j = 1; j <= fr.b; ++j) {
            if (!fr.valid(i, j)) continue;
            // difference in the frame of f0's row i
            const double d = f0.m(i, j) - std::ldexp(f1.m(i, j), f1.row_exp[std::size_t(i)] - f0.row_exp[std::size_t(i)]);
            if (d == 0.0) continue;
            r.log_sup_diff = std::max(r.log_sup_diff, std::log(std::abs(d)) + f0.row_exp[std::size_t(i)] * std::numbers::ln2);
        }
    const double gap = std::abs(lambda0 - lambda1);
    const double lb = f0.log_sup(true);
    r.log_bound = (gap == 0.0 || !std::isfinite(lb)) ? -std::numeric_limits<double>::infinity()
                                                     : C * fr.a * std::log(double(fr.b)) + lb + std::log(gap);
    r.sup_diff = std::exp(r.log_sup_diff);
    r.bound = std::exp(r.log_bound);
    r.ok = r.log_sup_diff <= r.log_bound;
    return r;
}

struct AlternatingSumResult {
    double residual = 0.0;  // absolute; may overflow on huge fields
    double relative = 0.0;  // residual / ||psi||_inf
};

// Residual of psi_{s1,t1} + psi_{s1-2,t1} = sum_k (-1)^k (4 - lambda + V_{s1-1,t1-1-2k}) psi_{s1-1,t1-1-2k}
// in local coordinates, for a field vanishing on the rows t = 1, 2.
inline AlternatingSumResult alternating_sum_check(const TiltedField& f, int s1, int t1) {
    const auto& fr = f.frame;
    for (int i = 1; i <= fr.a; ++i)
        for (int j = 1; j <= 2; ++j)
            if (fr.valid(i, j) && f.m(i, j) != 0.0)
                throw PreconditionError("alternating sum needs psi = 0 on t in {1, 2}");
    require(s1 >= 3 && s1 <= fr.a && t1 >= fr.b - 1 && t1 <= fr.b && fr.valid(s1, t1),
            "(s1, t1) must be a site of R_{[3,a],[b-1,b]}");
    const int base = s1;
    double r = f.m(s1, t1) + f.scaled(s1 - 2, t1, base);
    for (int k = 0; 2 * k <= t1 - 1; ++k) {
        const int j = t1 - 1 - 2 * k;
        if (j <= 0) continue;
        const double psi = f.scaled(s1 - 1, j, base);
        if (psi == 0.0) continue;
        r -= ((k & 1) ? -1.0 : 1.0) * (4.0 - f.lambda + f.V(s1 - 1, j)) * psi;
    }
    AlternatingSumResult out;
    if (r == 0.0) return out;
    const double log_r = std::log(std::abs(r)) + f.row_exp[std::size_t(base)] * std::numbers::ln2;
    out.residual = std::exp(log_r);
    out.relative = std::exp(log_r - f.log_sup());
    return out;
}

}  // namespace andlab
