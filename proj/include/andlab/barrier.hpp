#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "operator.hpp"
#include "potential.hpp"
#include "sparse.hpp"

namespace andlab {

// (2 gamma + ln 8) / pi: additive constant of the potential kernel a(x) ~ (2/pi) ln|x| + kappa.
inline constexpr double kKappaLiterature = (2.0 * std::numbers::egamma + 3.0 * std::numbers::ln2) / std::numbers::pi;

// G = -a/4 far from the origin, with the first anisotropic correction.
inline double kernel_asymptotic(Site p, double kappa = kKappaLiterature) {
    const double r2 = double(distance_sq(p, {0, 0}));
    require(r2 > 0.0, "asymptotic form is not defined at the origin");
    const double x2 = double(p.x) * p.x, y2 = double(p.y) * p.y;
    const double cos4 = (x2 * x2 - 6.0 * x2 * y2 + y2 * y2) / (r2 * r2);
    return -std::log(r2) / (4.0 * std::numbers::pi) - kappa / 4.0 + cos4 / (24.0 * std::numbers::pi * r2);
}

// G on the square |x|_inf <= radius, where -Laplacian G = 1_{0}, G(0) = 0.
struct PotentialKernelTable {
    int radius = 0;
    int solve_half = 0;           // unknowns live on |x|_inf <= solve_half
    std::vector<double> values;   // row-major over [-radius, radius]^2
    double kappa = 0.0;           // self-consistent: fixed by G(0) = 0
    double kappa_annulus = 0.0;   // fitted to the log asymptotic on radius/2 <= |x| <= radius
    double kappa_literature = kKappaLiterature;
    double max_defect = 0.0;      // max |(-Laplacian G)(x) - 1_{0}(x)| over |x|_inf < radius

    bool covers(Site p) const { return std::abs(p.x) <= radius && std::abs(p.y) <= radius; }
    double operator()(Site p) const {
        if (!covers(p))
            throw MissingSite("kernel table has no value at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
        const int w = 2 * radius + 1;
        return values[std::size_t((p.y + radius) * w + (p.x + radius))];
    }
};

inline double kernel_defect_at(const PotentialKernelTable& G, Site p) {
    double lap = 4.0 * G(p);
    for (Site d : kNeighbourOffsets) lap -= G(p + d);
    return lap - (p == Site{0, 0} ? 1.0 : 0.0);
}

inline constexpr long kKernelUnknownCap = 4'000'000;

// Dirichlet solve on the square of half-width solve_half (default 2 radius, so side 4 radius)
// with the asymptotic form as boundary data; the constant is then fixed by G(0) = 0.
inline PotentialKernelTable potential_kernel(int radius, int solve_half = 0) {
    require(radius >= 2, "kernel radius must be at least 2");
    if (solve_half == 0) solve_half = 2 * radius;
    require(solve_half >= radius + 1, "solve box must contain the table");
    const long w = 2L * solve_half + 1;
    if (w * w > kKernelUnknownCap)
        throw PreconditionError("kernel radius " + std::to_string(radius) + " is over the memory cap");
    auto idx = [&](int x, int y) { return int((y + solve_half) * w + (x + solve_half)); };

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(w * w * 5));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(w * w);
    for (int y = -solve_half; y <= solve_half; ++y)
        for (int x = -solve_half; x <= solve_half; ++x) {
            const int i = idx(x, y);
            trips.emplace_back(i, i, 4.0);
            for (Site d : kNeighbourOffsets) {
                const Site q{x + d.x, y + d.y};
                if (std::abs(q.x) > solve_half || std::abs(q.y) > solve_half)
                    rhs(i) += kernel_asymptotic(q, 0.0);  // kappa enters only as a constant shift
                else
                    trips.emplace_back(i, idx(q.x, q.y), -1.0);
            }
        }
    rhs(idx(0, 0)) += 1.0;
    SparseMatrix A(w * w, w * w);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("kernel factorisation failed");
    const Eigen::VectorXd g0 = ldlt.solve(rhs);

    PotentialKernelTable T;
    T.radius = radius;
    T.solve_half = solve_half;
    const int tw = 2 * radius + 1;
    T.values.assign(std::size_t(tw) * std::size_t(tw), 0.0);
    const double shift = g0(idx(0, 0));
    T.kappa = 4.0 * shift;
    // average over the dihedral orbit once and write the same number to every image
    for (int y = 0; y <= radius; ++y)
        for (int x = 0; x <= y; ++x) {
            const Site orbit[8] = {{x, y}, {-x, y}, {x, -y}, {-x, -y}, {y, x}, {-y, x}, {y, -x}, {-y, -x}};
            double acc = 0.0;
            for (Site p : orbit) acc += g0(idx(p.x, p.y));
            const double v = x == 0 && y == 0 ? 0.0 : acc / 8.0 - shift;
            for (Site p : orbit) T.values[std::size_t((p.y + radius) * tw + (p.x + radius))] = v;
        }
    for (int y = -radius + 1; y < radius; ++y)
        for (int x = -radius + 1; x < radius; ++x)
            T.max_defect = std::max(T.max_defect, std::abs(kernel_defect_at(T, {x, y})));
    double acc = 0.0;
    long n = 0;
    for (int y = -radius; y <= radius; ++y)
        for (int x = -radius; x <= radius; ++x) {
            const double r = std::hypot(double(x), double(y));
            if (r < radius / 2.0 || r > radius) continue;
            acc += -4.0 * (T({x, y}) - kernel_asymptotic({x, y}, 0.0));
            ++n;
        }
    T.kappa_annulus = n > 0 ? acc / double(n) : T.kappa;
    return T;
}

// Uniform grid buckets of side `cell` for nearest and within-radius queries.
class SpatialIndex {
public:
    SpatialIndex(const SiteSet& pts, double cell) : cell_(std::max(1, int(std::ceil(cell)))) {
        for (Site p : pts) buckets_[key(cell_of(p.x), cell_of(p.y))].push_back(p);
        for (Site p : pts) {
            lo_ = {std::min(lo_.x, cell_of(p.x)), std::min(lo_.y, cell_of(p.y))};
            hi_ = {std::max(hi_.x, cell_of(p.x)), std::max(hi_.y, cell_of(p.y))};
        }
        empty_ = pts.empty();
    }

    // Nearest point and its distance; rings of cells are scanned until no closer point can exist.
    std::pair<Site, double> nearest(Site y) const {
        require(!empty_, "nearest query on an empty set");
        const int cx = cell_of(y.x), cy = cell_of(y.y);
        Site best{};
        double best_d = INFINITY;
        const int max_ring = std::max({std::abs(cx - lo_.x), std::abs(cx - hi_.x), std::abs(cy - lo_.y), std::abs(cy - hi_.y)});
        for (int ring = 0; ring <= max_ring; ++ring) {
            // any point in ring r is at least (r - 1) cells away
            if (double(ring - 1) * cell_ > best_d) break;
            for (int gy = cy - ring; gy <= cy + ring; ++gy)
                for (int gx = cx - ring; gx <= cx + ring; ++gx) {
                    if (std::max(std::abs(gx - cx), std::abs(gy - cy)) != ring) continue;
                    auto it = buckets_.find(key(gx, gy));
                    if (it == buckets_.end()) continue;
                    for (Site p : it->second) {
                        const double d = distance(p, y);
                        if (d < best_d || (d == best_d && p < best)) {
                            best_d = d;
                            best = p;
                        }
                    }
                }
        }
        return {best, best_d};
    }

    template <class Fn>
    void for_each_within(Site y, double r, Fn&& fn) const {
        const long long r2 = (long long)std::floor(r * r + 1e-9);
        const int span = int(std::ceil(r / cell_));
        const int cx = cell_of(y.x), cy = cell_of(y.y);
        for (int gy = cy - span; gy <= cy + span; ++gy)
            for (int gx = cx - span; gx <= cx + span; ++gx) {
                auto it = buckets_.find(key(gx, gy));
                if (it == buckets_.end()) continue;
                for (Site p : it->second)
                    if (distance_sq(p, y) <= r2) fn(p);
            }
    }

private:
    int cell_of(int v) const { return v >= 0 ? v / cell_ : -((-v + cell_ - 1) / cell_); }
    static long long key(int gx, int gy) { return (long long)gx * 4294967311LL + gy; }

    int cell_;
    std::unordered_map<long long, std::vector<Site>> buckets_;
    Site lo_{1 << 30, 1 << 30}, hi_{-(1 << 30), -(1 << 30)};
    bool empty_ = true;
};

struct RNetVerdict {
    bool is_net = false;
    double covering_radius = 0.0;  // max over Y of the distance to X
    Site worst{};
};

inline RNetVerdict rnet_check(const SiteSet& X, const SiteSet& Y, double R) {
    RNetVerdict out;
    if (Y.empty()) {
        out.is_net = true;
        return out;
    }
    require(!X.empty(), "empty X cannot be a net for a nonempty Y");
    const SpatialIndex index(X, std::max(1.0, R));
    out.covering_radius = -1.0;
    for (Site y : Y) {
        const double d = index.nearest(y).second;
        if (d > out.covering_radius) {
            out.covering_radius = d;
            out.worst = y;
        }
    }
    out.is_net = out.covering_radius <= R;
    return out;
}

struct BarrierTrial {
    double eps = 0.0;
    double certificate = 0.0;  // min (H psi) R^2
    double psi_min = 0.0;
    bool localized = false;    // min over B_3R equals min over B_2R everywhere
    bool annulus = false;      // min of phi on 2R < |x| <= 3R >= max of phi on |x| <= R
    bool accepted = false;
};

struct Barrier {
    SiteSet domain;
    std::vector<double> psi;
    double R = 0.0;
    double eps_barrier = 0.0;
    double certificate = 0.0;
    double psi_min = 0.0, psi_max = 0.0;
    double C_log = 0.0;             // psi_max / log R, R floored at e
    double rayleigh_lower = 0.0;    // min (H psi) / psi, a lower bound for the principal eigenvalue
    bool localized = false;
    bool annulus = false;
    std::vector<BarrierTrial> trials;
};

inline constexpr int kBarrierEpsExponents[2] = {3, 10};  // eps = 2^-3 .. 2^-10

// phi(x) = 1 - G(x) - eps R^-2 |x|^2 and psi(y) = min over x in X with |y - x| <= 3R of phi(y - x).
// Tries eps from large to small and keeps the first that gives a positive certificate,
// psi >= 1 and the localized-minimum property. H = -Laplacian + 1_X on the domain.
inline Barrier build_barrier(const SiteSet& X, double R, const SiteSet& domain) {
    require(R >= 1.0, "net radius must be at least 1");
    require(!domain.empty(), "empty domain");
    const RNetVerdict net = rnet_check(X, domain, R);
    if (!net.is_net)
        throw PreconditionError("X is not an R-net in the domain: (" + std::to_string(net.worst.x) + ", " +
                                std::to_string(net.worst.y) + ") is at distance " + std::to_string(net.covering_radius));
    const int reach = int(std::ceil(3.0 * R));
    const PotentialKernelTable G = potential_kernel(std::max(2, reach));
    const SpatialIndex index(X, R);
    std::vector<double> vx(domain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) vx[i] = X.contains(domain[i]) ? 1.0 : 0.0;
    const PotentialField V(domain, vx);
    const long long r1 = (long long)std::floor(R * R + 1e-9), r2 = (long long)std::floor(4 * R * R + 1e-9);

    Barrier out;
    out.domain = domain;
    out.R = R;
    for (int e = kBarrierEpsExponents[0]; e <= kBarrierEpsExponents[1]; ++e) {
        BarrierTrial t;
        t.eps = std::ldexp(1.0, -e);
        auto phi = [&](Site d) { return 1.0 - G(d) - t.eps * double(distance_sq(d, {0, 0})) / (R * R); };
        double inner_max = -INFINITY, outer_min = INFINITY;
        for (int y = -reach; y <= reach; ++y)
            for (int x = -reach; x <= reach; ++x) {
                const long long q = (long long)x * x + (long long)y * y;
                if (q <= r1) inner_max = std::max(inner_max, phi({x, y}));
                else if (q > r2 && q <= (long long)std::floor(9 * R * R + 1e-9)) outer_min = std::min(outer_min, phi({x, y}));
            }
        t.annulus = outer_min >= inner_max;
        std::vector<double> psi(domain.size());
        t.localized = true;
        for (std::size_t i = 0; i < domain.size(); ++i) {
            const Site y = domain[i];
            double all = INFINITY, near = INFINITY;
            index.for_each_within(y, 3.0 * R, [&](Site x) {
                const double v = phi(y - x);
                all = std::min(all, v);
                if (distance_sq(x, y) <= r2) near = std::min(near, v);
            });
            psi[i] = all;
            t.localized = t.localized && all == near;
        }
        Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(psi.data(), Eigen::Index(psi.size()));
        const Eigen::VectorXd hpsi = apply_stencil(domain, V, pv);
        t.certificate = hpsi.minCoeff() * R * R;
        t.psi_min = pv.minCoeff();
        t.accepted = t.certificate > 0.0 && t.psi_min >= 1.0 - 1e-12 && t.localized;
        out.trials.push_back(t);
        if (!t.accepted) continue;
        out.psi = std::move(psi);
        out.eps_barrier = t.eps;
        out.certificate = t.certificate;
        out.psi_min = t.psi_min;
        out.psi_max = pv.maxCoeff();
        out.C_log = out.psi_max / std::log(std::max(R, std::numbers::e));
        out.rayleigh_lower = (hpsi.array() / pv.array()).minCoeff();
        out.localized = t.localized;
        out.annulus = t.annulus;
        return out;
    }
    throw ConvergenceError("no barrier parameter in 2^-3..2^-10 gives a positive certificate");
}

struct PrincipalVerdict {
    double R = 0.0;
    double L = 0.0;                 // R^2 log R
    Barrier barrier;
    bool nonnegative = false;       // H_Q^{-1} >= 0 entrywise
    double min_entry = 0.0;
    bool supersolution_found = false;
    double eps_prime = 0.0;
    double C_prime = 0.0;
    bool bounded = false;           // H_Q^{-1}(x,y) <= C' R^2 rho_y(x) everywhere
    double worst_ratio = 0.0;
    double fit_C = 0.0, fit_c = 0.0;  // |H_Q^{-1}(x,y)| <= exp(C L - c |x-y| / L)
    double lambda_min = 0.0;
    bool sandwich_ok = false;       // lambda_min >= min (H psi)/psi
    bool certificate_bound_ok = false;  // lambda_min >= certificate R^-2
    bool holds = false;
};

inline constexpr int kPrincipalEpsExponents[2] = {0, 14};

inline PrincipalVerdict principal_bound_check(const SiteSet& Q, const PotentialField& V, double R_in) {
    require(!Q.empty(), "empty square");
    PrincipalVerdict out;
    out.R = std::max(R_in, 2.0);
    const double R = out.R;
    out.L = R * R * std::log(R);
    const SiteSet X = set_intersection(V.ones(), Q);
    out.barrier = build_barrier(X, R, Q);
    const auto& psi = out.barrier.psi;
    const std::size_t n = Q.size();

    std::vector<double> pot(n);
    std::vector<std::array<long, 4>> nbr(n);
    long long dmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pot[i] = V(Q[i]);
        for (int k = 0; k < 4; ++k) nbr[i][std::size_t(k)] = Q.index_of(Q[i] + kNeighbourOffsets[k]);
        dmax = std::max(dmax, distance_sq(Q[i], Q[0]));
    }
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, distance_sq(Q[i], Q[n - 1]));
    const long long span = (long long)std::ceil(std::sqrt(double(dmax))) * 2 + 2;
    const long long table_size = span * span + 1;

    // rho_y(x) = exp(-eps' |x - y| / L) psi(x); C' R^2 rho_y is a supersolution when
    // H rho_y >= 0 off y and C' R^2 (H rho_y)(y) >= 1
    for (int e = kPrincipalEpsExponents[0]; e <= kPrincipalEpsExponents[1] && !out.supersolution_found; ++e) {
        const double ep = std::ldexp(1.0, -e);
        std::vector<double> w(static_cast<std::size_t>(table_size));
        for (long long q = 0; q < table_size; ++q) w[std::size_t(q)] = std::exp(-ep * std::sqrt(double(q)) / out.L);
        bool ok = true;
        double worst_c = 0.0;
        std::vector<double> rho(n);
        for (std::size_t j = 0; j < n && ok; ++j) {
            for (std::size_t i = 0; i < n; ++i) rho[i] = w[std::size_t(distance_sq(Q[i], Q[j]))] * psi[i];
            for (std::size_t i = 0; i < n; ++i) {
                double h = (4.0 + pot[i]) * rho[i];
                for (long k : nbr[i])
                    if (k >= 0) h -= rho[std::size_t(k)];
                if (i == j) {
                    if (!(h > 0.0)) ok = false;
                    else worst_c = std::max(worst_c, 1.0 / (R * R * h));
                } else if (h < 0.0) {
                    ok = false;
                }
                if (!ok) break;
            }
        }
        if (ok) {
            out.supersolution_found = true;
            out.eps_prime = ep;
            out.C_prime = worst_c;
        }
    }

    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sparse_hamiltonian(Q, V));
    if (ldlt.info() != Eigen::Success) throw NearSingular("H_Q is singular", 0.0, 1.0);
    out.min_entry = INFINITY;
    out.fit_c = out.supersolution_found ? out.eps_prime : 0.0;
    double fit = -INFINITY, worst = 0.0, max_entry = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(Eigen::Index(n));
        e(Eigen::Index(j)) = 1.0;
        const Eigen::VectorXd col = ldlt.solve(e);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = col(Eigen::Index(i));
            const double d = distance(Q[i], Q[j]);
            out.min_entry = std::min(out.min_entry, g);
            max_entry = std::max(max_entry, g);
            if (g > 0.0) fit = std::max(fit, (std::log(g) + out.fit_c * d / out.L) / out.L);
            if (out.supersolution_found) {
                const double bound = out.C_prime * R * R * std::exp(-out.eps_prime * d / out.L) * psi[i];
                worst = std::max(worst, g / bound);
            }
        }
    }
    out.nonnegative = out.min_entry >= -1e-13 * max_entry;
    out.worst_ratio = worst;
    out.bounded = out.supersolution_found && worst <= 1.0 + 1e-9;
    out.fit_C = fit;

    const SparseMatrix H = sparse_hamiltonian(Q, V);
    out.lambda_min = lowest_eigenpairs(H, 1).values(0);
    const double slack = 1e-10 * std::max(1.0, out.lambda_min);
    out.sandwich_ok = out.lambda_min >= out.barrier.rayleigh_lower - slack;
    out.certificate_bound_ok = out.lambda_min >= out.barrier.certificate / (R * R) - slack;
    out.holds = out.nonnegative && out.bounded && out.sandwich_ok && out.certificate_bound_ok;
    return out;
}

}  // namespace andlab
