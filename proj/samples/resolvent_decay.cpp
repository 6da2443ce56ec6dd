// Resolvent decay on a Bernoulli square: fit |R(x,y)| <= e^{A - m|x-y|} for a few
// energies and print a slice of log|R| along the bottom row.
//   sample_resolvent_decay [L] [seed]
#include <andlab/operator.hpp>
#include <andlab/sparse.hpp>

#include <cstdio>
#include <cstdlib>

using namespace andlab;

int main(int argc, char** argv) {
    const int L = argc > 1 ? std::atoi(argv[1]) : 16;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    if (L < 2 || L > 64) {
        std::fprintf(stderr, "L must lie in [2, 64]\n");
        return 64;
    }
    const SiteSet Q = box_sites(0, 0, L, L);
    const auto V = sample_potential(Q, seed);
    std::printf("L = %d, seed = %llu, sites with V = 1: %zu of %zu\n", L, static_cast<unsigned long long>(seed), V.ones().size(),
                Q.size());
    std::printf("%8s %10s %10s\n", "lambda", "A", "m");
    for (double lambda : {0.0, 0.05, 0.1, 0.5, 1.0}) {
        try {
            const auto fit = decay_fit(sparse_resolvent(Q, V, lambda));
            std::printf("%8.3f %10.4f %10.4f\n", lambda, fit.A, fit.m);
        } catch (const NearSingular& e) {
            std::printf("%8.3f  near the spectrum: %s\n", lambda, e.what());
        }
    }
    const SparseResolvent R(sparse_hamiltonian(Q, V), 0.1);
    const Eigen::VectorXd col = R.column(0);
    std::printf("\nlog|R((0,0),(x,0))| at lambda = 0.1\n");
    for (int x = 0; x < L; x += std::max(1, L / 8)) std::printf("  x = %2d  %9.4f\n", x, std::log(std::abs(col(x))));
    return 0;
}
