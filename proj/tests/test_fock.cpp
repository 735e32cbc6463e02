#include <cmath>
#include <random>

#include <doctest.h>

#include "phocorr/fock.hpp"
#include "phocorr/invariants.hpp"
#include "phocorr/observables.hpp"
#include "phocorr/oracle.hpp"

using namespace phocorr;
using doctest::Approx;

TEST_SUITE("fock")
{
    TEST_CASE("ladder operators")
    {
        const HilbertLayout h{2, 3, 4};
        CHECK(h.dim() == 24);
        const Eigen::MatrixXcd a = photon_lowering(h);
        const Eigen::MatrixXcd b = phonon_lowering(h);
        CHECK(a(h.index(1, 1, 2), h.index(1, 2, 2)) == cplx(std::sqrt(2.0)));
        CHECK(b(h.index(0, 0, 2), h.index(0, 0, 3)) == cplx(std::sqrt(3.0)));
        CHECK((a * b - b * a).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::MatrixXcd sm = qubit_lowering(h);
        const Eigen::MatrixXcd sz = qubit_sz(h);
        CHECK(sm(h.index(1, 0, 0), h.index(0, 0, 0)) == cplx(1.0)); // |g><e|
        CHECK(sz(h.index(0, 1, 1), h.index(0, 1, 1)) == cplx(0.5));
        CHECK(sz(h.index(1, 1, 1), h.index(1, 1, 1)) == cplx(-0.5));
        CHECK((sm.adjoint() * sm - sm * sm.adjoint() - 2 * sz).cwiseAbs().maxCoeff() < 1e-15);
        for (int i = 0; i < h.dim(); i++)
            CHECK(h.index(h.qubit_of(i), h.photon_of(i), h.phonon_of(i)) == i);
    }

    TEST_CASE("truncated ladder coefficients")
    {
        CHECK(truncated_ladder_coefficient(2, 1, 1, 5) == Approx(2.0));
        CHECK(truncated_ladder_coefficient(3, 2, 2, 5) == Approx(6.0));
        CHECK(truncated_ladder_coefficient(1, 0, 2, 5) == 0.0);
        CHECK(truncated_ladder_coefficient(4, 1, 0, 5) == 0.0); // raising out of the space
        CHECK(truncated_ladder_coefficient(3, 1, 0, 5) == Approx(2.0));
    }

    TEST_CASE("moments of simple states")
    {
        const MomentBasis basis(4);
        const HilbertLayout h{1, 4, 4};
        DensityMatrix vac{h, Eigen::MatrixXcd::Zero(16, 16)};
        vac.matrix(0, 0) = 1.0;
        const auto mv = fock_moments(vac, basis);
        CHECK(mv.moments(0, 0, 0, 0) == cplx(1.0));
        CHECK(mv.moments.values.tail(69).cwiseAbs().maxCoeff() == 0.0);
        CHECK_FALSE(mv.contaminated);

        DensityMatrix one = vac;
        one.matrix(0, 0) = 0.0;
        one.matrix(h.index(0, 1, 0), h.index(0, 1, 0)) = 1.0;
        const auto m1 = fock_moments(one, basis);
        CHECK(m1.moments(1, 1, 0, 0) == cplx(1.0));
        CHECK(m1.moments(2, 2, 0, 0) == cplx(0.0));
        CHECK(*correlations(m1.moments).g2_photon == 0.0);

        const HilbertLayout big{1, 4, 40};
        const auto th = fock_moments(vacuum_thermal_state(big, 0.5), basis);
        CHECK(std::abs(th.moments(0, 0, 2, 2) - 0.5) < 1e-8);
        CHECK(std::abs(th.moments(0, 0, 1, 1) - 0.5) < 1e-8);
        CHECK_FALSE(th.contaminated);
        const auto small = fock_moments(vacuum_thermal_state(HilbertLayout{1, 2, 6}, 2.0), basis);
        CHECK(small.contaminated);
        CHECK(small.top_phonon > kCutoffContamination);
    }

    TEST_CASE("Liouville spaces round-trip")
    {
        const HilbertLayout h{1, 3, 4};
        std::mt19937_64 rng(1);
        const DensityMatrix rho{h, random_density(3, 4, 3, rng)};
        const auto full = LiouvilleSpace::full(h);
        CHECK(full.is_full());
        CHECK((full.unvectorize(full.vectorize(rho)).matrix - rho.matrix).cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(full.trace(full.vectorize(rho)) - cplx(1.0)) < 1e-14);
        CHECK(full.min_eigenvalue(full.vectorize(rho)) == Approx(rho.min_eigenvalue()).epsilon(1e-10));

        const auto sector = LiouvilleSpace::balanced_sector(h);
        CHECK_FALSE(sector.is_full());
        for (std::size_t i = 0; i < sector.size(); i++)
        {
            const int r = sector.row(i), c = sector.col(i);
            CHECK(h.photon_of(r) - h.photon_of(c) == h.phonon_of(r) - h.phonon_of(c));
            CHECK(sector.find(r, c) == i);
        }
    }

    TEST_CASE("implicit relaxation: stationary input, trace conservation")
    {
        auto p = reference_params(50.0, 1.5);
        p.g = p.lam = 0.0;
        FockConfig cfg;
        cfg.n_a = 3;
        cfg.n_b = 30;
        const auto L = reduced_generator(effective_coefficients(p), p.delta1, p.omega_m, cfg,
                                         SpaceKind::balanced_sector);
        const auto rho0 = vacuum_thermal_state(L.space.layout(), p.nbar);
        const auto ss = evolve_to_steady(L, rho0, {});
        CHECK(ss.steps == 0);
        CHECK((ss.density().matrix - rho0.matrix).cwiseAbs().maxCoeff() < 1e-12);

        const auto q = reference_params(47.0, 0.5);
        cfg.n_a = 6;
        cfg.n_b = 24;
        SteadyOptions opts;
        const auto Lq = reduced_generator(effective_coefficients(q), q.delta1, q.omega_m, cfg,
                                          SpaceKind::balanced_sector);
        const auto s2 = evolve_to_steady(Lq, vacuum_thermal_state(Lq.space.layout(), q.nbar), opts);
        CHECK(s2.steps > 0);
        CHECK(std::abs(s2.trace - 1.0) <= 10 * opts.tol);
        CHECK(s2.residual <= opts.tol);
        CHECK(s2.density().hermiticity_defect() < 1e-12);
    }

    TEST_CASE("preconditioned relaxation agrees with the direct one")
    {
        const auto p = reference_params(49.0, 0.5);
        FockConfig cfg;
        cfg.n_a = 2;
        cfg.n_b = 8;
        auto unshifted = p;
        unshifted.lam = 0.0;
        const auto L = full_generator(p, cfg);
        const auto rho0 = vacuum_thermal_state(L.space.layout(), p.nbar);
        const auto direct = evolve_to_steady(L, rho0);
        const auto krylov = evolve_to_steady(L, full_generator(unshifted, cfg), rho0);
        CHECK((direct.state - krylov.state).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(krylov.min_eigenvalue > -1e-9);
    }

    TEST_CASE("unreachable tolerance reports NoConvergence")
    {
        const auto p = reference_params(47.0, 0.5);
        FockConfig cfg;
        cfg.n_a = 3;
        cfg.n_b = 6;
        const auto L = reduced_generator(effective_coefficients(p), p.delta1, p.omega_m, cfg);
        SteadyOptions opts;
        opts.tol = 1e-30;
        opts.max_steps = 5;
        CHECK_THROWS_AS(evolve_to_steady(L, vacuum_thermal_state(L.space.layout(), p.nbar), opts), NoConvergence);
    }
}
