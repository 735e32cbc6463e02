#include <cmath>
#include <random>

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "phocorr/invariants.hpp"
#include "phocorr/oracle.hpp"

using namespace phocorr;
using doctest::Approx;

namespace
{
    Eigen::MatrixXcd random_matrix(int d, std::mt19937_64& rng)
    {
        std::normal_distribution<double> n;
        Eigen::MatrixXcd m(d, d);
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++)
                m(i, j) = cplx(n(rng), n(rng));
        return m;
    }

    Eigen::MatrixXcd apply_terms(const std::vector<SuperTerm>& terms, const Eigen::MatrixXcd& rho)
    {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
        for (const auto& t : terms)
        {
            Eigen::MatrixXcd x = rho;
            if (t.left.size() != 0)
                x = Eigen::MatrixXcd(t.left) * x;
            if (t.right.size() != 0)
                x = x * Eigen::MatrixXcd(t.right);
            out += t.coef * x;
        }
        return out;
    }

    /// Dense d^2 x d^2 matrix of a superoperator on the full Liouville space.
    Eigen::MatrixXcd dense(const Superoperator& L) { return Eigen::MatrixXcd(L.matrix); }
}

TEST_SUITE("oracle")
{
    TEST_CASE("each bracket converts to its Schroedinger-picture terms")
    {
        std::mt19937_64 rng(29);
        const HilbertLayout h{1, 4, 4};
        const auto c = effective_coefficients(random_params(rng));
        for (const auto& br : reduced_brackets(c))
        {
            CAPTURE(br.name);
            const Eigen::MatrixXcd Q = random_matrix(h.dim(), rng);
            const Eigen::MatrixXcd rho = random_matrix(h.dim(), rng);
            const Eigen::MatrixXcd X = ladder_op(h, br.x);
            Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(h.dim(), h.dim());
            for (const auto& [coef, op] : br.y)
                Y += coef * Eigen::MatrixXcd(ladder_op(h, op));
            const Eigen::MatrixXcd comm = Q * X - X * Q;
            const cplx bracket = br.commutator_first ? (comm * Y * rho).trace() : (Y * comm * rho).trace();
            const cplx via_terms = (Q * apply_terms(bracket_terms(br, h), rho)).trace();
            CHECK(std::abs(bracket - via_terms) < 1e-11 * std::max(1.0, std::abs(bracket)));
        }
    }

    TEST_CASE("reduced generator: trace and Hermiticity preservation")
    {
        std::mt19937_64 rng(31);
        FockConfig cfg;
        cfg.n_a = 3;
        cfg.n_b = 4;
        const auto p = random_params(rng);
        const auto L = reduced_generator(effective_coefficients(p), p.delta1, p.omega_m, cfg);
        const Eigen::MatrixXcd M = dense(L);
        const HilbertLayout& h = L.space.layout();
        // Tr(L E_rc) = 0 for every basis matrix E_rc
        double worst = 0.0;
        for (Eigen::Index col = 0; col < M.cols(); col++)
        {
            cplx tr = 0.0;
            for (int i = 0; i < h.dim(); i++)
                tr += M(static_cast<Eigen::Index>(*L.space.find(i, i)), col);
            worst = std::max(worst, std::abs(tr));
        }
        CHECK(worst < 1e-13);

        const Eigen::MatrixXcd g = random_matrix(h.dim(), rng);
        const DensityMatrix herm{h, g + g.adjoint()};
        CHECK(L.apply(herm).hermiticity_defect() < 1e-13);
        CHECK(L.term_names.size() == 34);
    }

    TEST_CASE("reduced generator matches the moment generator on random states")
    {
        std::mt19937_64 rng(37);
        for (int i = 0; i < 10; i++)
        {
            const auto p = random_params(rng);
            CHECK(fock_generator_defect(effective_coefficients(p), p.delta1, p.omega_m, MomentBasis(4), 3, rng)
                  < 1e-10);
        }
    }

    TEST_CASE("balanced sector is invariant and reproduces the full-space steady state")
    {
        const auto p = reference_params(46.0, 0.5);
        FockConfig cfg;
        cfg.n_a = 4;
        cfg.n_b = 10;
        const auto c = effective_coefficients(p);
        const auto Lf = reduced_generator(c, p.delta1, p.omega_m, cfg, SpaceKind::full);
        const auto Ls = reduced_generator(c, p.delta1, p.omega_m, cfg, SpaceKind::balanced_sector);
        const auto rho0 = vacuum_thermal_state(Lf.space.layout(), p.nbar);
        const auto sf = evolve_to_steady(Lf, rho0);
        const auto ss = evolve_to_steady(Ls, rho0);
        CHECK((sf.density().matrix - ss.density().matrix).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("full model: excited-state decay at 2 gamma")
    {
        ModelParams p;
        p.omega_rabi = 1e-300; // validate() wants a drive; this one is numerically absent
        FockConfig cfg;
        cfg.n_a = 2;
        cfg.n_b = 2;
        const auto L = full_generator(p, cfg);
        const HilbertLayout& h = L.space.layout();
        DensityMatrix rho{h, Eigen::MatrixXcd::Zero(h.dim(), h.dim())};
        rho.matrix(h.index(0, 0, 0), h.index(0, 0, 0)) = 1.0;
        const Eigen::VectorXcd x0 = L.space.vectorize(rho);
        for (double t : {0.1, 0.5, 2.0})
        {
            const Eigen::MatrixXcd prop = (dense(L) * t).exp();
            const DensityMatrix rt = L.space.unvectorize(prop * x0);
            const double pe = rt.matrix(h.index(0, 0, 0), h.index(0, 0, 0)).real();
            CHECK(pe == Approx(std::exp(-2 * p.gamma * t)).epsilon(1e-10));
        }
    }

    TEST_CASE("full model: vacuum x thermal is a fixed point without drive or coupling")
    {
        ModelParams p;
        p.omega_rabi = 1e-300;
        p.kappa_a = 0.1;
        p.kappa_b = 0.02;
        p.gamma_c = 0.3;
        p.nbar = 1.3;
        p.omega_m = 40.0;
        p.delta1 = 35.0;
        FockConfig cfg;
        cfg.n_a = 3;
        cfg.n_b = 12;
        const auto L = full_generator(p, cfg);
        const auto rho = vacuum_thermal_state(L.space.layout(), p.nbar);
        CHECK(L.apply(rho).matrix.cwiseAbs().maxCoeff() < 1e-14);
    }

    TEST_CASE("full model: Lindblad structure")
    {
        const auto p = reference_params(50.0, 0.5);
        FockConfig cfg;
        cfg.n_a = 2;
        cfg.n_b = 3;
        const auto L = full_generator(p, cfg);
        std::mt19937_64 rng(41);
        const HilbertLayout& h = L.space.layout();
        const Eigen::MatrixXcd g = random_matrix(h.dim(), rng);
        const DensityMatrix herm{h, g + g.adjoint()};
        const DensityMatrix out = L.apply(herm);
        CHECK(out.hermiticity_defect() < 1e-12);
        CHECK(std::abs(out.trace()) < 1e-11);
        // a short positive-map step keeps a random state positive
        const DensityMatrix rho{h, random_density(1, h.dim(), h.dim(), rng)};
        const Eigen::MatrixXcd prop = (dense(L) * 0.05).exp();
        CHECK(L.space.unvectorize(prop * L.space.vectorize(rho)).min_eigenvalue() > -1e-9);
        CHECK_THROWS_AS(full_generator(p, FockConfig{1, 4, 1e-4, 48}), std::invalid_argument);
    }

    TEST_CASE("reduced oracle agrees with the moment hierarchy off resonance")
    {
        const auto p = reference_params(45.0, 0.5);
        FockConfig cfg;
        cfg.n_a = 8;
        cfg.n_b = 24;
        cfg.max_cutoff = 96;
        const auto r = oracle_steady(OracleModel::reduced, p, cfg, MomentBasis(4));
        CHECK(r.converged);
        const auto gen = assemble_generator(effective_coefficients(p), p.delta1, p.omega_m, MomentBasis(4));
        const auto m = correlations(steady_state(gen));
        CHECK(r.correlations.mean_a == Approx(m.mean_a).epsilon(1e-5));
        CHECK(r.correlations.mean_b == Approx(m.mean_b).epsilon(1e-5));
        CHECK(*r.correlations.csi == Approx(*m.csi).epsilon(1e-5));
        CHECK(std::abs(r.trace - 1.0) < 1e-9);
    }

    TEST_CASE("moment change metric")
    {
        const MomentBasis basis(4);
        auto a = vacuum_thermal_moments(basis, 1.0);
        auto b = a;
        CHECK(moment_change(a, b, true) == 0.0);
        b.values[static_cast<Eigen::Index>(basis.index_of({0, 0, 1, 1}))] *= 1.01;
        CHECK(moment_change(a, b, true) == Approx(0.01 / 1.01).epsilon(1e-12));
        CHECK(moment_change(a, b, false) >= moment_change(a, b, true));
    }
}
